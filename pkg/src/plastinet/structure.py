"""Structural plasticity: learned edge genesis and pruning.

Two tiny MLPs map local state to Bernoulli probabilities: the genesis head
scores every legal missing edge from its endpoint node states, the pruning
head scores every existing edge from its edge state. Decisions for one step
are taken against a snapshot of the adjacency, so an edge can never be both
added and removed within the same step and the outcome does not depend on
any pair ordering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .edge_model import masked_weights
from .graph import GraphState
from .numerics import RngStream, sigmoid


@dataclass
class MlpHead:
    """One-hidden-layer ReLU MLP with a single sigmoid output."""

    w1: np.ndarray  # (hidden, in_dim)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (1, hidden)
    b2: np.ndarray  # (1,)

    @property
    def in_dim(self) -> int:
        return self.w1.shape[1]


@dataclass
class SpParams:
    genesis: MlpHead  # scores (h_i, h_j) pairs, in_dim = 2 * dh
    pruning: MlpHead  # scores edge states, in_dim = de
    enabled: bool = True


def mlp_head_zeros(in_dim: int, hidden: int = 8) -> MlpHead:
    f32 = np.float32
    return MlpHead(
        w1=np.zeros((hidden, in_dim), dtype=f32),
        b1=np.zeros(hidden, dtype=f32),
        w2=np.zeros((1, hidden), dtype=f32),
        b2=np.zeros(1, dtype=f32),
    )


def _head_probs(m: MlpHead, x: np.ndarray) -> np.ndarray:
    """Probabilities (n,) for a batch of inputs (n, in_dim)."""
    hid = np.maximum(x @ m.w1.T + m.b1, 0.0)
    return sigmoid(hid @ m.w2.T + m.b2).ravel()


def synaptogenesis_prob(p: SpParams, h_i: np.ndarray, h_j: np.ndarray) -> float:
    """Probability of creating the directed edge i->j."""
    x = np.concatenate([np.ravel(h_i), np.ravel(h_j)])
    return float(_head_probs(p.genesis, x[None, :])[0])


def pruning_prob(p: SpParams, e_ij: np.ndarray) -> float:
    """Probability of removing an existing edge with state e_ij."""
    return float(_head_probs(p.pruning, np.ravel(e_ij)[None, :])[0])


def apply_structural_step(p: SpParams, g: GraphState, rng: RngStream) -> GraphState:
    """One simultaneous rewiring step; no-op when the heads are disabled.

    All decisions read the pre-step adjacency. Uniform variates are
    consumed in a fixed order — one per legal missing edge (row-major),
    one per existing edge (row-major), then de per newly created edge —
    so the outcome is a pure function of (params, graph, stream).
    """
    if not p.enabled:
        return g
    adj = g.adjacency

    cs, cd = np.nonzero(g.allowed & ~adj)
    if cs.size:
        x = np.concatenate([g.node_states[cs], g.node_states[cd]], axis=1)
        born = rng.uniform(size=cs.size) < _head_probs(p.genesis, x)
        cs, cd = cs[born], cd[born]

    es, ed = np.nonzero(adj)
    if es.size:
        dead = rng.uniform(size=es.size) < _head_probs(p.pruning, g.edge_states[es, ed])
        es, ed = es[dead], ed[dead]

    new_adj = adj.copy()
    new_adj[es, ed] = False
    new_adj[cs, cd] = True
    # Kept edges retain their state; removed edges zero out; added edges
    # (zero pre-step by mask discipline) draw a fresh Uniform(-1,1) state.
    new_e = g.edge_states.copy()
    new_e[es, ed] = 0.0
    new_e[cs, cd] = rng.uniform(-1.0, 1.0, (cs.size, g.de)).astype(np.float32)
    return GraphState(
        adjacency=new_adj,
        node_states=g.node_states,
        edge_states=new_e,
        activations=g.activations,
        weights=masked_weights(new_e, new_adj),
        node_kind=g.node_kind,
        allowed=g.allowed,
    )
