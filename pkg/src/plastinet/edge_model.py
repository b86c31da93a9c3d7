"""Edge update: a shared GRU over every existing edge.

Each directed edge i->j carries a small state vector; its first channel
doubles as the synaptic weight. The GRU input concatenates both endpoint
node states (already updated this step), both endpoint activations, and
the clipped reward, so the update rule can express reward-modulated
Hebbian-style changes.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError
from .graph import GraphState
from .gru import GruParams, gru_step

REWARD_CLIP = 10.0


def edge_input_dim(dh: int) -> int:
    return 2 * dh + 3


def edge_update(
    p: GruParams, g: GraphState, h_new: np.ndarray, reward: float
) -> np.ndarray:
    """New edge states (N, N, de) float32; entries without an edge are zero."""
    src, dst = np.nonzero(g.adjacency)
    new_e = np.zeros_like(g.edge_states)
    if src.size == 0:
        return new_e
    r = min(max(float(reward), -REWARD_CLIP), REWARD_CLIP)
    dh = h_new.shape[1]
    x = np.empty((src.size, 2 * dh + 3), dtype=np.float32)
    x[:, :dh] = h_new[src]
    x[:, dh : 2 * dh] = h_new[dst]
    x[:, 2 * dh] = g.activations[src]
    x[:, 2 * dh + 1] = g.activations[dst]
    x[:, 2 * dh + 2] = r
    e = g.edge_states[src, dst]
    if not np.isfinite(x).all() or not np.isfinite(e).all():
        raise NumericError("non-finite input to edge update")
    new_e[src, dst] = gru_step(p, e, x)
    return new_e


def weight_of(e_ij: np.ndarray) -> float:
    """Scalar weight carried by one edge state: its first component."""
    return float(e_ij[0])


def masked_weights(edge_states: np.ndarray, adjacency: np.ndarray) -> np.ndarray:
    return (edge_states[:, :, 0] * adjacency).astype(np.float32, copy=False)


def weights_matrix(g: GraphState) -> np.ndarray:
    """Weight matrix (N, N) float32: first edge-state channel, adjacency-masked."""
    return masked_weights(g.edge_states, g.adjacency)
