"""Network state: adjacency, node/edge states, activations and weights.

Node index layout is fixed: inputs first, hidden next, outputs last.
Edges are directed; entry (i, j) of the adjacency matrix means i -> j.
Legal edges run input->hidden, hidden->hidden and hidden->output only;
edge states are zeroed wherever no edge exists.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .numerics import RngStream, sample_truncated_normal

KIND_INPUT = 0
KIND_HIDDEN = 1
KIND_OUTPUT = 2


@dataclass(frozen=True)
class TopologyConfig:
    """Node counts and the initial-density distribution."""

    n_total: int
    n_in: int
    n_out: int
    mu_conn: float = 0.5
    sigma_conn: float = 0.0
    self_loops_allowed: bool = True  # hidden nodes only

    def __post_init__(self):
        if self.n_in < 1 or self.n_out < 1:
            raise ValueError("need at least one input and one output node")
        if self.n_in + self.n_out > self.n_total:
            raise ValueError("n_in + n_out exceeds n_total")
        if not 0.0 <= self.mu_conn <= 1.0:
            raise ValueError("mu_conn must lie in [0, 1]")
        if self.sigma_conn < 0.0:
            raise ValueError("sigma_conn must be non-negative")

    @property
    def n_hidden(self) -> int:
        return self.n_total - self.n_in - self.n_out

    def node_kinds(self) -> np.ndarray:
        kinds = np.full(self.n_total, KIND_HIDDEN, dtype=np.int8)
        kinds[: self.n_in] = KIND_INPUT
        kinds[self.n_total - self.n_out :] = KIND_OUTPUT
        return kinds


def allowed_mask(cfg: TopologyConfig) -> np.ndarray:
    """Boolean N x N mask of legal edge positions."""
    kinds = cfg.node_kinds()
    is_in = kinds == KIND_INPUT
    is_hid = kinds == KIND_HIDDEN
    is_out = kinds == KIND_OUTPUT
    mask = (
        np.outer(is_in, is_hid)
        | np.outer(is_hid, is_hid)
        | np.outer(is_hid, is_out)
    )
    if not cfg.self_loops_allowed:
        np.fill_diagonal(mask, False)
    return mask


@dataclass
class GraphState:
    """Full network state at one point in time.

    ``allowed`` and ``node_kind`` are fixed for the lifetime of a graph and
    shared between copies; everything else is owned per state.
    """

    adjacency: np.ndarray  # bool (N, N)
    node_states: np.ndarray  # float32 (N, dh)
    edge_states: np.ndarray  # float32 (N, N, de)
    activations: np.ndarray  # float32 (N,)
    weights: np.ndarray  # float32 (N, N)
    node_kind: np.ndarray  # int8 (N,)
    allowed: np.ndarray  # bool (N, N)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def dh(self) -> int:
        return self.node_states.shape[1]

    @property
    def de(self) -> int:
        return self.edge_states.shape[2]

    def copy(self) -> "GraphState":
        return replace(
            self,
            adjacency=self.adjacency.copy(),
            node_states=self.node_states.copy(),
            edge_states=self.edge_states.copy(),
            activations=self.activations.copy(),
            weights=self.weights.copy(),
        )


def init_graph(cfg: TopologyConfig, rng: RngStream, dh: int = 8, de: int = 4) -> GraphState:
    """Sample a fresh graph.

    One connection probability p ~ TruncNormal(mu_conn, sigma_conn, 0, 1)
    is drawn per graph; each allowed entry is then Bernoulli(p)
    independently. Node and edge states start i.i.d. Uniform(-1, 1)
    (edge states masked by adjacency); activations start at zero.
    """
    n = cfg.n_total
    allowed = allowed_mask(cfg)
    p = sample_truncated_normal(cfg.mu_conn, cfg.sigma_conn, 0.0, 1.0, rng)
    adjacency = (rng.uniform(size=(n, n)) < p) & allowed
    node_states = rng.uniform(-1.0, 1.0, (n, dh)).astype(np.float32)
    edge_states = rng.uniform(-1.0, 1.0, (n, n, de)).astype(np.float32)
    edge_states[~adjacency] = 0.0
    weights = edge_states[:, :, 0] * adjacency
    return GraphState(
        adjacency=adjacency,
        node_states=node_states,
        edge_states=edge_states,
        activations=np.zeros(n, dtype=np.float32),
        weights=weights,
        node_kind=cfg.node_kinds(),
        allowed=allowed,
    )


def node_structural_features(g: GraphState) -> np.ndarray:
    """Per-node [in, out, total degree (each / N), one-hot kind]; (N, 6) float32."""
    n = g.n
    adj = g.adjacency
    in_deg = adj.sum(axis=0, dtype=np.float32)
    out_deg = adj.sum(axis=1, dtype=np.float32)
    feats = np.empty((n, 6), dtype=np.float32)
    feats[:, 0] = in_deg / n
    feats[:, 1] = out_deg / n
    feats[:, 2] = (in_deg + out_deg) / n
    feats[:, 3] = g.node_kind == KIND_INPUT
    feats[:, 4] = g.node_kind == KIND_HIDDEN
    feats[:, 5] = g.node_kind == KIND_OUTPUT
    return feats


_EYE_CACHE: dict[int, np.ndarray] = {}


def edge_structural_features(g: GraphState) -> np.ndarray:
    """Per-pair [forward bit, backward bit, self-loop bit]; (N, N, 3) float32."""
    n = g.n
    eye = _EYE_CACHE.get(n)
    if eye is None:
        eye = _EYE_CACHE.setdefault(n, np.eye(n, dtype=np.float32))
    feats = np.empty((n, n, 3), dtype=np.float32)
    feats[:, :, 0] = g.adjacency
    feats[:, :, 1] = g.adjacency.T
    feats[:, :, 2] = eye
    return feats


def density(g: GraphState) -> float:
    """Fraction of allowed edge positions that carry an edge."""
    total = int(g.allowed.sum())
    if total == 0:
        return 0.0
    return float(g.adjacency.sum()) / total


def weight_stats(g: GraphState) -> tuple[float, float]:
    """Mean and population variance of the weights on existing edges.

    Both are 0.0 for an edgeless graph.
    """
    w = g.weights[g.adjacency]
    if w.size == 0:
        return 0.0, 0.0
    return float(w.mean()), float(w.var())


def to_snapshot(g: GraphState) -> dict:
    """JSON-serializable snapshot of the full network state."""
    return {
        "adjacency": g.adjacency.astype(int).tolist(),
        "node_states": g.node_states.tolist(),
        "edge_states": g.edge_states.tolist(),
        "activations": g.activations.tolist(),
        "weights": g.weights.tolist(),
        "node_kind": g.node_kind.tolist(),
    }
