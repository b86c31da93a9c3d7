"""Node update: one edge-modulated attention layer feeding a shared GRU.

Every node attends over all N nodes. Attention logits combine query, key
and a projection of the pair's edge features multiplicatively, so pairs
without an edge still interact through their structural bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import graph as graph_mod
from .errors import NumericError
from .gru import GruParams, gru_step
from .numerics import softmax


@dataclass
class GtParams:
    """Attention-layer parameters, one leading axis per head."""

    w_q: np.ndarray  # (heads, d_head, d_node_in)
    w_k: np.ndarray  # (heads, d_head, d_node_in)
    w_v: np.ndarray  # (heads, d_head, d_node_in)
    w_e: np.ndarray  # (heads, d_head, d_edge_in)
    w_o: np.ndarray  # (d_out, heads * d_head)
    b_o: np.ndarray  # (d_out,)

    @property
    def n_heads(self) -> int:
        return self.w_q.shape[0]

    @property
    def d_head(self) -> int:
        return self.w_q.shape[1]

    @property
    def d_out(self) -> int:
        return self.w_o.shape[0]


def gt_zeros(n_heads: int, d_head: int, d_node_in: int, d_edge_in: int, d_out: int) -> GtParams:
    f32 = np.float32
    return GtParams(
        w_q=np.zeros((n_heads, d_head, d_node_in), dtype=f32),
        w_k=np.zeros((n_heads, d_head, d_node_in), dtype=f32),
        w_v=np.zeros((n_heads, d_head, d_node_in), dtype=f32),
        w_e=np.zeros((n_heads, d_head, d_edge_in), dtype=f32),
        w_o=np.zeros((d_out, n_heads * d_head), dtype=f32),
        b_o=np.zeros(d_out, dtype=f32),
    )


def gt_forward(
    p: GtParams,
    node_in: np.ndarray,
    edge_in: np.ndarray,
    return_attention: bool = False,
):
    """Attention layer output, (N, d_out) float32 bounded by tanh.

    Per head: logit(i, j) = sum_d q_i,d * k_j,d * g_ij,d / sqrt(d_head)
    with g the projected edge features; rows are softmax-normalized over
    all j and mix the value projections.
    """
    if not np.isfinite(node_in).all() or not np.isfinite(edge_in).all():
        raise NumericError("non-finite input to attention layer")
    n = node_in.shape[0]
    # (heads, N, d_head) each
    q = np.matmul(node_in, p.w_q.transpose(0, 2, 1))
    k = np.matmul(node_in, p.w_k.transpose(0, 2, 1))
    v = np.matmul(node_in, p.w_v.transpose(0, 2, 1))
    # (heads, N, N, d_head)
    g = np.matmul(edge_in[None, :, :, :], p.w_e.transpose(0, 2, 1)[:, None, :, :])
    logits = np.einsum("hid,hjd,hijd->hij", q, k, g) / math.sqrt(p.d_head)
    attn = softmax(logits, axis=-1)  # float64 rows summing to 1
    mixed = np.matmul(attn, v)  # (heads, N, d_head)
    concat = mixed.transpose(1, 0, 2).reshape(n, p.n_heads * p.d_head)
    out = np.tanh(concat @ p.w_o.T + p.b_o).astype(np.float32)
    if return_attention:
        return out, attn
    return out


def node_update(gt: GtParams, gru: GruParams, g: graph_mod.GraphState) -> np.ndarray:
    """New node states (N, dh): GRU over the attention output.

    Attention input per node is [activation, state, structural features];
    per pair it is [edge state, structural bits].
    """
    node_in = np.concatenate(
        [g.activations[:, None], g.node_states, graph_mod.node_structural_features(g)],
        axis=1,
    )
    edge_in = np.concatenate(
        [g.edge_states, graph_mod.edge_structural_features(g)], axis=2
    )
    x = gt_forward(gt, node_in, edge_in)
    return gru_step(gru, g.node_states, x)
