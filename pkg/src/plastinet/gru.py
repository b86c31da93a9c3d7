"""Minimal gated recurrent cell, shared by the node and edge models.

One parameter set is applied to a whole batch of units (all nodes, or all
existing edges). Gate rows are stacked in the order update (z), reset (r),
candidate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import sigmoid


@dataclass
class GruParams:
    w_x: np.ndarray  # (3*hidden, in_dim) input weights, rows z|r|candidate
    w_h: np.ndarray  # (3*hidden, hidden) recurrent weights, same order
    b: np.ndarray  # (3*hidden,)

    @property
    def hidden(self) -> int:
        return self.w_h.shape[1]

    @property
    def in_dim(self) -> int:
        return self.w_x.shape[1]


def gru_zeros(in_dim: int, hidden: int) -> GruParams:
    return GruParams(
        w_x=np.zeros((3 * hidden, in_dim), dtype=np.float32),
        w_h=np.zeros((3 * hidden, hidden), dtype=np.float32),
        b=np.zeros(3 * hidden, dtype=np.float32),
    )


def gru_step(p: GruParams, h: np.ndarray, x: np.ndarray) -> np.ndarray:
    """One recurrent update for a batch: h, x of shape (B, hidden), (B, in_dim).

    z = sig(Wz x + Uz h + bz); r = sig(Wr x + Ur h + br)
    cand = tanh(Wh x + Uh (r * h) + bh); h' = (1 - z) * h + z * cand

    With all parameters zero this reduces to h' = 0.5 * h exactly.
    """
    H = p.hidden
    gx = x @ p.w_x.T
    gx += p.b
    zr = gx[:, : 2 * H]
    zr += h @ p.w_h[: 2 * H].T
    zr = sigmoid(zr)
    z = zr[:, :H]
    r = zr[:, H:]
    cand = np.tanh(gx[:, 2 * H :] + (r * h) @ p.w_h[2 * H :].T)
    # (1 - z) h + z cand, written with one fewer temporary
    return h + z * (cand - h)
