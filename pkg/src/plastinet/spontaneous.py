"""Spontaneous pre-experience activity: a learnable OU input generator.

Before an agent ever sees the environment, its input nodes can be driven
for a number of steps by a discrete Ornstein-Uhlenbeck process whose mean,
per-dimension time constants, and noise Cholesky factor are all part of
the genome. This pre-experience phase runs the exact same step function
as environment interaction (observation swapped for the OU sample, reward
fixed at zero), letting the rewiring rules organize the network before
any feedback exists.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .numerics import RngStream, sample_mvn, sigmoid


@dataclass
class OuParams:
    mu: np.ndarray  # (do,) learnable mean
    raw_alpha: np.ndarray  # (do,) unconstrained; sigmoid -> time constants
    chol: np.ndarray  # (do, do) lower-triangular noise factor
    sa_steps: int = 0  # length of the pre-experience phase

    @property
    def alpha(self) -> np.ndarray:
        """Mean-reversion rates in (0, 1)."""
        return sigmoid(self.raw_alpha)

    @property
    def dim(self) -> int:
        return self.mu.shape[0]


def ou_zeros(do: int, sa_steps: int = 0) -> OuParams:
    return OuParams(
        mu=np.zeros(do, dtype=np.float32),
        raw_alpha=np.zeros(do, dtype=np.float32),
        chol=np.zeros((do, do), dtype=np.float32),
        sa_steps=sa_steps,
    )


def ou_step(p: OuParams, o: np.ndarray, rng: RngStream) -> np.ndarray:
    """o + alpha*(mu - o) + L z, clamped to the valid observation box."""
    out = o + p.alpha * (p.mu - o) + sample_mvn(p.chol, rng)
    return np.clip(out, -1.0, 1.0).astype(np.float32)


def run_sa_phase(state, params, rng: RngStream):
    """Drive the agent for ``sa_steps`` full steps from self-generated input.

    The OU state starts at its mean. Each step consumes, in order, the OU
    noise draw and then whatever the shared step function draws; actions
    are computed and discarded, and the reward channel is held at zero.
    Returns the developed agent state (identity when sa_steps = 0).
    """
    from . import agent  # deferred: agent composes this module

    ou = params.ou
    if ou.sa_steps <= 0:
        return state
    o = ou.mu.astype(np.float32, copy=True)
    for _ in range(ou.sa_steps):
        o = ou_step(ou, o, rng)
        _, state = agent.agent_step(state, params, o, 0.0, rng, develop=True)
    return replace(state, ou_state=o)
