"""Recurrent activation dynamics, observation normalization, action decoding.

The network has no per-node bias or gain: one step is tanh of the weighted
sum of the previous activations, with the input nodes held at the current
(normalized) observation on both sides of the update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericError

# Version tag for the normalization tables below. Stored in checkpoints:
# trained parameters are meaningless under a different input scaling.
OBS_NORM_VERSION = "1"


@dataclass(frozen=True)
class ActionSpaceSpec:
    """Discrete (cardinality n) or continuous (n dims with box bounds)."""

    kind: str  # "discrete" | "continuous"
    n: int
    low: tuple = field(default=())
    high: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in ("discrete", "continuous"):
            raise ConfigError(f"unknown action space kind {self.kind!r}")
        if self.n < 1:
            raise ConfigError("action space needs at least one action/dim")
        if self.kind == "continuous":
            if len(self.low) != self.n or len(self.high) != self.n:
                raise ConfigError("continuous bounds must match dimension")
            if any(lo >= hi for lo, hi in zip(self.low, self.high)):
                raise ConfigError("continuous bounds need low < high")

    @staticmethod
    def discrete(n: int) -> "ActionSpaceSpec":
        return ActionSpaceSpec(kind="discrete", n=n)

    @staticmethod
    def continuous(bounds) -> "ActionSpaceSpec":
        lows, highs = zip(*bounds)
        return ActionSpaceSpec(
            kind="continuous",
            n=len(lows),
            low=tuple(float(x) for x in lows),
            high=tuple(float(x) for x in highs),
        )


def step_activations(v: np.ndarray, w: np.ndarray, obs: np.ndarray) -> np.ndarray:
    """One recurrent update tanh(v_hat @ w), inputs pinned to the observation.

    ``w[i, j]`` weights the edge i->j, so column j accumulates node j's
    incoming drive. Input nodes (the first len(obs) entries) have no
    in-edges; their activations are the observation itself, enforced on the
    result as well.
    """
    obs = np.asarray(obs, dtype=np.float32)
    n_in = obs.shape[0]
    if not np.isfinite(obs).all():
        raise NumericError("non-finite observation")
    vhat = v.copy()
    vhat[:n_in] = obs
    out = np.tanh(vhat @ w)
    out[:n_in] = obs
    if not np.isfinite(out).all():
        raise NumericError("non-finite activations")
    return out


def normalize_obs(env_kind: str, raw_obs) -> np.ndarray:
    """Squash a raw environment observation into [-1, 1]^n_in, float32.

    Per-environment affine tables (clamp, then divide by the standard
    state bound); part of the checkpoint contract, see OBS_NORM_VERSION.
    """
    raw = np.asarray(raw_obs, dtype=np.float64)
    if env_kind == "cartpole":
        out = np.array(
            [
                raw[0] / 4.8,
                min(max(raw[1], -5.0), 5.0) / 5.0,
                raw[2] / 0.418,
                min(max(raw[3], -5.0), 5.0) / 5.0,
            ]
        )
    elif env_kind == "acrobot":
        out = raw.copy()
        out[4] /= 4.0 * math.pi
        out[5] /= 9.0 * math.pi
    elif env_kind == "pendulum":
        out = raw.copy()
        out[2] /= 8.0
    elif env_kind == "foraging":
        out = raw
    else:
        raise ConfigError(f"unknown environment kind {env_kind!r}")
    return np.clip(out, -1.0, 1.0).astype(np.float32)


def decode_action(v: np.ndarray, spec: ActionSpaceSpec):
    """Action from the last n activations (the output nodes).

    Discrete: argmax, ties to the lowest index. Continuous: linear map of
    each output activation from [-1, 1] onto its [low, high] interval.
    """
    acts = v[-spec.n :]
    if spec.kind == "discrete":
        return int(np.argmax(acts))
    lo = np.asarray(spec.low, dtype=np.float64)
    hi = np.asarray(spec.high, dtype=np.float64)
    return lo + (acts.astype(np.float64) + 1.0) * 0.5 * (hi - lo)
