"""Deterministic random streams and small numeric primitives.

Model state is kept in float32 throughout the package; the evolution
strategy works in float64. Samplers return float64 and callers cast.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import NormalDist

import numpy as np
from scipy.special import expit

from .errors import NumericError

_STD_NORMAL = NormalDist()

# Below this acceptance ratio, rejection sampling for the truncated normal
# is abandoned in favour of the inverse-CDF route.
_MIN_ACCEPT = 0.01
_MAX_REJECT_DRAWS = 1024


class RngStream:
    """Splittable counter-based random stream.

    A stream is identified by (seed, lineage). The same pair always yields
    the same draw sequence, and children derived via :meth:`child` or
    :meth:`split` depend only on the lineage, never on draws made from the
    parent before or after the split.
    """

    __slots__ = ("seed", "lineage", "_gen")

    def __init__(self, seed: int, lineage: tuple[int, ...] = ()):
        seed = int(seed)
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = seed
        self.lineage = tuple(int(i) for i in lineage)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.lineage)
        self._gen = np.random.Generator(np.random.Philox(ss))

    def child(self, index: int) -> "RngStream":
        return RngStream(self.seed, self.lineage + (index,))

    def split(self, n: int) -> list["RngStream"]:
        return [self.child(i) for i in range(n)]

    # Draw primitives; these advance this stream only.
    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def standard_normal(self, size=None):
        return self._gen.standard_normal(size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def __repr__(self):  # pragma: no cover - debugging aid
        return f"RngStream(seed={self.seed}, lineage={self.lineage})"


def make_rng(seed: int) -> RngStream:
    """Root stream for a non-negative seed; same seed, same sequence."""
    return RngStream(seed)


def derive_seed(seed: int, *path: int) -> int:
    """Stable 128-bit sub-seed for (seed, path).

    Used to hand independent integer seeds to rollouts indexed by
    (generation, individual) so that results do not depend on evaluation
    order or worker scheduling.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    a, b = ss.generate_state(2, np.uint64)
    return (int(a) << 64) | int(b)


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular factor L; the implied covariance L @ L.T is PSD."""

    lower: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.lower)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("Cholesky factor must be a square matrix")
        object.__setattr__(self, "lower", np.tril(arr))

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


def sample_truncated_normal(mu: float, sigma: float, lo: float, hi: float, rng: RngStream) -> float:
    """One draw from Normal(mu, sigma) conditioned on [lo, hi].

    Rejection sampling, falling back to the inverse CDF when the acceptance
    region is narrow. sigma == 0 returns clamp(mu, lo, hi) exactly.
    """
    if lo > hi:
        raise ValueError(f"invalid bounds: lo={lo} > hi={hi}")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return float(min(max(mu, lo), hi))
    a = _STD_NORMAL.cdf((lo - mu) / sigma)
    b = _STD_NORMAL.cdf((hi - mu) / sigma)
    accept = b - a
    if accept >= _MIN_ACCEPT:
        for _ in range(_MAX_REJECT_DRAWS):
            x = rng.normal(mu, sigma)
            if lo <= x <= hi:
                return float(x)
    if accept <= 0.0:
        # Bounds are many standard deviations from mu; the mass is
        # numerically zero and the nearest bound is the limit value.
        return float(min(max(mu, lo), hi))
    u = rng.uniform(a, b)
    u = min(max(u, 1e-15), 1.0 - 1e-15)
    x = mu + sigma * _STD_NORMAL.inv_cdf(u)
    return float(min(max(x, lo), hi))


def sample_mvn(chol, rng: RngStream) -> np.ndarray:
    """Draw from N(0, L @ L.T) as L @ z with z i.i.d. standard normal."""
    lower = chol.lower if isinstance(chol, CholeskyFactor) else np.asarray(chol)
    z = rng.standard_normal(lower.shape[0])
    return lower @ z


def softmax(logits, axis: int = -1) -> np.ndarray:
    """Shift-invariant softmax computed in float64.

    Raises NumericError on non-finite input.
    """
    x = np.asarray(logits, dtype=np.float64)
    if x.size == 0:
        raise ValueError("softmax requires at least one entry")
    if not np.isfinite(x).all():
        raise NumericError("non-finite input to softmax")
    x = x - x.max(axis=axis, keepdims=True)
    e = np.exp(x)
    return e / e.sum(axis=axis, keepdims=True)


def sigmoid(x):
    """Numerically stable logistic; preserves float dtype, never overflows."""
    return expit(np.asarray(x))
