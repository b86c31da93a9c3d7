"""Covariance Matrix Adaptation Evolution Strategy (minimization).

Plain ask/tell implementation with the standard constants: log-decreasing
recombination weights over the top half, cumulative step-size adaptation,
and rank-1 plus rank-mu covariance updates. Everything runs in float64.
The eigendecomposition is refreshed after every tell — simple, and cheap
enough at the genome sizes used here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .numerics import RngStream

EIGEN_FLOOR = 1e-20


@dataclass
class CmaState:
    dim: int
    popsize: int
    mean: np.ndarray
    sigma: float
    c_mat: np.ndarray  # covariance C
    eig_basis: np.ndarray  # B: columns are eigenvectors of C
    eig_scale: np.ndarray  # D: sqrt of eigenvalues
    p_sigma: np.ndarray
    p_c: np.ndarray
    generation: int = 0
    best_f: float = math.inf
    best_x: np.ndarray | None = None
    # strategy constants, fixed at init
    mu: int = 0
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    mu_eff: float = 0.0
    c_sigma: float = 0.0
    d_sigma: float = 0.0
    c_c: float = 0.0
    c_1: float = 0.0
    c_mu: float = 0.0
    chi_n: float = 0.0


def cma_init(
    dim: int, sigma0: float, popsize: int, mean0: np.ndarray | None = None
) -> CmaState:
    if dim < 1:
        raise ConfigError("dim must be >= 1")
    if popsize < 4:
        raise ConfigError("population size must be >= 4")
    if sigma0 <= 0.0:
        raise ConfigError("sigma0 must be positive")
    mean = np.zeros(dim) if mean0 is None else np.asarray(mean0, dtype=np.float64).copy()
    if mean.shape != (dim,):
        raise ValueError(f"mean0 must have shape ({dim},)")

    mu = popsize // 2
    raw = np.log((popsize + 1) / 2.0) - np.log(np.arange(1, mu + 1))
    weights = raw / raw.sum()
    mu_eff = 1.0 / float(weights @ weights)
    c_sigma = (mu_eff + 2.0) / (dim + mu_eff + 5.0)
    d_sigma = 1.0 + 2.0 * max(0.0, math.sqrt((mu_eff - 1.0) / (dim + 1.0)) - 1.0) + c_sigma
    c_c = (4.0 + mu_eff / dim) / (dim + 4.0 + 2.0 * mu_eff / dim)
    c_1 = 2.0 / ((dim + 1.3) ** 2 + mu_eff)
    c_mu = min(
        1.0 - c_1,
        2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((dim + 2.0) ** 2 + mu_eff),
    )
    chi_n = math.sqrt(dim) * (1.0 - 1.0 / (4.0 * dim) + 1.0 / (21.0 * dim**2))

    return CmaState(
        dim=dim,
        popsize=popsize,
        mean=mean,
        sigma=float(sigma0),
        c_mat=np.eye(dim),
        eig_basis=np.eye(dim),
        eig_scale=np.ones(dim),
        p_sigma=np.zeros(dim),
        p_c=np.zeros(dim),
        mu=mu,
        weights=weights,
        mu_eff=mu_eff,
        c_sigma=c_sigma,
        d_sigma=d_sigma,
        c_c=c_c,
        c_1=c_1,
        c_mu=c_mu,
        chi_n=chi_n,
    )


def cma_ask(s: CmaState, rng: RngStream) -> np.ndarray:
    """Sample the population, (popsize, dim): mean + sigma * B D z."""
    z = rng.standard_normal((s.popsize, s.dim))
    return s.mean + s.sigma * (z * s.eig_scale) @ s.eig_basis.T


def cma_tell(s: CmaState, pop: np.ndarray, fitnesses: np.ndarray) -> CmaState:
    """Rank-based update (ascending fitness = better); returns the state.

    Ties keep sampling order (stable sort), so any order-preserving
    transformation of the fitness values yields the identical update.
    """
    pop = np.asarray(pop, dtype=np.float64)
    fit = np.asarray(fitnesses, dtype=np.float64).ravel()
    if pop.shape != (s.popsize, s.dim):
        raise ValueError(f"population must have shape {(s.popsize, s.dim)}")
    if fit.shape[0] != s.popsize:
        raise ValueError("one fitness per individual required")

    order = np.argsort(fit, kind="stable")
    if fit[order[0]] < s.best_f:
        s.best_f = float(fit[order[0]])
        s.best_x = pop[order[0]].copy()

    s.generation += 1
    y_sel = (pop[order[: s.mu]] - s.mean) / s.sigma  # (mu, dim)
    y_w = s.weights @ y_sel
    s.mean = s.mean + s.sigma * y_w

    # C^{-1/2} y_w without forming C^{-1/2}
    c_inv_half_yw = s.eig_basis @ ((s.eig_basis.T @ y_w) / s.eig_scale)
    s.p_sigma = (1.0 - s.c_sigma) * s.p_sigma + math.sqrt(
        s.c_sigma * (2.0 - s.c_sigma) * s.mu_eff
    ) * c_inv_half_yw
    ps_norm = float(np.linalg.norm(s.p_sigma))
    s.sigma *= math.exp((s.c_sigma / s.d_sigma) * (ps_norm / s.chi_n - 1.0))

    denom = math.sqrt(1.0 - (1.0 - s.c_sigma) ** (2 * s.generation))
    h_sigma = ps_norm / denom / s.chi_n < 1.4 + 2.0 / (s.dim + 1.0)
    s.p_c = (1.0 - s.c_c) * s.p_c + (
        math.sqrt(s.c_c * (2.0 - s.c_c) * s.mu_eff) * y_w if h_sigma else 0.0
    )
    delta_h = (0.0 if h_sigma else 1.0) * s.c_c * (2.0 - s.c_c)

    rank_mu = (s.weights[:, None] * y_sel).T @ y_sel
    s.c_mat = (
        (1.0 - s.c_1 - s.c_mu) * s.c_mat
        + s.c_1 * (np.outer(s.p_c, s.p_c) + delta_h * s.c_mat)
        + s.c_mu * rank_mu
    )
    s.c_mat = 0.5 * (s.c_mat + s.c_mat.T)

    eigvals, s.eig_basis = np.linalg.eigh(s.c_mat)
    s.eig_scale = np.sqrt(np.maximum(eigvals, EIGEN_FLOOR))
    return s
