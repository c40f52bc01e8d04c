"""Noise-free Gaussian-process regression with a diagonal Gaussian kernel.

The kernel is ``K(a, b) = exp(-0.5 * (a - b)^T diag(theta)^-1 (a - b))``; note
``theta`` enters as a per-dimension variance, not a length-scale. Hyper-
parameters are fixed inputs and never optimized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

DEFAULT_JITTER = 1e-8


class GpFitError(RuntimeError):
    """Cholesky factorization of the training kernel failed."""


@dataclass(frozen=True)
class GpHyper:
    theta: np.ndarray
    mu: float = 0.0

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=np.float64))
        if theta.ndim != 1 or not np.all(np.isfinite(theta)) or np.any(theta <= 0):
            raise ValueError(f"theta must be finite and strictly positive, got {theta}")
        object.__setattr__(self, "theta", theta)


def _as_points(a, d: int | None = None) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if d is not None and a.shape[1] != d:
        raise ValueError(f"expected {d} columns, got {a.shape[1]}")
    return a


def kernel_matrix(a, b, hyper: GpHyper) -> np.ndarray:
    d = hyper.theta.size
    a = _as_points(a, d) / np.sqrt(hyper.theta)
    b = _as_points(b, d) / np.sqrt(hyper.theta)
    sq = (a[:, None, :] - b[None, :, :]) ** 2
    return np.exp(-0.5 * sq.sum(axis=2))


@dataclass(frozen=True)
class GpPosterior:
    train_points: np.ndarray
    train_targets: np.ndarray
    kernel_factor: np.ndarray  # lower Cholesky factor of K_SS + jitter I
    alpha: np.ndarray  # (K_SS + jitter I)^-1 (y - mu)
    hyper: GpHyper
    jitter: float


def gp_fit(points, targets, hyper: GpHyper, jitter: float = DEFAULT_JITTER) -> GpPosterior:
    pts = _as_points(points, hyper.theta.size)
    y = np.asarray(targets, dtype=np.float64).ravel()
    if pts.shape[0] < 1:
        raise ValueError("need at least one training point")
    if y.size != pts.shape[0]:
        raise ValueError(f"{pts.shape[0]} points but {y.size} targets")
    if jitter < 0:
        raise ValueError(f"jitter must be >= 0, got {jitter}")
    k = kernel_matrix(pts, pts, hyper) + jitter * np.eye(pts.shape[0])
    try:
        factor = linalg.cholesky(k, lower=True)
    except linalg.LinAlgError as exc:
        cond = np.linalg.cond(k)
        raise GpFitError(
            f"kernel matrix of {pts.shape[0]} points not positive definite "
            f"(condition number {cond:.3e}, jitter {jitter:g})"
        ) from exc
    alpha = linalg.cho_solve((factor, True), y - hyper.mu)
    return GpPosterior(pts, y, factor, alpha, hyper, jitter)


def gp_predict(post: GpPosterior, query, hyper: GpHyper | None = None):
    """Posterior mean and variance at ``query`` points."""
    hyper = post.hyper if hyper is None else hyper
    q = _as_points(query, post.train_points.shape[1])
    k_qs = kernel_matrix(q, post.train_points, hyper)
    means = hyper.mu + k_qs @ post.alpha
    v = linalg.solve_triangular(post.kernel_factor, k_qs.T, lower=True)
    variances = np.maximum(1.0 - np.einsum("ij,ij->j", v, v), 0.0)
    return means, variances


# --- theorem preconditions -----------------------------------------------------------


@dataclass(frozen=True)
class TheoremParams:
    """Cluster geometry for the 1-D diversified-vs-greedy MSE bound."""

    d_radii: tuple[float, ...]
    delta: float
    tau: float
    theta: float

    @property
    def m(self) -> int:
        return len(self.d_radii)


@dataclass(frozen=True)
class TheoremReport:
    separated: bool  # delta > 2 d_m
    not_dominated: bool  # d_m^2 <= tau * sum_{j<m} d_j^2
    radius_gap: bool  # d_m^2 >= d_{m-1}^2 + 4 log theta
    delta_large_enough: bool
    delta_threshold: float
    r_m: float
    mse_ratio_bound: float

    @property
    def all_hold(self) -> bool:
        return self.separated and self.not_dominated and self.radius_gap and self.delta_large_enough


def mse_ratio_bound(r_m: float, tau: float) -> float:
    """Lower bound on MSE(greedy) / MSE(diversified): (1+r^2)/(2(1+tau)(1-r)) - 8/3."""
    return (1.0 + r_m**2) / (2.0 * (1.0 + tau) * (1.0 - r_m)) - 8.0 / 3.0


def check_theorem_conditions(p: TheoremParams) -> TheoremReport:
    if not p.theta > 0:
        raise ValueError(f"theta must be > 0, got {p.theta}")
    d = np.asarray(p.d_radii, dtype=np.float64)
    if d.size < 2:
        raise ValueError("need at least two clusters")
    if np.any(np.diff(d) < 0):
        raise ValueError(f"d_radii must be ascending, got {p.d_radii}")
    m = d.size
    d_m = d[-1]
    r_m = math.exp(-(d_m**2) / (2.0 * p.theta))
    threshold = d_m + max(
        math.sqrt(d_m**2 + p.theta * math.log(9 * m)),
        2.0 * p.theta * math.log(3.0 * math.sqrt(m) / (1.0 - r_m)),
    )
    return TheoremReport(
        separated=bool(p.delta > 2 * d_m),
        not_dominated=bool(d_m**2 <= p.tau * np.sum(d[:-1] ** 2)),
        radius_gap=bool(d_m**2 >= d[-2] ** 2 + 4.0 * math.log(p.theta)),
        delta_large_enough=bool(p.delta >= threshold),
        delta_threshold=threshold,
        r_m=r_m,
        mse_ratio_bound=mse_ratio_bound(r_m, p.tau),
    )
