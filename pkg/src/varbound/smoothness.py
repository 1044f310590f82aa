"""Scalar and matrix smoothness certificates for targets.

A target f is M-matrix-smooth when ||grad f(y) - grad f(z)|| <= ||M (y - z)||
for all y, z. For a GLM with an isotropic Gaussian prior and a link whose
second derivative is bounded by c in magnitude,

    M   = I / sigma2 + c sum_n x_n x_n^T
    M_n = I / (N sigma2) + c x_n x_n^T

with c = 1/rho2 for linear regression and c = 1/4 for logistic regression.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .targets import GlmTarget, QuadraticTarget, UnsupportedModelError, find_map


def spectral_norm(M: np.ndarray, tol: float = 1e-12, max_iter: int = 100_000) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration.

    Deterministic start: the all-ones vector with a small ramp added so that
    it is not orthogonal to the top eigenvector of common structured
    matrices (e.g. eigenvectors like (1, -1)).
    """
    M = np.asarray(M, dtype=float)
    d = M.shape[0]
    if not np.any(M):
        return 0.0
    v = np.ones(d) + np.linspace(0.0, 0.5, d)
    v /= np.linalg.norm(v)
    lam = float(v @ M @ v)
    for _ in range(max_iter):
        Mv = M @ v
        norm = np.linalg.norm(Mv)
        if norm == 0.0:
            return 0.0
        v = Mv / norm
        lam_new = float(v @ M @ v)
        if abs(lam_new - lam) <= tol * abs(lam_new):
            return lam_new
        lam = lam_new
    return lam


@dataclass(frozen=True)
class SmoothnessSpec:
    full_matrix: np.ndarray
    full_scalar: float
    component_matrices: np.ndarray  # (N, d, d)
    component_scalars: np.ndarray  # (N,)

    @property
    def n_components(self) -> int:
        return self.component_scalars.size

    @property
    def d(self) -> int:
        return self.full_matrix.shape[0]


def derive(target) -> SmoothnessSpec:
    if isinstance(target, GlmTarget):
        X = target.dataset.X
        N, d = X.shape
        c = target.curvature
        eye = np.eye(d)
        full = eye / target.sigma2 + c * X.T @ X
        comps = eye / (N * target.sigma2) + c * np.einsum("ni,nj->nij", X, X)
        # rank-one plus identity: the top eigenvalue is exact in closed form
        scalars = 1.0 / (target.sigma2 * N) + c * np.sum(X * X, axis=1)
        return SmoothnessSpec(full, spectral_norm(full), comps, scalars)
    if isinstance(target, QuadraticTarget):
        comps = target.Ms.copy()
        scalars = np.array([spectral_norm(Mn) for Mn in comps])
        return SmoothnessSpec(target.M.copy(), spectral_norm(target.M), comps, scalars)
    raise UnsupportedModelError(f"no smoothness certificate for {type(target).__name__}")


@dataclass(frozen=True)
class SmoothnessReport:
    violations: int
    max_ratio: float
    trials: int


def verify_matrix_smoothness(
    target,
    M: np.ndarray,
    trials: int,
    radius: float | None = None,
    rng: np.random.Generator | None = None,
    center: np.ndarray | None = None,
    slack: float = 1e-9,
) -> SmoothnessReport:
    """Empirically test ||grad f(y) - grad f(z)|| <= ||M (y - z)|| on random pairs.

    Pairs are drawn uniformly from a ball around ``center`` (the MAP by
    default) of the given radius (default 10 (1 + ||center||)).
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    rng = np.random.default_rng(0) if rng is None else rng
    center = find_map(target) if center is None else np.asarray(center, dtype=float)
    if radius is None:
        radius = 10.0 * (1.0 + np.linalg.norm(center))
    d = target.d

    def ball(k):
        v = rng.standard_normal((k, d))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        r = radius * rng.uniform(size=(k, 1)) ** (1.0 / d)
        return center + r * v

    y, z = ball(trials), ball(trials)
    lhs = np.linalg.norm(target.grad(y) - target.grad(z), axis=1)
    rhs = np.linalg.norm((y - z) @ np.asarray(M).T, axis=1)
    both_zero = (lhs == 0) & (rhs == 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(both_zero, 0.0, lhs / rhs)
    violations = int(np.sum(lhs > rhs * (1.0 + slack)))
    return SmoothnessReport(violations, float(np.max(ratio)), trials)
