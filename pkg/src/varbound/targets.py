"""Log-density targets f(z) = sum_n f_n(z) with exact gradients and Hessians.

All targets are concave log-densities: Bayesian linear and logistic
regression with an isotropic Gaussian prior, and quadratic targets
f(z) = -1/2 (z - zbar)^T M (z - zbar) built for tightness checks.

Functions of ``z`` accept a single (d,) point or a (k, d) batch and return
scalars or arrays with the batch axis first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .base_dist import StandardizedBase
from .locscale import Params, entropy, transform

LOG_2PI = math.log(2.0 * math.pi)


class UnsupportedModelError(ValueError):
    pass


class MapConvergenceError(RuntimeError):
    def __init__(self, best: np.ndarray, residual: float):
        super().__init__(f"stationary-point search did not converge (gradient norm {residual:.3e})")
        self.best = best
        self.residual = residual


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.ndim != 2 or X.shape[1] < 1:
            raise ValueError(f"X must be an N x d matrix with d >= 1, got shape {X.shape}")
        if X.shape[0] != y.size:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.size} labels")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def N(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def _as_batch(z, d):
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    zb = np.atleast_2d(z)
    if zb.shape[-1] != d:
        raise ValueError(f"z has dimension {zb.shape[-1]}, expected {d}")
    return zb, single


def _index_array(n, N):
    idx = np.asarray(n)
    if not np.issubdtype(idx.dtype, np.integer):
        raise TypeError("component index must be an integer")
    if np.any(idx < 0) or np.any(idx >= N):
        raise IndexError(f"component index out of range for {N} components")
    return idx


def log_sigmoid(t):
    return -np.logaddexp(0.0, -t)


class GlmTarget:
    """Bayesian GLM: N(z | 0, sigma2 I) prod_n p(y_n | z, x_n).

    Components split the prior evenly: f_n = log p(z)/N + log p(y_n | z, x_n).
    """

    def __init__(self, kind: str, dataset: Dataset, sigma2: float = 1.0, rho2: float = 4.0):
        if kind not in ("linear", "logistic"):
            raise UnsupportedModelError(f"unknown GLM kind {kind!r}")
        if not sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if kind == "linear" and not rho2 > 0:
            raise ValueError("rho2 must be positive")
        if kind == "logistic" and not np.all(np.isin(dataset.y, (-1.0, 1.0))):
            raise ValueError("logistic labels must be exactly -1 or +1")
        self.kind = kind
        self.dataset = dataset
        self.sigma2 = float(sigma2)
        self.rho2 = float(rho2)

    @property
    def d(self) -> int:
        return self.dataset.d

    @property
    def n_components(self) -> int:
        return self.dataset.N

    @property
    def curvature(self) -> float:
        """Upper bound on |phi''| of the per-datum link: 1/rho2 or 1/4."""
        return 1.0 / self.rho2 if self.kind == "linear" else 0.25

    def _log_prior(self, zb):
        d = self.d
        return -0.5 * np.sum(zb * zb, axis=1) / self.sigma2 - 0.5 * d * (LOG_2PI + math.log(self.sigma2))

    def _loglik_terms(self, t, y):
        """Per-datum log-likelihood as a function of the linear predictor t."""
        if self.kind == "linear":
            r = y - t
            return -0.5 * r * r / self.rho2 - 0.5 * (LOG_2PI + math.log(self.rho2))
        return log_sigmoid(y * t)

    def _dloglik(self, t, y):
        """Derivative of the per-datum log-likelihood wrt the linear predictor."""
        if self.kind == "linear":
            return (y - t) / self.rho2
        return y * expit(-y * t)

    def _d2loglik(self, t, y):
        if self.kind == "linear":
            return np.full_like(t, -1.0 / self.rho2)
        s = expit(y * t)
        return -s * (1.0 - s)

    def log_density(self, z):
        zb, single = _as_batch(z, self.d)
        X, y = self.dataset.X, self.dataset.y
        out = self._log_prior(zb)
        if self.n_components:
            out = out + np.sum(self._loglik_terms(zb @ X.T, y), axis=1)
        return float(out[0]) if single else out

    def grad(self, z):
        zb, single = _as_batch(z, self.d)
        X, y = self.dataset.X, self.dataset.y
        g = -zb / self.sigma2
        if self.n_components:
            t = zb @ X.T
            g = g + self._dloglik(t, y) @ X
        return g[0] if single else g

    def hessian(self, z):
        z = np.asarray(z, dtype=float)
        X, y = self.dataset.X, self.dataset.y
        w = self._d2loglik(X @ z, y)
        return -np.eye(self.d) / self.sigma2 + (X.T * w) @ X

    def component_log_density(self, n, z):
        zb, single = _as_batch(z, self.d)
        N = self.n_components
        idx = np.broadcast_to(_index_array(n, N), zb.shape[:1])
        X, y = self.dataset.X[idx], self.dataset.y[idx]
        out = self._log_prior(zb) / N + self._loglik_terms(np.sum(X * zb, axis=1), y)
        return float(out[0]) if single else out

    def component_grad(self, n, z):
        zb, single = _as_batch(z, self.d)
        N = self.n_components
        idx = np.broadcast_to(_index_array(n, N), zb.shape[:1])
        X, y = self.dataset.X[idx], self.dataset.y[idx]
        t = np.sum(X * zb, axis=1)
        g = -zb / (N * self.sigma2) + self._dloglik(t, y)[:, None] * X
        return g[0] if single else g

    def component_hessian(self, n, z):
        N = self.n_components
        _index_array(n, N)
        x, yn = self.dataset.X[n], self.dataset.y[n]
        z = np.asarray(z, dtype=float)
        w = float(self._d2loglik(np.array([x @ z]), np.array([yn]))[0])
        return -np.eye(self.d) / (N * self.sigma2) + w * np.outer(x, x)


class QuadraticTarget:
    """f(z) = -1/2 (z - zbar)^T M (z - zbar), or a sum of such components."""

    def __init__(self, M, zbar, components=None):
        M = np.asarray(M, dtype=float)
        zbar = np.asarray(zbar, dtype=float).reshape(-1)
        _check_psd(M)
        if M.shape != (zbar.size, zbar.size):
            raise ValueError("M and zbar dimensions disagree")
        self.M = M
        self.zbar = zbar
        if components is None:
            self.Ms = M[None]
            self.zbars = zbar[None]
        else:
            Ms, zbars = components
            self.Ms = np.asarray(Ms, dtype=float)
            self.zbars = np.asarray(zbars, dtype=float)
            for Mn in self.Ms:
                _check_psd(Mn)

    @classmethod
    def from_components(cls, Ms, zbars) -> "QuadraticTarget":
        Ms = np.asarray(Ms, dtype=float)
        zbars = np.asarray(zbars, dtype=float)
        if Ms.ndim != 3 or zbars.shape != Ms.shape[:2]:
            raise ValueError("components need shapes (N, d, d) and (N, d)")
        M = Ms.sum(axis=0)
        rhs = np.einsum("nij,nj->i", Ms, zbars)
        zbar = np.linalg.lstsq(M, rhs, rcond=None)[0]
        return cls(0.5 * (M + M.T), zbar, components=(Ms, zbars))

    @property
    def d(self) -> int:
        return self.zbar.size

    @property
    def n_components(self) -> int:
        return self.Ms.shape[0]

    def log_density(self, z):
        zb, single = _as_batch(z, self.d)
        out = np.zeros(zb.shape[0])
        for Mn, zn in zip(self.Ms, self.zbars):
            r = zb - zn
            out -= 0.5 * np.einsum("ki,ij,kj->k", r, Mn, r)
        return float(out[0]) if single else out

    def grad(self, z):
        zb, single = _as_batch(z, self.d)
        g = np.zeros_like(zb)
        for Mn, zn in zip(self.Ms, self.zbars):
            g -= (zb - zn) @ Mn.T
        return g[0] if single else g

    def hessian(self, z=None):
        return -self.Ms.sum(axis=0)

    def component_log_density(self, n, z):
        zb, single = _as_batch(z, self.d)
        idx = np.broadcast_to(_index_array(n, self.n_components), zb.shape[:1])
        r = zb - self.zbars[idx]
        out = -0.5 * np.einsum("ki,kij,kj->k", r, self.Ms[idx], r)
        return float(out[0]) if single else out

    def component_grad(self, n, z):
        zb, single = _as_batch(z, self.d)
        idx = np.broadcast_to(_index_array(n, self.n_components), zb.shape[:1])
        g = -np.einsum("kij,kj->ki", self.Ms[idx], zb - self.zbars[idx])
        return g[0] if single else g

    def component_hessian(self, n, z=None):
        _index_array(n, self.n_components)
        return -self.Ms[n]


def _check_psd(M):
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("M must be square")
    if not np.allclose(M, M.T, rtol=0, atol=1e-12 * max(1.0, np.abs(M).max(initial=0.0))):
        raise ValueError("M must be symmetric")
    if M.size and np.linalg.eigvalsh(M).min() < -1e-10 * max(1.0, np.abs(M).max()):
        raise ValueError("M must be positive semidefinite")


def _newton_ascent(f, g, H, z0, tol, max_iter=500):
    """Damped Newton ascent on a concave f with a gradient-ascent fallback."""
    z = np.array(z0, dtype=float)
    fz, gz = f(z), g(z)
    best, best_res = z.copy(), float(np.linalg.norm(gz))
    for _ in range(max_iter):
        res = float(np.linalg.norm(gz))
        if res < best_res:
            best, best_res = z.copy(), res
        if res <= tol:
            return z
        try:
            step = np.linalg.solve(-H(z), gz)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(-H(z), gz, rcond=None)[0]
        if not np.all(np.isfinite(step)) or step @ gz <= 0:
            step = gz
        t = 1.0
        while t > 1e-14:
            z_new = z + t * step
            f_new, g_new = f(z_new), g(z_new)
            if f_new >= fz + 1e-4 * t * (step @ gz) or np.linalg.norm(g_new) < res:
                break
            t *= 0.5
        else:
            break
        z, fz, gz = z_new, f_new, g_new
    res = float(np.linalg.norm(gz))
    if res <= tol:
        return z
    if res < best_res:
        best, best_res = z, res
    raise MapConvergenceError(best, best_res)


def _default_tol(d):
    return 1e-8 * math.sqrt(d)


def find_map(target, tol: float | None = None) -> np.ndarray:
    """Maximizer of the target log-density (its unique stationary point)."""
    tol = _default_tol(target.d) if tol is None else tol
    return _newton_ascent(target.log_density, target.grad, target.hessian, np.zeros(target.d), tol)


def find_component_stationary(target, n: int, tol: float | None = None) -> np.ndarray:
    tol = _default_tol(target.d) if tol is None else tol
    if isinstance(target, QuadraticTarget):
        _index_array(n, target.n_components)
        # PSD M_n may be singular; zbar_n is a stationary point regardless
        return target.zbars[n].copy()
    return _newton_ascent(
        lambda z: target.component_log_density(n, z),
        lambda z: target.component_grad(n, z),
        lambda z: target.component_hessian(n, z),
        np.zeros(target.d),
        tol,
    )


def component_stationary_points(target, tol: float | None = None) -> np.ndarray:
    return np.stack([find_component_stationary(target, n, tol) for n in range(target.n_components)])


def _require_linear(target):
    if not (isinstance(target, GlmTarget) and target.kind == "linear"):
        raise UnsupportedModelError("closed-form posterior is only available for linear regression")


def exact_posterior(target: GlmTarget) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian posterior (mu, Sigma) of Bayesian linear regression."""
    _require_linear(target)
    X, y = target.dataset.X, target.dataset.y
    b, c = 1.0 / target.rho2, 1.0 / target.sigma2
    precision = b * X.T @ X + c * np.eye(target.d)
    L = np.linalg.cholesky(precision)
    Linv = np.linalg.solve(L, np.eye(target.d))
    Sigma = Linv.T @ Linv
    Sigma = 0.5 * (Sigma + Sigma.T)
    mu = np.linalg.solve(precision, b * X.T @ y)
    return mu, Sigma


def log_marginal_likelihood(target: GlmTarget) -> float:
    """log N(y | 0, sigma2 X X^T + rho2 I), evaluated in d dimensions.

    Uses the matrix determinant lemma and Woodbury so the N x N covariance
    is never formed.
    """
    _require_linear(target)
    X, y = target.dataset.X, target.dataset.y
    N, d = X.shape
    s2, r2 = target.sigma2, target.rho2
    A = np.eye(d) + (s2 / r2) * X.T @ X
    L = np.linalg.cholesky(A)
    logdet = N * math.log(r2) + 2.0 * np.sum(np.log(np.diag(L)))
    Xty = X.T @ y
    v = np.linalg.solve(L, Xty)
    quad = (y @ y - (s2 / r2) * (v @ v)) / r2
    return float(-0.5 * (N * LOG_2PI + logdet + quad))


def elbo_estimate(
    target,
    w: Params,
    base: StandardizedBase,
    n_samples: int,
    stream: np.random.Generator,
) -> tuple[float, float]:
    """Monte Carlo E_q f(z) plus the exact entropy; se covers the f-part only."""
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    h = entropy(w, base)
    u = base.sample(stream, (n_samples, w.d))
    vals = target.log_density(transform(w, u))
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(n_samples))
    return mean + h, se
