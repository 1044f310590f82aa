"""Closed-form bounds on the expected squared norm E||g||^2 of RP gradients.

With kappa the fourth moment of the standardized base, d the dimension,
w = (m, C) and zbar a stationary point of f:

    scalar    M^2 ((d+1) ||m - zbar||^2 + (d+kappa) ||C||_F^2)
    friendly  (d+kappa) M^2 (||m - zbar||^2 + ||C||_F^2)
    matrix    (d+1) ||M (m - zbar)||^2 + (d+kappa) ||M C||_F^2

Under subsampling with n ~ pi, each component contributes its own term
divided by pi(n). Every bound is tight for quadratic targets.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .locscale import Params, param_sq_distance
from .smoothness import SmoothnessSpec

SAMPLER_LABELS = ("uniform", "proportional", "opt_scalar", "opt_matrix")
# total bound mass below which pi* is replaced by uniform
_DEGENERATE_MASS = 1e-30


@dataclass(frozen=True)
class SamplerDist:
    weights: np.ndarray
    label: str

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size < 1 or not np.all(w > 0):
            raise ValueError("sampling weights must be strictly positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"sampling weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "weights", w)

    @property
    def N(self) -> int:
        return self.weights.size


def _normalized(v: np.ndarray) -> np.ndarray:
    w = v / v.sum()
    # one renormalization pass keeps the sum within an ulp or two of 1
    return w / w.sum()


def uniform_sampler(N: int) -> SamplerDist:
    if N < 1:
        raise ValueError("N must be positive")
    return SamplerDist(np.full(N, 1.0 / N), "uniform")


def proportional_sampler(spec: SmoothnessSpec) -> SamplerDist:
    """pi(n) proportional to the scalar smoothness constant of component n."""
    return SamplerDist(_normalized(np.asarray(spec.component_scalars, dtype=float)), "proportional")


def esn_bound_scalar(M: float, w: Params, zbar, kappa: float) -> float:
    dm, dc = param_sq_distance(w, zbar)
    d = w.d
    return M * M * ((d + 1) * dm + (d + kappa) * dc)


def esn_bound_friendly(M: float, w: Params, zbar, kappa: float) -> float:
    dm, dc = param_sq_distance(w, zbar)
    return (w.d + kappa) * M * M * (dm + dc)


def esn_bound_matrix(M: np.ndarray, w: Params, zbar, kappa: float) -> float:
    M = np.asarray(M, dtype=float)
    if M.shape != (w.d, w.d):
        raise ValueError(f"smoothness matrix has shape {M.shape}, expected {(w.d, w.d)}")
    r = M @ (w.m - np.asarray(zbar, dtype=float))
    MC = M @ w.C
    d = w.d
    return float((d + 1) * (r @ r) + (d + kappa) * np.sum(MC * MC))


def variance_lower_bound_matrix(M: np.ndarray, w: Params, zbar, kappa: float) -> float:
    """Single-target (N = 1) form of :func:`variance_lower_bound`."""
    M = np.asarray(M, dtype=float)
    r = M @ (w.m - np.asarray(zbar, dtype=float))
    MC = M @ w.C
    return float(w.d * (r @ r) + (w.d + kappa - 1) * np.sum(MC * MC))


def _component_norms(spec: SmoothnessSpec, zbars, w: Params, mode: str):
    """Per-component (location, scale) squared norms entering the bounds."""
    zbars = np.asarray(zbars, dtype=float)
    if zbars.shape != (spec.n_components, w.d):
        raise ValueError(
            f"expected {spec.n_components} stationary points of dim {w.d}, got shape {zbars.shape}"
        )
    diff = w.m - zbars
    if mode == "matrix":
        r = np.einsum("nij,nj->ni", spec.component_matrices, diff)
        MC = np.einsum("nij,jk->nik", spec.component_matrices, w.C)
        return np.sum(r * r, axis=1), np.sum(MC * MC, axis=(1, 2))
    if mode == "scalar":
        M2 = spec.component_scalars**2
        return M2 * np.sum(diff * diff, axis=1), M2 * np.sum(w.C * w.C)
    raise ValueError(f"mode must be 'scalar' or 'matrix', got {mode!r}")


def component_terms(spec: SmoothnessSpec, zbars, w: Params, kappa: float, mode: str = "matrix") -> np.ndarray:
    loc, scale = _component_norms(spec, zbars, w, mode)
    return (w.d + 1) * loc + (w.d + kappa) * scale


def _check_pi(spec, pi):
    if pi.N != spec.n_components:
        raise ValueError(f"sampler has {pi.N} weights for {spec.n_components} components")


def esn_bound_subsampled(
    spec: SmoothnessSpec, zbars, pi: SamplerDist, w: Params, kappa: float, mode: str = "matrix"
) -> float:
    _check_pi(spec, pi)
    return float(np.sum(component_terms(spec, zbars, w, kappa, mode) / pi.weights))


def esn_bound_subsampled_friendly(spec: SmoothnessSpec, zbars, pi: SamplerDist, w: Params, kappa: float) -> float:
    """Subsampled analogue of the friendly bound: (d+1) relaxed to (d+kappa)."""
    _check_pi(spec, pi)
    loc, scale = _component_norms(spec, zbars, w, "scalar")
    return float(np.sum((w.d + kappa) * (loc + scale) / pi.weights))


def variance_lower_bound(spec: SmoothnessSpec, zbars, pi: SamplerDist, w: Params, kappa: float) -> float:
    """tr V[g] attained by the quadratic construction is at least this value."""
    _check_pi(spec, pi)
    loc, scale = _component_norms(spec, zbars, w, "matrix")
    return float(np.sum((w.d * loc + (w.d + kappa - 1) * scale) / pi.weights))


def optimal_sampler(spec: SmoothnessSpec, zbars, w: Params, kappa: float, mode: str = "matrix") -> SamplerDist:
    """pi*(n) proportional to the square root of the n-th bound term."""
    terms = component_terms(spec, zbars, w, kappa, mode)
    label = f"opt_{mode}"
    if terms.sum() <= _DEGENERATE_MASS:
        return SamplerDist(np.full(terms.size, 1.0 / terms.size), label)
    root = np.sqrt(np.maximum(terms, 0.0))
    # pi must stay strictly positive; components with a zero term get a floor
    floor = 1e-300 if np.all(root > 0) else root.max() * 1e-12
    return SamplerDist(_normalized(np.maximum(root, floor)), label)


def make_sampler(label: str, spec: SmoothnessSpec, zbars=None, w: Params | None = None, kappa: float = 3.0) -> SamplerDist:
    if label == "uniform":
        return uniform_sampler(spec.n_components)
    if label == "proportional":
        return proportional_sampler(spec)
    if label in ("opt_scalar", "opt_matrix"):
        if zbars is None or w is None:
            raise ValueError(f"{label} needs stationary points and parameters")
        return optimal_sampler(spec, zbars, w, kappa, label.split("_")[1])
    raise ValueError(f"unknown sampler {label!r}; expected one of {SAMPLER_LABELS}")
