"""Location-scale variational family q_w with w = (m, C), z = C u + m."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base_dist import StandardizedBase


class DegenerateDistributionError(ValueError):
    """Raised when the scale matrix is singular and the entropy is -inf."""


@dataclass(frozen=True)
class Params:
    m: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float).reshape(-1)
        C = np.asarray(self.C, dtype=float)
        if C.shape != (m.size, m.size):
            raise ValueError(f"scale matrix shape {C.shape} does not match location dim {m.size}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "C", C)

    @property
    def d(self) -> int:
        return self.m.size

    @classmethod
    def at_point(cls, zbar) -> "Params":
        """Degenerate (zero-scale) parameters located at ``zbar``."""
        zbar = np.asarray(zbar, dtype=float)
        return cls(zbar.copy(), np.zeros((zbar.size, zbar.size)))

    def flatten(self) -> list[float]:
        """``d, m..., C...`` with C row-major."""
        return [float(self.d), *self.m.tolist(), *self.C.ravel().tolist()]

    @classmethod
    def unflatten(cls, values) -> "Params":
        values = [float(v) for v in values]
        if not values:
            raise ValueError("empty parameter row")
        d = int(values[0])
        if d < 1 or d != values[0] or len(values) != 1 + d + d * d:
            raise ValueError(f"parameter row of length {len(values)} is inconsistent with d={values[0]}")
        m = np.array(values[1 : 1 + d])
        C = np.array(values[1 + d :]).reshape(d, d)
        return cls(m, C)


def transform(w: Params, u: np.ndarray) -> np.ndarray:
    """T_w(u) = C u + m; ``u`` may be a single vector or a (k, d) batch."""
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != w.d:
        raise ValueError(f"u has dimension {u.shape[-1]}, expected {w.d}")
    return u @ w.C.T + w.m


def log_abs_det(C: np.ndarray) -> float:
    sign, logdet = np.linalg.slogdet(C)
    if sign == 0 or not np.isfinite(logdet):
        raise DegenerateDistributionError("scale matrix is singular")
    return float(logdet)


def entropy(w: Params, base: StandardizedBase) -> float:
    return base.entropy(w.d) + log_abs_det(w.C)


def entropy_prox(C: np.ndarray, gamma: float) -> np.ndarray:
    """Proximal map of ``-gamma * log|det C|``.

    Keeps the singular vectors of C and maps each singular value s to
    (s + sqrt(s^2 + 4 gamma)) / 2, the positive root of s'(s' - s) = gamma.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    U, s, Vt = np.linalg.svd(np.asarray(C, dtype=float))
    s_new = 0.5 * (s + np.sqrt(s * s + 4.0 * gamma))
    return (U * s_new) @ Vt


def param_sq_distance(w: Params, zbar) -> tuple[float, float]:
    """(||m - zbar||^2, ||C||_F^2)."""
    zbar = np.asarray(zbar, dtype=float)
    if zbar.shape != w.m.shape:
        raise ValueError(f"zbar has shape {zbar.shape}, expected {w.m.shape}")
    diff = w.m - zbar
    return float(diff @ diff), float(np.sum(w.C * w.C))
