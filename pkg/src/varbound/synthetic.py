"""Seeded synthetic datasets and quadratic constructions."""
from __future__ import annotations

import numpy as np
from scipy.special import expit

from .locscale import Params
from .targets import Dataset, QuadraticTarget


def linear_dataset(N: int, d: int, rng: np.random.Generator, noise_sd: float = 2.0) -> Dataset:
    X = rng.standard_normal((N, d))
    z = rng.standard_normal(d)
    return Dataset(X, X @ z + noise_sd * rng.standard_normal(N))


def logistic_dataset(
    N: int, d: int, rng: np.random.Generator, norm_range: tuple[float, float] | None = None
) -> Dataset:
    """Labels drawn from a logistic model; optionally rescale rows so their
    norms are log-uniform over ``norm_range``."""
    X = rng.standard_normal((N, d))
    if norm_range is not None:
        lo, hi = np.log10(norm_range[0]), np.log10(norm_range[1])
        norms = 10.0 ** rng.uniform(lo, hi, N)
        X *= (norms / np.linalg.norm(X, axis=1))[:, None]
    z = rng.standard_normal(d)
    y = np.where(rng.uniform(size=N) < expit(X @ z), 1.0, -1.0)
    return Dataset(X, y)


def random_psd(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    A = rng.standard_normal((d, rank or d))
    M = A @ A.T / (rank or d)
    return 0.5 * (M + M.T)


def random_params(d: int, rng: np.random.Generator, scale: float = 1.0) -> Params:
    return Params(scale * rng.standard_normal(d), scale * rng.standard_normal((d, d)) / np.sqrt(d))


def quadratic_components(N: int, d: int, rng: np.random.Generator, spread: float = 1.0) -> QuadraticTarget:
    """Sum of N quadratics with random PSD curvatures of varying magnitude."""
    scales = 10.0 ** rng.uniform(-spread, spread, N)
    Ms = np.stack([s * random_psd(d, rng) for s in scales])
    zbars = rng.standard_normal((N, d))
    return QuadraticTarget.from_components(Ms, zbars)
