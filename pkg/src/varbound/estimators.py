"""Reparameterization gradient estimators and their Monte Carlo measurement."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .base_dist import StandardizedBase, make_stream
from .bounds import SamplerDist
from .locscale import Params, transform

CHUNK_SIZE = 10_000


@dataclass(frozen=True)
class GradSample:
    gm: np.ndarray
    gC: np.ndarray

    @property
    def sq_norm(self) -> float:
        return float(self.gm @ self.gm + np.sum(self.gC * self.gC))


def rp_gradient(target, w: Params, u) -> GradSample:
    """Gradient of f(C u + m) with respect to (m, C)."""
    u = np.asarray(u, dtype=float)
    gamma = target.grad(transform(w, u))
    return GradSample(gamma, np.outer(gamma, u))


def subsampled_gradient(target, w: Params, u, n: int, pi: SamplerDist) -> GradSample:
    """Gradient of f_n(C u + m) / pi(n) with respect to (m, C)."""
    u = np.asarray(u, dtype=float)
    if pi.N != target.n_components:
        raise ValueError("sampler size does not match the number of components")
    gamma = target.component_grad(n, transform(w, u)) / pi.weights[n]
    return GradSample(gamma, np.outer(gamma, u))


def draw_path_gradients(target, w: Params, base: StandardizedBase, k: int, rng, pi: SamplerDist | None = None):
    """k independent estimator draws as (gamma, u); the C-gradient is gamma u^T."""
    u = base.sample(rng, (k, w.d))
    z = transform(w, u)
    if pi is None:
        return target.grad(z), u
    idx = rng.choice(pi.N, size=k, p=pi.weights)
    return target.component_grad(idx, z) / pi.weights[idx][:, None], u


@dataclass(frozen=True)
class EsnResult:
    esn_mean: float
    esn_se: float
    trace_variance: float
    mean_gm: np.ndarray
    mean_gC: np.ndarray
    se_gm: np.ndarray
    se_gC: np.ndarray
    n_samples: int

    @property
    def mean_sq_norm(self) -> float:
        return float(self.mean_gm @ self.mean_gm + np.sum(self.mean_gC**2))


class _Moments:
    """Running count, mean and sum of squared deviations (Chan's merge)."""

    def __init__(self, n, mean, m2):
        self.n, self.mean, self.m2 = n, mean, m2

    @classmethod
    def of(cls, x):
        mean = x.mean(axis=0)
        return cls(x.shape[0], mean, np.sum((x - mean) ** 2, axis=0))

    def merge(self, other):
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.n / n)
        m2 = self.m2 + other.m2 + delta**2 * (self.n * other.n / n)
        return _Moments(n, mean, m2)

    def se(self):
        return np.sqrt(self.m2 / (self.n - 1) / self.n)


def _chunk_stats(target, w, base, pi, k, rng):
    gamma, u = draw_path_gradients(target, w, base, k, rng, pi)
    gC = gamma[:, :, None] * u[:, None, :]
    flat = np.concatenate([gamma, gC.reshape(k, -1)], axis=1)
    sq = np.sum(flat * flat, axis=1)
    return _Moments.of(sq), _Moments.of(flat)


def empirical_esn(
    target,
    w: Params,
    base: StandardizedBase,
    pi: SamplerDist | None,
    n_samples: int,
    seed: int,
    key: tuple[int, ...] = (),
    workers: int = 1,
    chunk_size: int = CHUNK_SIZE,
) -> EsnResult:
    """Monte Carlo E||g||^2, its standard error, and the plug-in tr V[g].

    Samples are drawn in fixed-size chunks; chunk j uses substream
    (seed, *key, j) and partial moments are merged in chunk order, so the
    result does not depend on ``workers``.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    sizes = [chunk_size] * (n_samples // chunk_size)
    if n_samples % chunk_size:
        sizes.append(n_samples % chunk_size)

    def run(j):
        return _chunk_stats(target, w, base, pi, sizes[j], make_stream(seed, *key, j))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(j) for j in range(len(sizes))]
    sq, flat = parts[0]
    for sq_j, flat_j in parts[1:]:
        sq, flat = sq.merge(sq_j), flat.merge(flat_j)

    d = w.d
    mean_sq_norm = float(flat.mean @ flat.mean)
    esn_mean = float(sq.mean)
    se = flat.se()
    return EsnResult(
        esn_mean=esn_mean,
        esn_se=float(sq.se()),
        trace_variance=esn_mean - mean_sq_norm,
        mean_gm=flat.mean[:d],
        mean_gC=flat.mean[d:].reshape(d, d),
        se_gm=se[:d],
        se_gC=se[d:].reshape(d, d),
        n_samples=n_samples,
    )


def averaged_gradient(target, w: Params, base: StandardizedBase, k: int, rng, pi: SamplerDist | None = None):
    """Mean of k estimator draws, as (grad wrt m, grad wrt C)."""
    gamma, u = draw_path_gradients(target, w, base, k, rng, pi)
    return gamma.mean(axis=0), gamma.T @ u / k

