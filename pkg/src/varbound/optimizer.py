"""Proximal stochastic gradient ascent on the ELBO.

Starting from w = (MAP, 0), each step ascends the Monte Carlo gradient of
E_q f with a fixed step size and then applies the closed-form proximal map
of the log-det entropy to C.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .base_dist import StandardizedBase, make_stream
from .bounds import make_sampler
from .estimators import averaged_gradient
from .locscale import Params, entropy_prox
from .smoothness import derive
from .targets import component_stationary_points, elbo_estimate, find_map

log = logging.getLogger(__name__)

OPT_SAMPLERS = ("batch", "uniform", "proportional", "opt_scalar", "opt_matrix")

# substream tags under the master seed
GRAD_STREAM = 1
ELBO_STREAM = 2


@dataclass
class OptConfig:
    iterations: int = 2000
    step_size: float | None = None  # None: 1 / scalar smoothness of the full target
    grad_samples: int = 1000
    sampler: str = "batch"
    seed: int = 0
    snapshot_every: int = 20
    elbo_samples: int = 1000

    def __post_init__(self):
        if self.step_size is not None and not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.grad_samples < 1 or self.iterations < 0 or self.snapshot_every < 1:
            raise ValueError("grad_samples and snapshot_every must be positive, iterations nonnegative")
        if self.elbo_samples < 2:
            raise ValueError("elbo_samples must be at least 2")
        if self.sampler not in OPT_SAMPLERS:
            raise ValueError(f"unknown sampler {self.sampler!r}; expected one of {OPT_SAMPLERS}")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    w: Params
    elbo_mean: float
    elbo_se: float


class NonFiniteGradientError(RuntimeError):
    def __init__(self, iteration: int, trace: list[TraceRecord]):
        super().__init__(f"non-finite gradient at iteration {iteration}")
        self.iteration = iteration
        self.trace = trace


def _snapshot(target, w, base, config, it):
    if not np.any(w.C):
        # zero scale: the entropy is -inf and so is the ELBO
        return TraceRecord(it, w, -math.inf, 0.0)
    rng = make_stream(config.seed, ELBO_STREAM, it)
    mean, se = elbo_estimate(target, w, base, config.elbo_samples, rng)
    return TraceRecord(it, w, mean, se)


def resolve_step_size(target, config: OptConfig) -> float:
    if config.step_size is not None:
        return config.step_size
    return 1.0 / derive(target).full_scalar


def run(target, base: StandardizedBase, config: OptConfig) -> list[TraceRecord]:
    spec = derive(target)
    step = config.step_size if config.step_size is not None else 1.0 / spec.full_scalar
    zbar = find_map(target)
    zbars = None
    if config.sampler.startswith("opt_"):
        zbars = component_stationary_points(target)
    w = Params.at_point(zbar)
    trace = [_snapshot(target, w, base, config, 0)]
    pi = None
    if config.sampler in ("uniform", "proportional"):
        pi = make_sampler(config.sampler, spec)
    for it in range(1, config.iterations + 1):
        if zbars is not None:
            pi = make_sampler(config.sampler, spec, zbars, w, base.kurtosis)
        rng = make_stream(config.seed, GRAD_STREAM, it)
        gm, gC = averaged_gradient(target, w, base, config.grad_samples, rng, pi)
        if not (np.all(np.isfinite(gm)) and np.all(np.isfinite(gC))):
            raise NonFiniteGradientError(it, trace)
        w = Params(w.m + step * gm, entropy_prox(w.C + step * gC, step))
        if it % config.snapshot_every == 0 or it == config.iterations:
            trace.append(_snapshot(target, w, base, config, it))
            log.debug("iter %d elbo %.6g", it, trace[-1].elbo_mean)
    return trace


def gaussian_kl(w: Params, mu, Sigma) -> float:
    """KL(N(m, C C^T) || N(mu, Sigma)) in nats."""
    mu = np.asarray(mu, dtype=float)
    Sigma = np.asarray(Sigma, dtype=float)
    d = w.d
    S_q = w.C @ w.C.T
    L = np.linalg.cholesky(Sigma)
    sign, logdet_q = np.linalg.slogdet(S_q)
    if sign <= 0:
        raise ValueError("variational covariance is singular")
    logdet_p = 2.0 * np.sum(np.log(np.diag(L)))
    A = np.linalg.solve(L, w.C)
    r = np.linalg.solve(L, w.m - mu)
    return float(0.5 * (np.sum(A * A) + r @ r - d + logdet_p - logdet_q))
