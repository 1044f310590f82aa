"""Invariant checks run by ``varbound selftest`` and the acceptance suite.

Each check compares an implementation route against an independent one
(closed form vs. Monte Carlo, gradients vs. smoothness inequality, ...)
and returns a :class:`CheckResult`. Sizes default to the full acceptance
settings; the quick profile shrinks the Monte Carlo budgets.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from . import bounds
from .base_dist import GAUSSIAN, StandardizedBase, make_stream
from .bounds import optimal_sampler, uniform_sampler
from .diagnostics import DIAG_SAMPLERS, diagnose
from .estimators import empirical_esn, rp_gradient
from .locscale import Params, transform
from .optimizer import OptConfig, gaussian_kl, run
from .smoothness import derive, verify_matrix_smoothness
from .synthetic import (
    linear_dataset,
    logistic_dataset,
    quadratic_components,
    random_params,
    random_psd,
)
from .targets import (
    GlmTarget,
    QuadraticTarget,
    elbo_estimate,
    exact_posterior,
    find_map,
    log_marginal_likelihood,
)

MOMENT_BASES = (StandardizedBase("gaussian"), StandardizedBase("uniform"), StandardizedBase("student_t", 10.0))


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        info = ", ".join(f"{k}={_short(v)}" for k, v in self.detail.items())
        return f"[{status}] {self.name} ({self.seconds:.1f}s) {info}"


def _short(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _random_target(kind, d, rng):
    if kind == "quadratic":
        return QuadraticTarget(random_psd(d, rng), rng.standard_normal(d))
    N = int(rng.integers(1, 30))
    data = linear_dataset(N, d, rng) if kind == "linear" else logistic_dataset(N, d, rng)
    return GlmTarget(kind, data)


@_timed
def norm_factorization(n_triples=100, dims=(1, 3, 13), seed=0, tol=1e-12) -> CheckResult:
    """||grad_w f(T_w(u))||^2 == ||grad f(z)||^2 (1 + ||u||^2) exactly."""
    rng = np.random.default_rng(seed)
    kinds = ("linear", "logistic", "quadratic")
    worst = 0.0
    for i in range(n_triples):
        d = dims[i % len(dims)]
        target = _random_target(kinds[i % 3], d, rng)
        w = random_params(d, rng, scale=float(rng.uniform(0.1, 3.0)))
        u = rng.standard_normal(d)
        g = rp_gradient(target, w, u)
        gz = target.grad(transform(w, u))
        expected = float(gz @ gz) * (1.0 + float(u @ u))
        if expected == 0.0:
            err = abs(g.sq_norm)
        else:
            err = abs(g.sq_norm - expected) / expected
        worst = max(worst, err)
    return CheckResult("A1 norm_factorization", worst <= tol, {"max_rel_err": worst, "triples": n_triples})


@_timed
def moment_identity(n_points=10, d=5, n_samples=1_000_000, seed=1, z_slack=4.0) -> CheckResult:
    """MC mean of ||T_w(u) - zbar||^2 (1 + ||u||^2) vs (d+1)||m-zbar||^2 + (d+kappa)||C||_F^2."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for b, base in enumerate(MOMENT_BASES):
        for i in range(n_points):
            w = random_params(d, rng)
            zbar = rng.standard_normal(d)
            dm = float(np.sum((w.m - zbar) ** 2))
            dc = float(np.sum(w.C**2))
            expected = (d + 1) * dm + (d + base.kurtosis) * dc
            stream = make_stream(seed, 10 + b, i)
            total, total_sq, n_done = 0.0, 0.0, 0
            while n_done < n_samples:
                k = min(200_000, n_samples - n_done)
                u = base.sample(stream, (k, d))
                r = transform(w, u) - zbar
                v = np.sum(r * r, axis=1) * (1.0 + np.sum(u * u, axis=1))
                total += v.sum()
                total_sq += (v * v).sum()
                n_done += k
            mean = total / n_samples
            se = math.sqrt(max(total_sq / n_samples - mean * mean, 0.0) / (n_samples - 1))
            worst = max(worst, abs(mean - expected) / se)
    return CheckResult(
        "A2 moment_identity", worst <= z_slack, {"max_abs_z": worst, "cases": n_points * len(MOMENT_BASES)}
    )


@_timed
def batch_tightness(d=5, n_samples=1_000_000, seed=2, rel_tol=0.02) -> CheckResult:
    """Quadratic targets attain the scalar and matrix ESN bounds."""
    rng = np.random.default_rng(seed)
    kappa = GAUSSIAN.kurtosis
    detail = {}
    ok = True
    M_scalar = 2.5
    cases = {
        "scalar": QuadraticTarget(M_scalar * np.eye(d), rng.standard_normal(d)),
        "matrix": QuadraticTarget(random_psd(d, rng), rng.standard_normal(d)),
    }
    for j, (name, target) in enumerate(cases.items()):
        w = random_params(d, rng)
        est = empirical_esn(target, w, GAUSSIAN, None, n_samples, seed, key=(j,))
        if name == "scalar":
            bound = bounds.esn_bound_scalar(M_scalar, w, target.zbar, kappa)
        else:
            bound = bounds.esn_bound_matrix(target.M, w, target.zbar, kappa)
        rel = abs(est.esn_mean / bound - 1.0)
        detail[f"{name}_rel_err"] = rel
        ok &= rel <= rel_tol
    return CheckResult("A3 batch_tightness", ok, detail)


def _subsampled_construction(seed, N=10, d=5):
    rng = np.random.default_rng(seed)
    target = quadratic_components(N, d, rng)
    spec = derive(target)
    w = random_params(d, rng)
    return target, spec, w


def _closed_form_gradient(target, w):
    gm = -np.einsum("nij,nj->i", target.Ms, w.m - target.zbars)
    gC = -target.Ms.sum(axis=0) @ w.C
    return gm, gC


@_timed
def subsampled_tightness(N=10, d=5, n_samples=1_000_000, seed=3, rel_tol=0.02, z_slack=4.0) -> CheckResult:
    """Quadratic components attain the subsampled bound; the estimator is unbiased."""
    target, spec, w = _subsampled_construction(seed, N, d)
    kappa = GAUSSIAN.kurtosis
    gm_true, gC_true = _closed_form_gradient(target, w)
    detail, ok = {}, True
    samplers = {"uniform": uniform_sampler(N), "opt_matrix": optimal_sampler(spec, target.zbars, w, kappa)}
    for j, (name, pi) in enumerate(samplers.items()):
        est = empirical_esn(target, w, GAUSSIAN, pi, n_samples, seed, key=(j,))
        bound = bounds.esn_bound_subsampled(spec, target.zbars, pi, w, kappa, "matrix")
        rel = abs(est.esn_mean / bound - 1.0)
        z = np.concatenate(
            [np.abs(est.mean_gm - gm_true) / est.se_gm, (np.abs(est.mean_gC - gC_true) / est.se_gC).ravel()]
        )
        detail[f"{name}_rel_err"] = rel
        detail[f"{name}_max_z"] = float(z.max())
        ok &= rel <= rel_tol and z.max() <= z_slack
    return CheckResult("A4 subsampled_tightness", ok, detail)


@_timed
def variance_sandwich(N=10, d=5, n_samples=1_000_000, seed=3, z_slack=4.0) -> CheckResult:
    """Empirical tr V lies between the variance lower bound and the ESN bound."""
    target, spec, w = _subsampled_construction(seed, N, d)
    kappa = GAUSSIAN.kurtosis
    detail, ok = {}, True
    samplers = {"uniform": uniform_sampler(N), "opt_matrix": optimal_sampler(spec, target.zbars, w, kappa)}
    for j, (name, pi) in enumerate(samplers.items()):
        est = empirical_esn(target, w, GAUSSIAN, pi, n_samples, seed + 100, key=(j,))
        upper = bounds.esn_bound_subsampled(spec, target.zbars, pi, w, kappa, "matrix")
        lower = bounds.variance_lower_bound(spec, target.zbars, pi, w, kappa)
        tv, se = est.trace_variance, est.esn_se
        detail[f"{name}_lower"] = lower
        detail[f"{name}_trV"] = tv
        detail[f"{name}_upper"] = upper
        ok &= lower - z_slack * se <= tv <= upper + z_slack * se
    return CheckResult("A5 variance_sandwich", ok, detail)


@_timed
def smoothness_validity(trials=10_000, radius=10.0, seed=4, slack=1e-9) -> CheckResult:
    """Derived matrix certificates hold; linear regression attains them exactly."""
    rng = np.random.default_rng(seed)
    logistic = GlmTarget("logistic", logistic_dataset(200, 10, rng))
    linear = GlmTarget("linear", linear_dataset(200, 10, rng))
    rep_log = verify_matrix_smoothness(
        logistic, derive(logistic).full_matrix, trials, radius, np.random.default_rng(seed), slack=slack
    )
    rep_lin = verify_matrix_smoothness(
        linear, derive(linear).full_matrix, trials, radius, np.random.default_rng(seed + 1), slack=slack
    )
    ok = rep_log.violations == 0 and rep_log.max_ratio <= 1.0 + slack and abs(rep_lin.max_ratio - 1.0) <= slack
    return CheckResult(
        "A6 smoothness_validity",
        ok,
        {
            "logistic_violations": rep_log.violations,
            "logistic_max_ratio": rep_log.max_ratio,
            "linear_max_ratio": rep_lin.max_ratio,
        },
    )


def _fit_and_diagnose(kind, seed, N, d, iterations, snapshot_every, mc_samples):
    rng = np.random.default_rng(seed)
    data = linear_dataset(N, d, rng) if kind == "linear" else logistic_dataset(N, d, rng, norm_range=(0.3, 3.0))
    target = GlmTarget(kind, data)
    cfg = OptConfig(iterations=iterations, snapshot_every=snapshot_every, grad_samples=200, seed=seed, elbo_samples=200)
    trace = run(target, GAUSSIAN, cfg)
    residual = float(np.linalg.norm(target.grad(find_map(target))))
    return diagnose(target, GAUSSIAN, trace, DIAG_SAMPLERS, mc_samples, seed), residual, d


def bound_ordering_violations(rows, z_slack=4.0, map_residual=0.0, d=1) -> list[str]:
    """Rows breaking empirical <= matrix <= scalar <= friendly or pi* optimality.

    The batch bound is anchored at a numerically computed MAP whose gradient
    norm is ``map_residual`` rather than 0; by Minkowski's inequality this
    moves sqrt(E||g||^2) by at most map_residual * sqrt(1 + d).
    """
    problems = []
    for r in rows:
        tag = f"iter {r['iteration']} {r['sampler']}"
        emp = max(r["esn_empirical"] - z_slack * r["esn_se"], 0.0)
        shift = map_residual * math.sqrt(1 + d) if r["sampler"] == "batch" else 0.0
        if math.sqrt(emp) > math.sqrt(r["bound_matrix"]) + shift:
            problems.append(f"{tag}: empirical above matrix bound")
        if r["bound_matrix"] > r["bound_scalar"] * (1 + 1e-12):
            problems.append(f"{tag}: matrix bound above scalar bound")
        if r["bound_scalar"] > r["bound_friendly"] * (1 + 1e-12):
            problems.append(f"{tag}: scalar bound above friendly bound")
    by_iter = {}
    for r in rows:
        by_iter.setdefault(r["iteration"], {})[r["sampler"]] = r["bound_matrix"]
    for it, b in by_iter.items():
        if "opt_matrix" in b:
            for other in ("uniform", "proportional"):
                if other in b and b["opt_matrix"] > b[other] * (1 + 1e-12):
                    problems.append(f"iter {it}: opt_matrix bound above {other}")
    return problems


@_timed
def bound_ordering(N=100, d=5, iterations=200, snapshot_every=50, mc_samples=10_000, seed=5) -> CheckResult:
    """empirical <= matrix <= scalar <= friendly, and pi* beats the heuristics."""
    problems, n_rows = [], 0
    for kind in ("linear", "logistic"):
        rows, residual, d = _fit_and_diagnose(kind, seed, N, d, iterations, snapshot_every, mc_samples)
        n_rows += len(rows)
        problems += [f"{kind} {p}" for p in bound_ordering_violations(rows, map_residual=residual, d=d)]
    return CheckResult("A7 bound_ordering", not problems, {"rows": n_rows, "violations": len(problems)})


@_timed
def posterior_oracle(N=50, d=5, iterations=2000, elbo_samples=100_000, seed=6, kl_tol=0.1, z_slack=3.0) -> CheckResult:
    """ELBO at the exact posterior equals the evidence; prox-SGD reaches it."""
    rng = np.random.default_rng(seed)
    target = GlmTarget("linear", linear_dataset(N, d, rng), sigma2=1.0, rho2=4.0)
    mu, Sigma = exact_posterior(target)
    log_z = log_marginal_likelihood(target)
    w_star = Params(mu, np.linalg.cholesky(Sigma))
    elbo, se = elbo_estimate(target, w_star, GAUSSIAN, elbo_samples, make_stream(seed, 99))
    z = abs(elbo - log_z) / se
    trace = run(target, GAUSSIAN, OptConfig(iterations=iterations, seed=seed, snapshot_every=iterations))
    kl = gaussian_kl(trace[-1].w, mu, Sigma)
    return CheckResult(
        "A8 posterior_oracle", z <= z_slack and kl <= kl_tol, {"elbo_z": z, "final_kl": kl, "log_evidence": log_z}
    )


@_timed
def sampler_gain(N=500, d=10, iterations=300, seed=7, min_ratio=1.5) -> CheckResult:
    """Uniform sampling's bound exceeds the pi* bound on heterogeneous data."""
    rng = np.random.default_rng(seed)
    target = GlmTarget("logistic", logistic_dataset(N, d, rng, norm_range=(0.1, 10.0)))
    trace = run(target, GAUSSIAN, OptConfig(iterations=iterations, seed=seed, snapshot_every=iterations))
    rows = diagnose(target, GAUSSIAN, trace[-1:], ("uniform", "opt_matrix"), 2, seed)
    b = {r["sampler"]: r["bound_matrix"] for r in rows}
    ratio = b["uniform"] / b["opt_matrix"]
    return CheckResult("A9 sampler_gain", ratio >= min_ratio, {"uniform_over_opt": ratio})


def run_all(quick: bool = False, lazy: bool = False):
    """Run every check, or with ``lazy`` return zero-argument callables."""
    if quick:
        plan = [
            partial(norm_factorization),
            partial(moment_identity, n_points=3, n_samples=100_000),
            partial(batch_tightness, n_samples=200_000, rel_tol=0.03),
            partial(subsampled_tightness, n_samples=200_000, rel_tol=0.03),
            partial(variance_sandwich, n_samples=200_000),
            partial(smoothness_validity, trials=2_000),
            partial(bound_ordering, N=40, iterations=100, mc_samples=5_000),
            partial(posterior_oracle, iterations=500, elbo_samples=20_000),
            partial(sampler_gain, N=200, iterations=100),
        ]
    else:
        plan = [
            partial(fn)
            for fn in (
                norm_factorization,
                moment_identity,
                batch_tightness,
                subsampled_tightness,
                variance_sandwich,
                smoothness_validity,
                bound_ordering,
                posterior_oracle,
                sampler_gain,
            )
        ]
    return plan if lazy else [fn() for fn in plan]
