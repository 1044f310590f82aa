import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varbound import bounds
from varbound.base_dist import GAUSSIAN, StandardizedBase
from varbound.bounds import optimal_sampler, proportional_sampler, uniform_sampler
from varbound.estimators import empirical_esn, rp_gradient, subsampled_gradient
from varbound.locscale import Params, transform
from varbound.smoothness import derive
from varbound.synthetic import linear_dataset, logistic_dataset, quadratic_components, random_params, random_psd
from varbound.targets import GlmTarget, QuadraticTarget, component_stationary_points

N_MC = 1_000_000


def test_rp_gradient_zero_at_reference_point():
    rng = np.random.default_rng(0)
    q = QuadraticTarget(random_psd(3, rng), rng.standard_normal(3))
    g = rp_gradient(q, Params.at_point(q.zbar), rng.standard_normal(3))
    assert g.sq_norm == 0.0


@settings(deadline=None)
@given(st.sampled_from(["linear", "logistic", "quadratic"]), st.integers(1, 13), st.integers(0, 2**32 - 1))
def test_norm_factorization_and_rank_one(kind, d, seed):
    rng = np.random.default_rng(seed)
    if kind == "quadratic":
        t = QuadraticTarget(random_psd(d, rng), rng.standard_normal(d))
    else:
        data = linear_dataset(5, d, rng) if kind == "linear" else logistic_dataset(5, d, rng)
        t = GlmTarget(kind, data)
    w = random_params(d, rng, scale=float(rng.uniform(0.1, 3)))
    u = rng.standard_normal(d)
    g = rp_gradient(t, w, u)
    gz = t.grad(transform(w, u))
    assert g.sq_norm == pytest.approx((gz @ gz) * (1 + u @ u), rel=1e-12, abs=1e-300)
    np.testing.assert_array_equal(g.gC, np.outer(g.gm, u))
    assert np.linalg.matrix_rank(g.gC) <= 1


def test_rp_gradient_finite_difference_in_w():
    rng = np.random.default_rng(1)
    t = GlmTarget("logistic", logistic_dataset(10, 3, rng))
    w = random_params(3, rng)
    u = rng.standard_normal(3)
    g = rp_gradient(t, w, u)
    h = 1e-6
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        fd = (t.log_density(transform(Params(w.m + e, w.C), u)) - t.log_density(transform(Params(w.m - e, w.C), u))) / (2 * h)
        assert g.gm[i] == pytest.approx(fd, rel=1e-6, abs=1e-8)
        for j in range(3):
            E = np.zeros((3, 3))
            E[i, j] = h
            fd = (t.log_density(transform(Params(w.m, w.C + E), u)) - t.log_density(transform(Params(w.m, w.C - E), u))) / (2 * h)
            assert g.gC[i, j] == pytest.approx(fd, rel=1e-6, abs=1e-8)


def test_subsampled_single_component_equals_full():
    rng = np.random.default_rng(2)
    t = GlmTarget("linear", linear_dataset(1, 3, rng))
    w = random_params(3, rng)
    u = rng.standard_normal(3)
    a = subsampled_gradient(t, w, u, 0, uniform_sampler(1))
    b = rp_gradient(t, w, u)
    np.testing.assert_allclose(a.gm, b.gm)
    np.testing.assert_allclose(a.gC, b.gC)


def test_subsampled_gradient_scaling_and_errors():
    rng = np.random.default_rng(3)
    t = GlmTarget("logistic", logistic_dataset(4, 2, rng))
    w = random_params(2, rng)
    u = rng.standard_normal(2)
    pi = bounds.SamplerDist(np.array([0.1, 0.2, 0.3, 0.4]), "custom")
    g = subsampled_gradient(t, w, u, 2, pi)
    np.testing.assert_allclose(g.gm, t.component_grad(2, transform(w, u)) / 0.3)
    with pytest.raises(IndexError):
        subsampled_gradient(t, w, u, 4, pi)
    with pytest.raises(ValueError):
        subsampled_gradient(t, w, u, 0, uniform_sampler(3))


def test_batch_mc_mean_matches_closed_form_gradient():
    rng = np.random.default_rng(4)
    q = QuadraticTarget(random_psd(3, rng), rng.standard_normal(3))
    w = random_params(3, rng)
    est = empirical_esn(q, w, GAUSSIAN, None, N_MC, seed=1)
    # with f = -1/2 (z - zbar)^T M (z - zbar): dl/dm = -M (m - zbar), dl/dC = -M C
    assert np.all(np.abs(est.mean_gm + q.M @ (w.m - q.zbar)) <= 4 * est.se_gm)
    assert np.all(np.abs(est.mean_gC + q.M @ w.C) <= 4 * est.se_gC)


@pytest.mark.parametrize("label", ["uniform", "proportional", "opt_scalar", "opt_matrix"])
def test_subsampled_is_unbiased(label):
    rng = np.random.default_rng(5)
    t = GlmTarget("logistic", logistic_dataset(8, 2, rng, norm_range=(0.3, 3)))
    w = random_params(2, rng)
    spec = derive(t)
    zbars = component_stationary_points(t)
    pi = bounds.make_sampler(label, spec, zbars, w, 3.0)
    full = empirical_esn(t, w, GAUSSIAN, None, 200_000, seed=2)
    sub = empirical_esn(t, w, GAUSSIAN, pi, 200_000, seed=3)
    se = np.sqrt(full.se_gm**2 + sub.se_gm**2)
    assert np.all(np.abs(full.mean_gm - sub.mean_gm) <= 4 * se)
    se = np.sqrt(full.se_gC**2 + sub.se_gC**2)
    assert np.all(np.abs(full.mean_gC - sub.mean_gC) <= 4 * se)


@pytest.mark.parametrize("base", [GAUSSIAN, StandardizedBase("uniform")], ids=lambda b: b.kind)
def test_uniform_subsampled_quadratic_tightness(base):
    rng = np.random.default_rng(6)
    q = quadratic_components(6, 3, rng)
    w = random_params(3, rng)
    spec = derive(q)
    pi = uniform_sampler(6)
    est = empirical_esn(q, w, base, pi, N_MC, seed=4)
    bound = bounds.esn_bound_subsampled(spec, q.zbars, pi, w, base.kurtosis, "matrix")
    assert est.esn_mean == pytest.approx(bound, rel=0.02)


def test_batch_quadratic_matrix_tightness():
    rng = np.random.default_rng(7)
    q = QuadraticTarget(random_psd(4, rng), rng.standard_normal(4))
    w = random_params(4, rng)
    est = empirical_esn(q, w, GAUSSIAN, None, N_MC, seed=5)
    assert est.esn_mean == pytest.approx(bounds.esn_bound_matrix(q.M, w, q.zbar, 3.0), rel=0.02)


def test_empirical_esn_zero_at_reference_point():
    rng = np.random.default_rng(8)
    q = QuadraticTarget(random_psd(3, rng), rng.standard_normal(3))
    est = empirical_esn(q, Params.at_point(q.zbar), GAUSSIAN, None, 1000, seed=0)
    assert est.esn_mean == 0.0 and est.trace_variance == 0.0


def test_empirical_esn_determinism_and_worker_independence():
    rng = np.random.default_rng(9)
    t = GlmTarget("logistic", logistic_dataset(20, 3, rng))
    w = random_params(3, rng)
    pi = proportional_sampler(derive(t))
    a = empirical_esn(t, w, GAUSSIAN, pi, 35_000, seed=11, workers=1)
    b = empirical_esn(t, w, GAUSSIAN, pi, 35_000, seed=11, workers=4)
    c = empirical_esn(t, w, GAUSSIAN, pi, 35_000, seed=12)
    assert a.esn_mean == b.esn_mean and a.esn_se == b.esn_se
    np.testing.assert_array_equal(a.mean_gC, b.mean_gC)
    assert a.esn_mean != c.esn_mean


def test_esn_variance_identity():
    rng = np.random.default_rng(10)
    t = GlmTarget("linear", linear_dataset(20, 3, rng))
    est = empirical_esn(t, random_params(3, rng), GAUSSIAN, uniform_sampler(20), 20_000, seed=1)
    assert est.esn_mean - est.trace_variance == pytest.approx(est.mean_sq_norm, rel=1e-12)


def test_empirical_esn_matches_direct_loop():
    # independent route: per-sample GradSample objects, plain Python average
    rng = np.random.default_rng(11)
    t = GlmTarget("logistic", logistic_dataset(6, 2, rng))
    w = random_params(2, rng)
    pi = uniform_sampler(6)
    from varbound.base_dist import make_stream

    stream = make_stream(3, 0)
    u = GAUSSIAN.sample(stream, (500, 2))
    idx = stream.choice(6, size=500, p=pi.weights)
    direct = np.mean([subsampled_gradient(t, w, u[k], int(idx[k]), pi).sq_norm for k in range(500)])
    est = empirical_esn(t, w, GAUSSIAN, pi, 500, seed=3)
    assert est.esn_mean == pytest.approx(direct, rel=1e-12)


def test_optimal_sampler_reduces_true_esn():
    rng = np.random.default_rng(12)
    t = GlmTarget("logistic", logistic_dataset(50, 3, rng, norm_range=(0.1, 10)))
    spec = derive(t)
    zbars = component_stationary_points(t)
    w = random_params(3, rng, scale=0.3)
    uni = empirical_esn(t, w, GAUSSIAN, uniform_sampler(50), 50_000, seed=1)
    opt = empirical_esn(t, w, GAUSSIAN, optimal_sampler(spec, zbars, w, 3.0), 50_000, seed=1)
    assert opt.esn_mean < uni.esn_mean
