import math

import numpy as np
import pytest
from scipy import integrate, stats

from varbound.base_dist import StandardizedBase, base_entropy, kurtosis, make_stream, sample

BASES = [StandardizedBase("gaussian"), StandardizedBase("uniform"), StandardizedBase("student_t", 8.0)]


def test_kurtosis_values():
    assert kurtosis(StandardizedBase("gaussian")) == 3.0
    assert kurtosis(StandardizedBase("student_t", 8.0)) == pytest.approx(4.5)
    # fourth moment of uniform(-sqrt3, sqrt3) by quadrature
    r = math.sqrt(3.0)
    m4, _ = integrate.quad(lambda t: t**4 / (2 * r), -r, r)
    assert m4 == pytest.approx(1.8, abs=1e-12)
    assert kurtosis(StandardizedBase("uniform")) == pytest.approx(m4, abs=1e-12)


def test_entropy_values():
    g = StandardizedBase("gaussian")
    assert base_entropy(g, 1) == pytest.approx(1.41894, abs=1e-5)
    assert base_entropy(g, 2) == pytest.approx(2 * base_entropy(g, 1))
    assert base_entropy(StandardizedBase("uniform"), 1) == pytest.approx(1.24245, abs=1e-5)


@pytest.mark.parametrize("nu", [4.5, 6.0, 8.0, 30.0])
def test_student_t_entropy_matches_scipy(nu):
    scale = math.sqrt((nu - 2) / nu)
    expected = stats.t(nu, scale=scale).entropy()
    assert StandardizedBase("student_t", nu).entropy(3) == pytest.approx(3 * expected, rel=1e-12)


def test_determinism_and_seed_independence():
    base = StandardizedBase("gaussian")
    a = sample(base, 3, make_stream(42))
    b = sample(base, 3, make_stream(42))
    c = sample(base, 3, make_stream(43))
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    # substreams of one master seed are distinct
    assert not np.array_equal(sample(base, 3, make_stream(42, 0)), sample(base, 3, make_stream(42, 1)))


@pytest.mark.parametrize("base", BASES, ids=lambda b: b.label())
def test_standardized_moments(base):
    n = 1_000_000
    u = base.sample(make_stream(7), n)
    for k, target in ((1, 0.0), (2, 1.0), (3, 0.0), (4, base.kurtosis)):
        v = u**k
        se = v.std(ddof=1) / math.sqrt(n)
        assert abs(v.mean() - target) <= 4 * se, (k, v.mean(), target, se)


def test_spec_moment_examples():
    u = sample(StandardizedBase("uniform"), 1_000_000, make_stream(1))
    assert abs(u.mean()) <= 4 / math.sqrt(1e6)
    t = sample(StandardizedBase("student_t", 8.0), 1_000_000, make_stream(2))
    assert abs(t.var() - 1.0) <= 0.02


def test_invalid_bases():
    with pytest.raises(ValueError):
        StandardizedBase("student_t", 4.0)
    with pytest.raises(ValueError):
        StandardizedBase("student_t", 4.0 + 1e-7)
    with pytest.raises(ValueError):
        StandardizedBase("laplace")
    with pytest.raises(ValueError):
        StandardizedBase("gaussian", 5.0)


def test_parse_round_trip():
    for text in ("gaussian", "uniform", "student-t:8"):
        base = StandardizedBase.parse(text)
        assert StandardizedBase.parse(base.label()) == base
    assert StandardizedBase.parse("student-t:8").dof == 8.0
    with pytest.raises(ValueError):
        StandardizedBase.parse("student-t")
