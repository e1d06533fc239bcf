import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sci_integrate
from scipy import stats

from rggcascade.distributions import (
    DistributionSpec,
    QuadratureError,
    QuadratureRequest,
    expectation_request,
    integrate,
)

UNIFORM = DistributionSpec.uniform_unit()
DISTS = [UNIFORM] + [DistributionSpec.exponential(m) for m in (0.075, 1.0, 2.0, 1360.0)]


def test_cdf_examples():
    assert UNIFORM.cdf(0.5) == 0.5
    assert DistributionSpec.exponential(1.0).cdf(0.0) == 0.0
    e = DistributionSpec.exponential(0.075)
    assert e.cdf(1.0) == pytest.approx(1 - math.exp(-0.075), abs=1e-15)
    assert e.cdf(1.0) == pytest.approx(0.072257, abs=1e-6)
    # cross-check against the integrated density
    val, _ = sci_integrate.quad(lambda x: 0.075 * math.exp(-0.075 * x), 0, 1)
    assert e.cdf(1.0) == pytest.approx(val, abs=1e-12)


def test_cdf_clamps_and_vectorises():
    xs = np.array([-1.0, 0.0, 0.25, 1.0, 3.0])
    np.testing.assert_array_equal(UNIFORM.cdf(xs), [0, 0, 0.25, 1, 1])
    e = DistributionSpec.exponential(2.0)
    assert e.cdf(-3.0) == 0.0
    np.testing.assert_allclose(e.cdf(xs), [0, 0, 1 - math.exp(-0.5), 1 - math.exp(-2), 1 - math.exp(-6)])
    for x in xs:
        assert e.cdf(x) == pytest.approx(float(e.cdf(np.array([x]))[0]), abs=1e-16)


def test_invalid_specs():
    with pytest.raises(ValueError):
        DistributionSpec.exponential(0.0)
    with pytest.raises(ValueError):
        DistributionSpec.exponential(-1.0)
    with pytest.raises(ValueError):
        DistributionSpec("uniform_unit", 2.0)


@pytest.mark.parametrize("d", DISTS, ids=lambda d: d.describe())
def test_cdf_monotone_and_limits(d):
    lo, hi = d.support
    top = hi if math.isfinite(hi) else d.isf(1e-15)
    xs = np.linspace(lo - 1.0, top + 1.0, 2001)
    c = d.cdf(xs)
    assert np.all(np.diff(c) >= 0)
    assert d.cdf(lo) == 0.0
    assert c[-1] == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("d", DISTS, ids=lambda d: d.describe())
def test_quantile_inverts_cdf(d):
    lo, hi = d.support
    top = hi if math.isfinite(hi) else d.quantile(0.999)
    xs = np.linspace(lo, top, 1002)[1:-1]
    np.testing.assert_allclose(d.quantile(d.cdf(xs)), xs, rtol=0, atol=1e-10)
    for x in xs[::97]:
        assert d.quantile(d.cdf(float(x))) == pytest.approx(float(x), abs=1e-10)


@pytest.mark.parametrize("d", DISTS, ids=lambda d: d.describe())
def test_pdf_integrates_to_one(d):
    req = expectation_request(lambda x: 1.0, d, tolerance=1e-10)
    v, err = integrate(req)
    assert abs(v - 1.0) <= 1e-9
    assert err <= 1e-10


def test_sample_support_and_determinism():
    a = UNIFORM.sample(np.random.default_rng(5), 10_000)
    b = UNIFORM.sample(np.random.default_rng(5), 10_000)
    np.testing.assert_array_equal(a, b)
    assert np.all((a > 0) & (a <= 1))
    # rng.random() can return exactly 0.0; it must map to 1.0, not 0.0
    class Zero:
        def random(self, size=None):
            return np.zeros(size)

    assert np.all(UNIFORM.sample(Zero(), 3) == 1.0)


@pytest.mark.parametrize("d", DISTS, ids=lambda d: d.describe())
def test_sample_ks(d):
    x = d.sample(np.random.default_rng(123), 100_000)
    res = stats.kstest(x, d.cdf)
    assert res.statistic < 0.01


def test_sample_mean_exponential():
    x = DistributionSpec.exponential(2.0).sample(np.random.default_rng(7), 100_000)
    assert abs(x.mean() - 0.5) < 0.01


# --- quadrature -----------------------------------------------------------


def test_constant_integrand():
    v, e = integrate(QuadratureRequest(lambda x: 1.0, 0.0, 1.0))
    assert abs(v - 1.0) <= 1e-12
    assert e <= 1e-10


def test_semi_infinite_exponential_density():
    e = DistributionSpec.exponential(1.0)
    req = QuadratureRequest(
        e.pdf, 0.0, math.inf, tolerance=1e-9, tail_cutoff=e.isf(0.5e-9), tail_mass=0.5e-9
    )
    v, err = integrate(req)
    assert abs(v - 1.0) <= 1e-9
    assert err <= 1e-9


def test_reliable_bracket_example():
    # 1 - int_0^1 F_U(1 - p) e^-p dp = (e - 1) e^-1
    e = DistributionSpec.exponential(1.0)
    req = QuadratureRequest(lambda p: UNIFORM.cdf(1 - p) * e.pdf(p), 0.0, 1.0)
    v, _ = integrate(req)
    assert 1 - v == pytest.approx((math.e - 1) * math.exp(-1), abs=1e-10)
    assert 1 - v == pytest.approx(0.632121, abs=1e-6)


@settings(max_examples=200, deadline=None)
@given(
    coeffs=st.lists(st.floats(-10, 10), min_size=4, max_size=4),
    a=st.floats(-5, 5),
    width=st.floats(0.01, 10),
)
def test_simpson_exact_for_cubics(coeffs, a, width):
    b = a + width
    c0, c1, c2, c3 = coeffs
    f = lambda x: c0 + c1 * x + c2 * x**2 + c3 * x**3  # noqa: E731
    F = lambda x: c0 * x + c1 * x**2 / 2 + c2 * x**3 / 3 + c3 * x**4 / 4  # noqa: E731
    v, _ = integrate(QuadratureRequest(f, a, b, tolerance=1e-10))
    exact = F(b) - F(a)
    # absolute 1e-12 up to the round-off floor of the values involved
    scale = max(1.0, abs(F(b)), abs(F(a)))
    assert abs(v - exact) <= 1e-12 * scale


def test_breakpoints_validated_and_normalised():
    with pytest.raises(ValueError):
        QuadratureRequest(lambda x: x, 0.0, 1.0, breakpoints=[1.0])
    with pytest.raises(ValueError):
        QuadratureRequest(lambda x: x, 0.0, 1.0, breakpoints=[-0.5])
    q = QuadratureRequest(lambda x: x, 0.0, 1.0, breakpoints=[0.7, 0.2, 0.7])
    assert q.panels() == [(0.0, 0.2), (0.2, 0.7), (0.7, 1.0)]


def test_infinite_interval_needs_cutoff():
    with pytest.raises(ValueError):
        QuadratureRequest(lambda x: 0.0, 0.0, math.inf)


def test_kink_breakpoint_improves_accuracy():
    f = lambda x: abs(x - 1 / 3)  # noqa: E731
    exact = (1 / 3) ** 2 / 2 + (2 / 3) ** 2 / 2
    v, _ = integrate(QuadratureRequest(f, 0.0, 1.0, breakpoints=[1 / 3], tolerance=1e-12))
    assert abs(v - exact) < 1e-14


def test_non_convergence_is_explicit():
    # unflagged jump: the local error never falls below the halving tolerance
    step = lambda x: 1.0 if x > 1 / math.pi else 0.0  # noqa: E731
    with pytest.raises(QuadratureError):
        integrate(QuadratureRequest(step, 0.0, 1.0, tolerance=1e-12))
    with pytest.raises(QuadratureError):
        integrate(QuadratureRequest(step, 0.0, 1.0, tolerance=1e-6, max_depth=8))


# int_0^40 min(x, 1) * 0.5 e^(-x/2) dx, split at the kink
_KINKED = 2 * (1 - math.exp(-0.5)) - math.exp(-0.5) + (math.exp(-0.5) - math.exp(-20))


@pytest.mark.parametrize(
    "f,a,b,kinks,exact",
    [
        (math.exp, 0.0, 3.0, [], math.exp(3) - 1),
        (lambda x: math.sin(5 * x) ** 2, 0.0, 2.0, [], 1 - math.sin(20) / 20),
        (lambda x: min(x, 1.0) * 0.5 * math.exp(-0.5 * x), 0.0, 40.0, [1.0], _KINKED),
        (lambda x: 1 / (1 + x * x), -3.0, 4.0, [], math.atan(4) + math.atan(3)),
    ],
)
def test_error_bound_monotone_in_tolerance(f, a, b, kinks, exact):
    bounds = []
    for tol in [1e-4 / 2**i for i in range(16)]:
        v, e = integrate(QuadratureRequest(f, a, b, breakpoints=kinks, tolerance=tol))
        assert e <= tol
        assert abs(v - exact) <= tol
        bounds.append(e)
    assert all(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:]))
