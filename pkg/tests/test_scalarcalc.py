import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gupforge.scalarcalc import (
    NATURAL,
    DomainError,
    Dual,
    RadialProfile,
    ScalarField,
    UnitSystem,
    binomial_half,
    derivative,
    exp,
    lift_radial,
    log,
    sin,
    sqrt,
    sqrt_series_eval,
)
from gupforge.presets import PRESET_NAMES, preset

finite = st.floats(min_value=0.1, max_value=5.0, allow_nan=False)


@given(finite)
def test_dual_derivative_of_composite_matches_hand_result(x):
    fn = lambda t: sin(t) * exp(t) / sqrt(1 + t * t)
    want = (math.cos(x) * math.exp(x) + math.sin(x) * math.exp(x)) / math.sqrt(1 + x * x) - math.sin(
        x
    ) * math.exp(x) * x / (1 + x * x) ** 1.5
    assert derivative(fn, x) == pytest.approx(want, rel=1e-12)


@given(finite)
def test_log_and_power_rules(x):
    assert derivative(lambda t: log(t) + t ** 3, x) == pytest.approx(1 / x + 3 * x * x, rel=1e-12)


def test_nested_derivatives_do_not_confuse_perturbations():
    # d/dx [x * d/dy (x + y)] = 1; mixing the tags would give 2
    outer = derivative(lambda x: x * derivative(lambda y: x + y, 1.0), 1.0)
    assert outer == pytest.approx(1.0, abs=0)


def test_second_derivative_through_nesting():
    x = 0.7
    d2 = derivative(lambda t: derivative(lambda s: sin(s) * s, t), x)
    assert d2 == pytest.approx(2 * math.cos(x) - x * math.sin(x), rel=1e-13)


def test_dual_arrays_vectorise():
    x = np.linspace(0.1, 1.0, 7)
    got = derivative(lambda t: t * t * t, x)
    np.testing.assert_allclose(got, 3 * x * x, rtol=1e-14)


def test_non_finite_profile_value_raises():
    # elementwise sqrt gives NaN outside its domain; profiles turn that into an error
    prof = RadialProfile(lambda r: sqrt(1 - r * r))
    with np.errstate(invalid="ignore"):
        assert math.isnan(sqrt(-1.0))
        with pytest.raises(DomainError):
            prof(2.0)


def test_lift_radial_constant():
    g = lift_radial(RadialProfile.constant(1.0))
    p = np.array([0.3, -0.2, 0.9])
    assert g(p) == 1.0
    np.testing.assert_array_equal(g.gradient(p), [0.0, 0.0, 0.0])


def test_lift_radial_square():
    g = lift_radial(RadialProfile(lambda r: r * r))
    p = np.array([1.0, 0.0, 0.0])
    assert g(p) == pytest.approx(1.0)
    np.testing.assert_allclose(g.gradient(p), [2.0, 0.0, 0.0], atol=1e-15)


def test_lift_radial_sqrt_profile():
    g = lift_radial(RadialProfile(lambda r: sqrt(1 + r * r)))
    p = np.array([3.0, 4.0, 0.0])
    assert g(p) == pytest.approx(math.sqrt(26), rel=1e-15)
    assert g.gradient(p)[0] == pytest.approx(3 / math.sqrt(26), rel=1e-14)


def test_lift_radial_rejects_origin():
    g = lift_radial(RadialProfile(lambda r: r * r))
    with pytest.raises(DomainError):
        g(np.zeros(3))


def test_profile_domain_checks():
    prof = RadialProfile(lambda r: sqrt(1 - r * r), p_max=1.0)
    with pytest.raises(DomainError):
        prof(1.5)
    with pytest.raises(DomainError):
        prof(-0.1)
    assert prof(1.0) == 0.0


def test_scalar_field_hessian_is_symmetric():
    g = ScalarField(lambda p: p[0] * p[1] ** 2 + sin(p[2]) * p[0])
    h = g.hessian(np.array([0.4, 0.5, 0.6]))
    np.testing.assert_allclose(h, h.T, atol=1e-15)
    assert h[1, 1] == pytest.approx(2 * 0.4)


@pytest.mark.parametrize("n, want", [(0, 1), (1, Fraction(1, 2)), (2, Fraction(-1, 8)), (3, Fraction(1, 16)), (4, Fraction(-5, 128))])
def test_binomial_half(n, want):
    assert binomial_half(n) == want


def test_binomial_half_matches_taylor_coefficients():
    # Taylor coefficients of sqrt(1+x) at 0 by repeated dual differentiation
    fn = lambda x: sqrt(1 + x)
    d = fn
    for n in range(1, 5):
        prev = d
        d = lambda x, prev=prev: derivative(prev, x)
        assert d(0.0) / math.factorial(n) == pytest.approx(float(binomial_half(n)), rel=1e-12)


def test_binomial_half_limits():
    with pytest.raises(ValueError):
        binomial_half(-1)
    with pytest.raises(OverflowError):
        binomial_half(10 ** 6)


def test_sqrt_series_examples():
    assert sqrt_series_eval(0.0, 5) == 1.0
    assert sqrt_series_eval(0.21, 8) == pytest.approx(1.1, abs=1e-6)
    with pytest.raises(DomainError):
        sqrt_series_eval(1.5)


def test_sqrt_series_error_decreases_with_order():
    rng = np.random.default_rng(1)
    for x in rng.uniform(-0.9, 0.9, 20):
        errs = [abs(sqrt_series_eval(x, n) - math.sqrt(1 + x)) for n in range(0, 40, 4)]
        assert all(b <= a + 1e-16 for a, b in zip(errs, errs[1:]))


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_profile_derivatives_match_central_differences(name):
    kw = {"beta": 0.2} if name == "kmm" else {"mass": 0.3} if name.endswith("_E") else {}
    f = preset(name, **kw).f
    p = 0.4
    exact = f.derivative(p)
    errs = []
    for h in (1e-2, 5e-3):
        fd = (f(p + h) - f(p - h)) / (2 * h)
        errs.append(abs(fd - exact))
    if errs[0] > 1e-13:
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_unit_system_planck_scale():
    u = UnitSystem(hbar=2.0, c=3.0, G_N=5.0)
    assert u.planck_mass == pytest.approx(math.sqrt(2 * 3 / 5))
    assert u.planck_length == pytest.approx(math.sqrt(2 * 5 / 27))
    assert NATURAL.planck_mass == 1.0


def test_dual_is_not_swallowed_by_numpy():
    x = Dual(99, 2.0, 1.0)
    out = np.float64(3.0) * x
    assert isinstance(out, Dual) and out.eps == 3.0
