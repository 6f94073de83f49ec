import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gupforge import uncertainty as u
from gupforge.presets import preset
from gupforge.scalarcalc import UnitSystem


def test_heisenberg_bound():
    assert u.bound_heisenberg(0.25) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        u.bound_heisenberg(0.0)


@pytest.mark.parametrize("beta0", [0.5, 1.0, 2.0])
def test_mm_bound_saturates(beta0):
    prm = u.UncertaintyParams(beta0=beta0)
    asym = prm.units.planck_length * math.sqrt(beta0 / 2)
    assert u.bound_mm(1e3, prm) == pytest.approx(asym, rel=1e-6)
    grid = np.geomspace(1e-3, 1e3, 200)
    vals = u.bound_mm(grid, prm)
    assert np.all(np.diff(vals) < 0) and np.all(vals > asym)


def test_mm_bound_with_mean_momentum_gap():
    prm = u.UncertaintyParams(beta0=1.0, mean_p=5.0)
    dp = 1e3 * max(1, prm.mean_p)
    assert u.bound_mm(dp, prm) / math.sqrt(0.5) - 1 < 1e-6


def test_mm_small_dp_first_order_form():
    prm = u.UncertaintyParams(beta0=1.0)
    dp = 1e-3
    assert u.bound_mm(dp, prm) == pytest.approx(0.5 / dp * (1 + dp * dp), rel=1e-11)


def test_deformation_off_reduces_to_heisenberg():
    prm = u.UncertaintyParams(beta0=0.0)
    dp = np.geomspace(1e-2, 1e2, 9)
    for fn in (u.bound_mm, u.bound_kmm, u.bound_qc):
        np.testing.assert_allclose(fn(dp, prm), u.bound_heisenberg(dp), rtol=1e-15)


def test_kmm_linear_growth():
    prm = u.UncertaintyParams(beta0=2.0)
    assert u.bound_kmm(1e6, prm) / (2.0 / 2 * 1e6) == pytest.approx(1.0, rel=1e-9)


def test_qc_bound_vanishes_at_critical_dp():
    prm = u.UncertaintyParams(beta0=1.0)
    dpc = u.critical_dp(prm)
    assert dpc == pytest.approx(1 / math.sqrt(2))
    assert u.bound_qc(dpc, prm) == pytest.approx(0.0, abs=1e-7)
    assert u.bound_qc(2 * dpc, prm) == 0.0
    assert u.bound_qc(1e-6, prm) == pytest.approx(u.bound_heisenberg(1e-6), rel=1e-11)


@pytest.mark.parametrize("beta0", [0.5, 1.0, 3.0])
def test_kmm_minimum(beta0):
    prm = u.UncertaintyParams(beta0=beta0)
    res = u.min_dx(u.sample_curve("kmm", prm))
    assert res.dp_star == pytest.approx(1 / math.sqrt(beta0), rel=1e-4)
    assert res.dx_star == pytest.approx(math.sqrt(beta0), rel=1e-4)
    assert not res.attained_at_infinity


def test_minimum_at_infinity():
    h = u.min_dx(u.sample_curve("heisenberg"))
    assert h.attained_at_infinity and h.dx_star == pytest.approx(0.0, abs=1e-6)
    mm = u.min_dx(u.sample_curve("mm_plus", u.UncertaintyParams(beta0=2.0)))
    assert mm.attained_at_infinity and mm.dx_star == pytest.approx(1.0, rel=1e-6)


def test_min_dx_requires_wide_grid():
    with pytest.raises(ValueError):
        u.min_dx(u.sample_curve("kmm", span=(0.1, 10.0)))


def test_units_rescale_planck_scales():
    units = UnitSystem(hbar=1.0, c=1.0, G_N=4.0)
    prm = u.UncertaintyParams(beta0=1.0, units=units)
    res = u.min_dx(u.sample_curve("kmm", prm))
    assert res.dx_star == pytest.approx(units.planck_length, rel=1e-4)


def test_gup1_constant():
    assert u.gup1_constant(2.0, UnitSystem(c=2.0)) == pytest.approx(2.0 / 16)
    with pytest.raises(ValueError):
        u.gup1_constant(-1.0)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=12), st.floats(1e-3, 10.0))
def test_jensen_gap_sign(momenta, beta):
    # the square root is concave, so averaging first gives the larger value
    w = np.ones(len(momenta))
    assert u.jensen_gap(np.array(momenta), w, beta) <= 1e-12


def test_jensen_gap_many_distributions():
    rng = np.random.default_rng(2024)
    gaps = []
    for _ in range(10_000):
        k = int(rng.integers(2, 8))
        gaps.append(u.jensen_gap(rng.normal(size=k) * 3, rng.random(k) + 1e-3, 0.5))
    assert max(gaps) <= 1e-12
    assert min(gaps) < 0


def test_near_critical_exponent():
    nu, amp = u.critical_exponent_fit(preset("mm_minus_E", mass=0.2))
    assert nu == pytest.approx(0.5, abs=0.01)
    assert amp == pytest.approx(math.sqrt(2), rel=0.01)


def test_curves_csv_round_trip_and_determinism():
    text = u.curves_csv()
    assert text == u.curves_csv()
    cols = u.read_curves_csv(text)
    assert tuple(cols) == u.CSV_COLUMNS
    assert len(cols["delta_p"]) == u.CURVE_POINTS
    i = int(np.argmin(cols["kmm"]))
    assert cols["delta_p"][i] == pytest.approx(1.0)
    assert cols["kmm"][i] == pytest.approx(1.0)
    end = {k: v[-1] for k, v in cols.items()}
    assert end["kmm"] > end["mm_plus"] > end["heisenberg"] > end["mm_minus"] == 0.0


def test_params_validation():
    with pytest.raises(ValueError):
        u.UncertaintyParams(beta0=-1.0)
    with pytest.raises(ValueError):
        u.UncertaintyParams(variant="q")
    assert u.UncertaintyParams.from_kappa(2.0).kappa == pytest.approx(2.0)
