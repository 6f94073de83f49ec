import math

import numpy as np
import pytest

from gupforge import transforms as tf
from gupforge.bracket import AlgebraSpec
from gupforge.kappa_rep import Grid1D
from gupforge.presets import derive_a_from_f, preset
from gupforge.scalarcalc import DomainError, RadialProfile, sqrt


def test_identity_map():
    m = tf.canonical_momentum_1d(RadialProfile.constant(1.0), p_top=3.0)
    ps = np.linspace(0, 3, 11)
    np.testing.assert_allclose(m.k(ps), ps, atol=1e-14)
    assert not m.saturates


def test_mm_plus_map_is_arcsinh():
    f = preset("mm_plus_p").f
    m = tf.canonical_momentum_1d(f, p_top=20.0)
    assert m.k(1.0) == pytest.approx(0.881373587019543, abs=1e-12)
    ps = np.linspace(0, 20, 41)
    np.testing.assert_allclose(m.k(ps), np.arcsinh(ps), atol=1e-9)
    # logarithmic growth: k - log(2p) → 0
    assert m.k(20.0) - math.log(40.0) == pytest.approx(1 / (4 * 400), rel=0.01)


def test_mm_minus_map_saturates():
    m = tf.canonical_momentum_1d(preset("mm_minus_p").f)
    assert m.saturates
    assert m.k_max == pytest.approx(math.pi / 2, abs=1e-9)
    ps = np.array([0.5, 0.9, 0.99, 0.9999])
    np.testing.assert_allclose(m.k(ps), np.arcsin(ps), atol=1e-11)


@pytest.mark.parametrize("name", ["mm_plus_p", "mm_minus_p", "kmm"])
def test_round_trip(name):
    spec = preset(name, **({"beta": 0.3} if name == "kmm" else {}))
    m = tf.canonical_momentum_1d(spec.f, p_top=None if math.isfinite(spec.p_max) else 5.0)
    ps = np.linspace(0.0, 0.98 * m.p_top, 60)
    np.testing.assert_allclose(m.p(m.k(ps)), ps, atol=1e-9)
    with pytest.raises(DomainError):
        m.p(m.k_max * 1.01)


def test_canonical_commutator_exact_for_identity():
    r = tf.verify_canonical(RadialProfile.constant(1.0), Grid1D(0.0, 2.0, 41), psi=tf.cubic_test_function)
    assert r < 1e-12


def test_fourth_order_convergence_mm_plus():
    res, ratios = tf.convergence_ratios(preset("mm_plus_p").f, Grid1D(0.0, 4.0, 41))
    assert ratios[-1] == pytest.approx(16, rel=0.1)
    assert res[-1] < 1e-6


def test_mm_minus_subcritical_residual():
    res, ratios = tf.convergence_ratios(preset("mm_minus_p").f, Grid1D(0.0, 0.9, 41))
    assert res[-1] < 1e-6
    assert ratios[-1] == pytest.approx(16, rel=0.1)


def test_no_tensor_term_means_unit_rescaling():
    tr = tf.remove_tensor_term(preset("mm_plus_p").f, RadialProfile.constant(0.0))
    assert tr.u(0.7) == 1.0


def test_ali_tensor_term_removed():
    spec = preset("ali")
    tr = tf.remove_tensor_term(spec.f, spec.g2)
    assert tr.fit_error < 1e-9
    res = tf.tensor_residuals(spec, tr.u)
    assert res["tensor"] < 1e-8
    assert res["delta_mismatch"] < 1e-10


def test_strong_tensor_term_removed():
    # a larger deformation makes the untransformed tensor term clearly visible
    spec = preset("ali", alpha_ali=0.1)
    before = tf.tensor_residuals(spec, RadialProfile.constant(1.0))
    tr = tf.remove_tensor_term(spec.f, spec.g2)
    after = tf.tensor_residuals(spec, tr.u)
    assert before["tensor"] > 0.05
    assert after["tensor"] < 1e-8 and after["delta_mismatch"] < 1e-10
    # u is smooth and starts at one
    assert tr.u(0.0) == pytest.approx(1.0, abs=1e-10)


def test_transformed_algebra_has_no_tensor_term():
    # the transformed bracket [x_i, k_j] = iħ f u δ_ij defines an algebra with g2 = 0
    spec = preset("ali", alpha_ali=0.05)
    tr = tf.remove_tensor_term(spec.f, spec.g2)
    f_new = RadialProfile(lambda p: spec.f.fn(p) * tr.u.fn(p), tr.u.p_max)
    new = AlgebraSpec(derive_a_from_f(f_new), f_new)
    out = tf.tensor_residuals(new, RadialProfile.constant(1.0))
    assert out["tensor"] < 1e-8


def test_denominator_crossing_is_reported():
    f = RadialProfile.constant(1.0)
    g2 = RadialProfile(lambda p: -1.0 + 0.0 * p)
    with pytest.raises(DomainError):
        tf.remove_tensor_term(f, g2, p_top=2.0)


def test_transformed_hamiltonian():
    f1 = RadialProfile.constant(1.0)
    kin = tf.transform_hamiltonian(f1, 2.0, tf.canonical_momentum_1d(f1, p_top=5.0))
    assert kin(1.5) == pytest.approx(1.5 ** 2 / 4)
    mp = preset("mm_plus_p").f
    kin = tf.transform_hamiltonian(mp, 1.0, tf.canonical_momentum_1d(mp, p_top=20.0))
    ks = np.linspace(0, 3, 7)
    np.testing.assert_allclose(kin(ks), np.sinh(ks) ** 2 / 2, rtol=1e-9, atol=1e-15)
    heavy = tf.transform_hamiltonian(mp, math.inf, tf.canonical_momentum_1d(mp, p_top=5.0))
    assert np.all(heavy(ks) == 0)
    with pytest.raises(DomainError):
        kin(10.0)


def test_map_csv():
    m = tf.canonical_momentum_1d(preset("mm_plus_p").f, p_top=2.0)
    lines = tf.map_csv(m, n=5).strip().splitlines()
    assert lines[0] == "p,k,u" and len(lines) == 6
