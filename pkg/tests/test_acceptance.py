"""Acceptance criteria, one check per criterion.

Run through pytest (a summary line per criterion is printed at the end of the
session) or directly with ``python3 tests/test_acceptance.py``.
"""

import math
import time

import numpy as np
import pytest
from scipy import optimize

from gupforge import composite, kappa_rep, lattice, transforms, uncertainty
from gupforge.bracket import jacobi_xxp_all, jacobi_xxx, probe_momenta, project_orbital, residual_norm
from gupforge.kappa_rep import Grid1D
from gupforge.presets import derive_a_from_f, preset
from gupforge.scalarcalc import NATURAL

RESULTS = {}


def _spec(name):
    kw = {"kmm": {"beta": 0.2}, "mm_plus_E": {"mass": 0.3}, "mm_minus_E": {"mass": 0.3}}.get(name, {})
    return preset(name, **kw)


def c01_general_spin_jacobi():
    t0 = time.perf_counter()
    worst = {}
    for name in ("mm_plus_p", "mm_plus_E", "mm_minus_p", "mm_minus_E", "ali"):
        spec = _spec(name)
        pts = probe_momenta(spec, 100)
        worst[name] = max(residual_norm(jacobi_xxx(spec), pts), residual_norm(jacobi_xxp_all(spec).values(), pts))
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) < 1e-9 and elapsed < 5
    return ok, f"max residual {max(worst.values()):.2e} (ali {worst['ali']:.2e}), {elapsed:.2f}s"


def c02_spin_obstruction():
    spec = preset("kmm", beta=0.2)
    pts = probe_momenta(spec, 100)
    e = jacobi_xxx(spec, project=False)
    raw = residual_norm(e, pts)
    projected = residual_norm(project_orbital(e), pts)
    # J-part coefficient at p=(1,0,0) is -(ħ/κc)² ħ f(p) a'(p) p1/p
    hbar, kc = NATURAL.hbar, spec.kappa * NATURAL.c
    coef = complex(e.coefficient_of("J1")(np.array([1.0, 0.0, 0.0])))
    engine_da = (coef / (-((hbar / kc) ** 2) * hbar * float(spec.f(1.0)))).real
    a = derive_a_from_f(spec.f, spec.kappa)
    h = 1e-4
    fd_da = (float(a(1 + h)) - float(a(1 - h))) / (2 * h)
    rel = abs(engine_da / fd_da - 1)
    ok = raw > 1e-3 and projected < 1e-9 and rel < 0.01
    return ok, f"unprojected {raw:.3g}, projected {projected:.1e}, a'(1): engine {engine_da:.6f} vs FD {fd_da:.6f}"


def c03_f_a_identity():
    worst = 0.0
    for name in ("heisenberg", "mm_plus_p", "mm_plus_E", "mm_minus_p", "mm_minus_E", "kmm"):
        spec = _spec(name)
        p = np.linalg.norm(probe_momenta(spec, 50), axis=1)
        f, fp, a = (np.real(np.asarray(v, dtype=complex)) for v in (spec.f(p), spec.f.derivative(p), spec.a(p)))
        worst = max(worst, float(np.max(np.abs(f * fp / p + a / (spec.kappa * spec.units.c) ** 2))))
    ali = _spec("ali")
    p = np.linalg.norm(probe_momenta(ali, 50), axis=1)
    ali_val = float(np.max(np.abs(np.real(ali.f(p) * ali.f.derivative(p)) / p)))
    return worst < 1e-10, f"max {worst:.1e} over the six presets without a tensor term (ali, g2≠0: {ali_val:.1e}, not applicable)"


def c04_mm_asymptote():
    gaps = []
    for b0 in (0.5, 1.0, 2.0):
        prm = uncertainty.UncertaintyParams(beta0=b0)
        want = prm.units.planck_length * math.sqrt(b0 / 2)
        gaps.append(abs(uncertainty.bound_mm(1e3 * prm.planck_momentum, prm) / want - 1))
    return max(gaps) < 1e-3, f"max relative gap {max(gaps):.2e}"


def c05_kmm_minimum():
    errs = []
    for b0 in (0.5, 1.0, 2.0):
        prm = uncertainty.UncertaintyParams(beta0=b0)
        r = uncertainty.min_dx(uncertainty.sample_curve("kmm", prm))
        errs.append(abs(r.dp_star * math.sqrt(b0) / prm.planck_momentum - 1))
        errs.append(abs(r.dx_star / (prm.units.planck_length * math.sqrt(b0)) - 1))
    return max(errs) < 1e-4, f"max relative error {max(errs):.1e}"


def c06_critical_exponent():
    nu, amp = uncertainty.critical_exponent_fit(preset("mm_minus_E", mass=0.3))
    ok = abs(nu - 0.5) <= 0.01 and abs(amp / math.sqrt(2) - 1) <= 0.01
    return ok, f"exponent {nu:.4f}, amplitude {amp:.4f}"


def c07_lattice_dispersion():
    t0 = time.perf_counter()
    worst = 0.0
    for kind, step, mass in (("space", 1.0, 0.0), ("space", 0.5, 0.7), ("time", 1.0, 0.0), ("time", 0.5, 0.6)):
        cfg = lattice.LatticeConfig(kind, step, mass, 512)
        lim = lattice.branch_limit(kind, step, mass)
        for m in lattice.dispersion_scan(np.linspace(0.05, 0.8, 6) * lim, cfg):
            worst = max(worst, m.rel_error)
    emax_err = 0.0
    for d, mass in ((1.0, 0.0), (1.0, 0.5)):
        emax = lattice.measured_energy_max(lattice.LatticeConfig("space", d, mass, 512))
        emax_err = max(emax_err, abs(emax / math.sqrt(d ** -2 + mass ** 2) - 1))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-3 and emax_err < 1e-3 and elapsed < 30
    return ok, f"dispersion {worst:.1e}, E_max {emax_err:.1e}, {elapsed:.1f}s"


def c08_kappa_poincare():
    worst, casimir, count = 0.0, 0.0, 0
    for kind, dims_list in (("sine", (1, 3)), ("sinh", (1, 3)), ("continuum", (1, 3)), ("space", (1,))):
        case = kappa_rep.DispersionCase(kind, 0.8, 0.3)
        for dims in dims_list:
            samples = kappa_rep.sample_momenta(case, dims, 50)
            fns = kappa_rep.default_test_functions(dims, n=5)
            for row in kappa_rep.check_algebra(case, dims, samples, fns):
                count += 1
                if row["relation"] == "C2=m^2":
                    casimir = max(casimir, row["max_residual"])
                else:
                    worst = max(worst, row["max_residual"])
    return worst < 1e-8 and casimir < 1e-12, f"{count} relations, max {worst:.1e}, Casimir {casimir:.1e}"


def c09_position_operator():
    sine = kappa_rep.position_commutator_residuals(kappa_rep.DispersionCase("sine", 0.7, 0.3))
    kappa = 2.0
    tau = NATURAL.hbar / (kappa * NATURAL.c ** 2)
    sinh_case = kappa_rep.DispersionCase("sinh", tau, 0.3)
    sinh = kappa_rep.position_commutator_residuals(sinh_case)
    ps = np.linspace(0.1, 3.0, 20)
    mm_form = np.sqrt(1 + (ps ** 2 + 0.09) / kappa ** 2)
    mm_match = float(np.max(np.abs(kappa_rep.expected_xp(sinh_case, ps) - mm_form)))
    xx_match = abs(kappa_rep.xx_coefficient(sinh_case) + (NATURAL.hbar / (kappa * NATURAL.c)) ** 2)
    # naive speed reaches c where sin(τℰ) = sqrt(mτ); m τ = 3/4 puts that at τℰ = π/3
    case = kappa_rep.DispersionCase("sine", 1.0, 0.75)
    root = optimize.brentq(lambda p: kappa_rep.velocity(case, p, naive=True) - 1.0, 1e-3, 0.999 * case.p_limit, xtol=1e-14)
    theta = float(kappa_rep.energy_on_shell(root, case))
    above = kappa_rep.velocity(case, 0.5 * (root + case.p_limit), naive=True) > 1
    grid = np.linspace(0.01, 0.999, 100) * case.p_limit
    v = np.array([kappa_rep.velocity(case, p) for p in grid])
    kinematic = float(np.max(np.abs(v - grid / np.sqrt(grid ** 2 + 0.75 ** 2))))
    monotone = bool(np.all(np.diff(v) > 0) and v.max() < 1)
    # the sine branch ends at finite momentum; the approach to c shows on the unbounded sinh branch
    wide = kappa_rep.DispersionCase("sinh", 1.0, 0.75)
    far = np.array([kappa_rep.velocity(wide, p) for p in np.geomspace(0.1, 1e4, 60)])
    sup_c = bool(np.all(np.diff(far) > 0) and far.max() <= 1 and 1 - far[-1] < 1e-8)
    near_c = float(far[-1])
    ok = (max(sine.values()) < 1e-8 and max(sinh.values()) < 1e-8 and mm_match < 1e-12 and xx_match < 1e-15
          and abs(theta - 1.048) < 1e-3 and above and monotone and kinematic < 1e-12 and sup_c)
    return ok, (f"sine {max(sine.values()):.1e}, sinh {max(sinh.values()):.1e}, naive threshold τℰ={theta:.4f}, "
                f"corrected sup {near_c:.4f}")


def c10_composite():
    rng = np.random.default_rng(11)
    kmm = preset("kmm", beta=0.01)
    gap = 0.0
    for _ in range(1000):
        b = composite.Body(rng.normal(size=(int(rng.integers(1, 65)), 3)))
        r, s = composite.variance_decomposition(b, 0.01)
        com = composite.com_commutator(b, kmm)
        gap = max(gap, abs(1 + r + s - com) / com)
    beta = 0.3
    mm = preset("mm_plus_p", kappa=1 / math.sqrt(2 * beta))
    km = preset("kmm", beta=beta)
    closed = 0.0
    for n in (1, 3, 10, 64):
        P = np.array([0.7, -1.1, 0.4])
        P2 = float(P @ P)
        body = composite.Body.rigid(P, n)
        closed = max(closed, abs(composite.com_commutator(body, mm) - math.sqrt(1 + 2 * beta * P2 / n ** 2)))
        closed = max(closed, abs(composite.com_commutator(body, km) - (1 + beta * P2 / n ** 2)))
    ns = [2 ** k for k in range(7)]
    eff = [(composite.rigid_effective(1.0, n, km) - 1) * n * n / beta for n in ns]
    scaling = max(abs(e - 1) for e in eff)
    ok = gap <= 1e-15 and closed < 1e-12 and scaling < 1e-9
    return ok, f"identity {gap:.1e}, closed forms {closed:.1e}, N²·β_eff/β spread {scaling:.1e}"


def c11_transforms():
    res_plus, ratios_plus = transforms.convergence_ratios(preset("mm_plus_p").f, Grid1D(0.0, 4.0, 41))
    res_minus, ratios_minus = transforms.convergence_ratios(preset("mm_minus_p").f, Grid1D(0.0, 0.9, 41))
    m = transforms.canonical_momentum_1d(preset("mm_plus_p").f, p_top=10.0)
    ps = np.linspace(0.0, 10.0, 101)
    arcsinh_err = float(np.max(np.abs(m.k(ps) - np.arcsinh(ps))))
    ali = preset("ali")
    tr = transforms.remove_tensor_term(ali.f, ali.g2)
    tensor = transforms.tensor_residuals(ali, tr.u)["tensor"]
    order_ok = all(12 < r < 20 for r in (ratios_plus[-1], ratios_minus[-1]))
    ok = order_ok and max(res_plus[-1], res_minus[-1]) < 1e-6 and arcsinh_err < 1e-9 and tensor < 1e-8
    return ok, (f"ratios {ratios_plus[-1]:.2f}/{ratios_minus[-1]:.2f}, finest {max(res_plus[-1], res_minus[-1]):.1e}, "
                f"arcsinh {arcsinh_err:.1e}, ali tensor {tensor:.1e}")


def c12_figure_ordering():
    cols = uncertainty.read_curves_csv(uncertainty.curves_csv(uncertainty.UncertaintyParams(beta0=1.0)))
    pm = NATURAL.planck_mass * NATURAL.c
    i = int(np.argmin(np.abs(cols["delta_p"] - 1e3 * pm)))
    end = {k: float(v[i]) for k, v in cols.items()}
    ordering = end["kmm"] > end["mm_plus"] > end["heisenberg"] > end["mm_minus"] == 0.0
    decreasing = bool(np.all(np.diff(cols["mm_plus"]) < 0))
    dk = np.diff(cols["kmm"])
    turns = int(np.count_nonzero(np.diff(np.sign(dk)) != 0))
    single_min = turns == 1 and dk[0] < 0 < dk[-1]
    return ordering and decreasing and single_min, f"values at 10³M_Pc {end['kmm']:.3g} > {end['mm_plus']:.3g} > {end['heisenberg']:.1e} > {end['mm_minus']}"


CRITERIA = [
    ("C01", "Jacobi consistency for general spin", c01_general_spin_jacobi),
    ("C02", "spin obstruction of the quadratic algebra", c02_spin_obstruction),
    ("C03", "f-a consistency identity", c03_f_a_identity),
    ("C04", "square-root bound asymptote", c04_mm_asymptote),
    ("C05", "quadratic-bound minimum", c05_kmm_minimum),
    ("C06", "critical behaviour near the maximal energy", c06_critical_exponent),
    ("C07", "lattice dispersion and maximal energy", c07_lattice_dispersion),
    ("C08", "deformed Poincaré algebra relations", c08_kappa_poincare),
    ("C09", "position operator and velocities", c09_position_operator),
    ("C10", "composite-body identity and scaling", c10_composite),
    ("C11", "canonical-variable transforms", c11_transforms),
    ("C12", "uncertainty-curve ordering", c12_figure_ordering),
]


def run_criterion(key, title, fn):
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failed criterion, reported with its cause
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    line = f"[{'PASS' if ok else 'FAIL'}] {key} {title}: {detail}"
    RESULTS[key] = line
    return ok, line


@pytest.mark.parametrize("key, title, fn", CRITERIA, ids=[c[0] for c in CRITERIA])
def test_criterion(key, title, fn):
    ok, line = run_criterion(key, title, fn)
    print(line)
    assert ok, line


def main() -> int:
    failures = 0
    for key, title, fn in CRITERIA:
        ok, line = run_criterion(key, title, fn)
        print(line, flush=True)
        failures += not ok
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
