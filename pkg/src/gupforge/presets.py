"""Named algebras, the ``f`` <-> ``a`` relations and branch classification."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, optimize

from .bracket import AlgebraSpec, BracketAlgebra, jacobi_xxp_all, jacobi_xxx, probe_momenta, project_orbital, residual_norm
from .scalarcalc import NATURAL, DomainError, Dual, RadialProfile, UnitSystem, derivative, primal, sqrt

CONSISTENCY_TOL = 1e-9
QUAD_EPSABS = 1e-12

PRESET_NAMES = ("heisenberg", "mm_plus_p", "mm_plus_E", "mm_minus_p", "mm_minus_E", "kmm", "ali")


def derive_a_from_f(f: RadialProfile, kappa: float = 1.0, units: UnitSystem = NATURAL) -> RadialProfile:
    """``a(p) = -κ²c² f f' / p``, the profile that makes ``[x,[x,p]]`` close."""
    k2c2 = (kappa * units.c) ** 2
    if f.const is not None:
        return RadialProfile.constant(0.0, f.p_max, "a[0]")
    ffn = f.fn

    def a(p):
        if np.any(np.asarray(primal(p)) == 0):
            raise DomainError("a(p) from f(p) is undefined at p = 0")
        return -k2c2 * ffn(p) * derivative(ffn, p) / p

    return RadialProfile(a, f.p_max, f"a[{f.name}]")


def _with_derivative(value, deriv):
    """Dual-aware function from a float evaluator and a dual-aware derivative."""

    def fn(p):
        if isinstance(p, Dual):
            return Dual(p.tag, fn(p.re), deriv(p.re) * p.eps)
        return value(p)

    return fn


def derive_f_from_a(
    a: RadialProfile,
    alpha: float = 1.0,
    kappa: float = 1.0,
    units: UnitSystem = NATURAL,
    p_search: Optional[float] = None,
) -> RadialProfile:
    """Integrate ``f f'/p = -a/κ²c²`` with ``f(0)² = alpha``.

    Constant ``a`` gives the closed form ``sqrt(alpha - a p²/κ²c²)``.  When the
    radicand reaches zero the returned profile's ``p_max`` marks the critical
    momentum.
    """
    if alpha <= 0:
        raise DomainError("integration constant alpha must be positive")
    k2c2 = (kappa * units.c) ** 2
    if a.const is not None:
        av = a.const
        p_max = math.sqrt(alpha * k2c2 / av) if av > 0 else math.inf
        p_max = min(p_max, a.p_max)
        if av == 0:
            return RadialProfile.constant(math.sqrt(alpha), p_max, f"f[a={av:g}]")
        return RadialProfile(lambda p: sqrt(alpha - av * p * p / k2c2), p_max, f"f[a={av:g}]")

    def radicand_scalar(p: float) -> float:
        val, _ = integrate.quad(lambda q: float(np.real(a(q))) * q, 0.0, p, epsabs=QUAD_EPSABS, epsrel=1e-13, limit=200)
        return alpha - 2.0 * val / k2c2

    top = p_search if p_search is not None else min(a.p_max, 1e3 * kappa * units.c)
    p_max = a.p_max
    if radicand_scalar(top) <= 0:
        p_max = optimize.brentq(radicand_scalar, 0.0, top, xtol=1e-14, rtol=4 * np.finfo(float).eps)

    def value(p):
        arr = np.asarray(p, dtype=float)
        out = np.vectorize(lambda q: math.sqrt(max(radicand_scalar(q), 0.0)))(arr)
        return out if arr.ndim else float(out)

    fn = None

    def deriv(p):
        return -a.fn(p) * p / (k2c2 * fn(p))

    fn = _with_derivative(value, deriv)
    return RadialProfile(fn, p_max, f"f[{a.name}]")


def _energy_rest_term(mass: float, units: UnitSystem) -> float:
    return (mass * units.c) ** 2


def preset(name: str, kappa: float = 1.0, units: UnitSystem = NATURAL, **params) -> AlgebraSpec:
    """Build a named algebra.

    ``kmm`` takes ``beta`` (momentum⁻²) or ``beta0`` (then β = β₀/(M_P c)²);
    the energy variants take ``mass``; ``ali`` takes ``alpha_ali``.
    """
    k2c2 = (kappa * units.c) ** 2
    orbital = bool(params.pop("orbital_projection", False))
    if name == "heisenberg":
        a = RadialProfile.constant(0.0, name="0")
        f = RadialProfile.constant(1.0, name="1")
        return AlgebraSpec(a, f, kappa=kappa, units=units, orbital_projection=orbital, name=name)
    if name in ("mm_plus_p", "mm_plus_E", "mm_minus_p", "mm_minus_E"):
        sign = 1.0 if "plus" in name else -1.0
        mass = float(params.pop("mass", 0.0)) if name.endswith("_E") else 0.0
        if name.endswith("_p") and params.pop("mass", 0.0):
            raise ValueError(f"{name} takes no mass")
        rest = _energy_rest_term(mass, units)
        if sign < 0:
            p_max2 = k2c2 - rest
            if p_max2 <= 0:
                raise ValueError("mass must satisfy m < kappa for the quantum-classical branch")
            p_max = math.sqrt(p_max2)
        else:
            p_max = math.inf
        if sign > 0:
            f = RadialProfile(lambda p: sqrt(1.0 + (p * p + rest) / k2c2), p_max, f"f[{name}]")
        else:
            # same radicand written so that it is exactly zero at the edge
            pm2 = p_max * p_max
            f = RadialProfile(lambda p: sqrt((pm2 - p * p) / k2c2), p_max, f"f[{name}]")
        a = RadialProfile.constant(-sign, p_max, "a")
        _reject_extra(name, params)
        return AlgebraSpec(
            a, f, kappa=kappa, units=units, orbital_projection=orbital, name=name,
            params={"mass": mass, "variant": "E" if name.endswith("_E") else "p"},
        )
    if name == "kmm":
        if "beta" in params:
            beta = float(params.pop("beta"))
        elif "beta0" in params:
            beta = float(params.pop("beta0")) / (units.planck_mass * units.c) ** 2
        else:
            raise ValueError("kmm needs beta or beta0")
        if not beta > 0:
            raise ValueError("beta must be positive")
        _reject_extra(name, params)
        f = RadialProfile(lambda p: 1.0 + beta * p * p, name="f[kmm]")
        a = RadialProfile(lambda p: -2.0 * beta * k2c2 * (1.0 + beta * p * p), name="a[kmm]")
        return AlgebraSpec(a, f, kappa=kappa, units=units, orbital_projection=orbital, name=name, params={"beta": beta})
    if name == "ali":
        al = float(params.pop("alpha_ali", 1e-4))
        if not al > 0:
            raise ValueError("alpha_ali must be positive")
        _reject_extra(name, params)
        # f has its minimum 3/4 at p = 1/(2 alpha), so it stays positive everywhere
        f = RadialProfile(lambda p: 1.0 - al * p + al * al * p * p, name="f[ali]")
        g2 = RadialProfile(lambda p: -al / p + 3.0 * al * al, name="g2[ali]")
        a = RadialProfile.constant(0.0, name="0")
        return AlgebraSpec(a, f, g2, kappa=kappa, units=units, orbital_projection=orbital, name=name, params={"alpha_ali": al})
    raise KeyError(f"unknown preset {name!r}; expected one of {', '.join(PRESET_NAMES)}")


def _reject_extra(name, params):
    if params:
        raise ValueError(f"unexpected parameters for {name}: {sorted(params)}")


@dataclass(frozen=True)
class BranchReport:
    label: str
    critical_scale: Optional[float]
    general_spin_consistent: bool
    residual_xxx: float = 0.0
    residual_xxp: float = 0.0
    residual_xxx_orbital: float = 0.0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def classify(spec: AlgebraSpec, n_probe: int = 30, seed: int = 7, tol: float = CONSISTENCY_TOL) -> BranchReport:
    """Label the branch of ``spec`` from its Jacobi residuals and the shape of ``f``."""
    samples = probe_momenta(spec, n_probe, seed=seed)
    alg = BracketAlgebra(spec)
    xxx = jacobi_xxx(alg, project=False)
    xxp = jacobi_xxp_all(alg, project=False)
    r_xxx = residual_norm(xxx, samples)
    r_xxp = residual_norm(xxp.values(), samples)
    r_orb = residual_norm(project_orbital(xxx), samples)
    general = r_xxx < tol and r_xxp < tol
    info = dict(residual_xxx=r_xxx, residual_xxp=r_xxp, residual_xxx_orbital=r_orb)

    if not general:
        projected_ok = r_orb < tol and r_xxp < tol
        return BranchReport("spin-zero-only" if projected_ok else "inconsistent", None, False, **info)

    if spec.f.const == 1.0 and spec.a.const == 0.0 and spec.g2.const == 0.0:
        return BranchReport("canonical", None, True, **info)

    if math.isfinite(spec.p_max):
        f_edge = float(np.real(spec.f(spec.p_max)))
        if abs(f_edge) < 1e-6:
            crit = spec.p_max
            if spec.params.get("variant") == "E":
                m = spec.params.get("mass", 0.0)
                c = spec.units.c
                crit = math.sqrt((spec.p_max * c) ** 2 + (m * c * c) ** 2)
            return BranchReport("quantum-classical", crit, True, **info)

    top = 1e4 * spec.momentum_scale
    grid = np.geomspace(1e-3 * spec.momentum_scale, top, 400)
    fv = np.real(np.asarray(spec.f(grid)))
    tail = fv[len(fv) // 2:]
    if np.all(np.diff(tail) > 0) and fv[-1] > 10 * fv[0]:
        return BranchReport("minimal-length", None, True, **info)
    return BranchReport("inconsistent", None, True, **info)
