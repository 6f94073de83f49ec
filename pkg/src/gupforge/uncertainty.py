"""Lower bounds on Δx as a function of Δp for the competing principles."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

from .scalarcalc import NATURAL, UnitSystem

CURVE_POINTS = 401  # odd count puts a node exactly at M_P c
CURVE_RANGE = (1e-3, 1e3)  # in units of M_P c


@dataclass(frozen=True)
class UncertaintyParams:
    beta0: float = 1.0
    mean_p: float = 0.0
    mass: float = 0.0
    variant: str = "p"  # "p" or "E"
    units: UnitSystem = NATURAL

    def __post_init__(self):
        if self.beta0 < 0:
            raise ValueError("beta0 must be non-negative")
        if self.variant not in ("p", "E"):
            raise ValueError("variant must be 'p' or 'E'")

    @property
    def planck_momentum(self) -> float:
        return self.units.planck_mass * self.units.c

    @property
    def beta(self) -> float:
        """β = β₀ / (M_P c)²."""
        return self.beta0 / self.planck_momentum ** 2

    @property
    def kappa(self) -> float:
        """Deformation mass with 1/κ² = 2β₀/M_P²."""
        return math.inf if self.beta0 == 0 else self.units.planck_mass / math.sqrt(2 * self.beta0)

    @classmethod
    def from_kappa(cls, kappa: float, units: UnitSystem = NATURAL, **kw) -> "UncertaintyParams":
        return cls(beta0=units.planck_mass ** 2 / (2 * kappa ** 2), units=units, **kw)


def _check_dp(dp):
    arr = np.asarray(dp, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("Δp must be positive")
    return arr


def _out(x, like):
    return float(x) if np.ndim(like) == 0 else x


def bound_heisenberg(dp, units: UnitSystem = NATURAL):
    arr = _check_dp(dp)
    return _out(units.hbar / (2 * arr), dp)


def bound_mm(dp, params: UncertaintyParams = UncertaintyParams()):
    arr = _check_dp(dp)
    P2 = params.planck_momentum ** 2
    extra = params.mean_p ** 2
    if params.variant == "E":
        extra += (params.mass * params.units.c) ** 2
    val = params.units.hbar / (2 * arr) * np.sqrt(1 + 2 * params.beta0 * (extra + arr ** 2) / P2)
    return _out(val, dp)


def bound_kmm(dp, params: UncertaintyParams = UncertaintyParams()):
    arr = _check_dp(dp)
    P2 = params.planck_momentum ** 2
    val = params.units.hbar / (2 * arr) * (1 + params.beta0 * arr ** 2 / P2)
    return _out(val, dp)


def bound_qc(dp, params: UncertaintyParams = UncertaintyParams()):
    """Quantum-to-classical branch with ⟨p⟩ = 0, set to zero past the critical Δp."""
    arr = _check_dp(dp)
    P2 = params.planck_momentum ** 2
    val = params.units.hbar / (2 * arr) * np.sqrt(np.maximum(0.0, 1 - 2 * params.beta0 * arr ** 2 / P2))
    return _out(val, dp)


def critical_dp(params: UncertaintyParams) -> float:
    return math.inf if params.beta0 == 0 else params.planck_momentum / math.sqrt(2 * params.beta0)


def gup1_constant(beta0: float, units: UnitSystem = NATURAL) -> float:
    """Coefficient of G_N Δp in the leading-order principle."""
    if beta0 < 0:
        raise ValueError("beta0 must be non-negative")
    return beta0 / (2 * units.c ** 3)


PRINCIPLES = {
    "heisenberg": lambda dp, prm: bound_heisenberg(dp, prm.units),
    "mm_plus": bound_mm,
    "mm_minus": bound_qc,
    "kmm": bound_kmm,
}


@dataclass
class UncertaintyCurve:
    label: str
    delta_p: np.ndarray
    bound: np.ndarray
    params: UncertaintyParams
    fn: Callable = field(repr=False, default=None)


def sample_curve(label: str, params: UncertaintyParams = UncertaintyParams(), n: int = CURVE_POINTS, span=CURVE_RANGE) -> UncertaintyCurve:
    fn = PRINCIPLES[label]
    grid = np.geomspace(span[0], span[1], n) * params.planck_momentum
    return UncertaintyCurve(label, grid, np.asarray(fn(grid, params)), params, lambda d: fn(d, params))


@dataclass(frozen=True)
class MinimumResult:
    dp_star: float
    dx_star: float
    attained_at_infinity: bool


def _aitken(x0, x1, x2):
    den = x2 - 2 * x1 + x0
    if abs(den) <= 1e-14 * max(abs(x0), abs(x1), abs(x2), 1e-300):
        return x2
    return x2 - (x2 - x1) ** 2 / den


def min_dx(curve: UncertaintyCurve) -> MinimumResult:
    """Grid argmin refined by golden-section search in log Δp.

    A minimum at the upper grid edge is treated as an infimum reached only as
    Δp → ∞; its value is extrapolated from three doublings beyond the grid.
    """
    dp, dx = curve.delta_p, curve.bound
    if not np.all(np.isfinite(dx)):
        raise ValueError("curve has non-finite values")
    pm = curve.params.planck_momentum
    if dp[0] > 1e-2 * pm or dp[-1] < 1e2 * pm:
        raise ValueError("grid must span at least four decades around M_P c")
    i = int(np.argmin(dx))
    if i == len(dp) - 1:
        big = dp[-1] * 1e3
        vals = [float(curve.fn(big * 2.0 ** k)) for k in range(3)]
        return MinimumResult(math.inf, max(_aitken(*vals), 0.0), True)
    if i == 0:
        raise ValueError("minimum at lower grid edge; extend the grid")
    g = lambda u: float(curve.fn(math.exp(u)))
    res = optimize.minimize_scalar(
        g, bracket=(math.log(dp[i - 1]), math.log(dp[i]), math.log(dp[i + 1])), method="golden", tol=1e-10
    )
    return MinimumResult(float(math.exp(res.x)), float(res.fun), False)


def jensen_gap(momenta: np.ndarray, weights: np.ndarray, beta: float) -> float:
    """``⟨sqrt(1+2βp²)⟩ - sqrt(1+2β⟨p²⟩)`` for a discrete distribution.

    Concavity of the square root makes this non-positive.
    """
    w = np.asarray(weights, float)
    w = w / w.sum()
    p2 = np.asarray(momenta, float) ** 2
    return float(np.dot(w, np.sqrt(1 + 2 * beta * p2)) - math.sqrt(1 + 2 * beta * np.dot(w, p2)))


def critical_exponent_fit(spec, window=(0.99, 0.999), n: int = 200):
    """Fit ``f ≈ A (1 - E/κc²)^ν`` near the critical energy of an E-form preset.

    Returns ``(nu, A)``.
    """
    c = spec.units.c
    m = spec.params.get("mass", 0.0)
    ec = spec.kappa * c * c
    x = np.linspace(window[0], window[1], n)
    E = x * ec
    p = np.sqrt(np.maximum((E / c) ** 2 - (m * c) ** 2, 0.0))
    fv = np.real(np.asarray(spec.f(p)))
    slope, intercept = np.polyfit(np.log(1 - x), np.log(fv), 1)
    return float(slope), float(math.exp(intercept))


CSV_COLUMNS = ("delta_p", "heisenberg", "mm_plus", "mm_minus", "kmm")


def _fmt(x: float) -> str:
    return f"{x:.16e}"


def curves_csv(params: UncertaintyParams = UncertaintyParams(), n: int = CURVE_POINTS, span=CURVE_RANGE) -> str:
    """Plot-ready table of every bound on a shared logarithmic Δp grid."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    buf.write(
        f"# beta0={params.beta0!r},mean_p={params.mean_p!r},mass={params.mass!r},variant={params.variant},"
        f"hbar={params.units.hbar!r},c={params.units.c!r},G_N={params.units.G_N!r}\n"
    )
    w.writerow(CSV_COLUMNS)
    curves = [sample_curve(lbl, params, n, span) for lbl in CSV_COLUMNS[1:]]
    for row in zip(curves[0].delta_p, *(cv.bound for cv in curves)):
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def read_curves_csv(text: str) -> dict:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    return {h: body[:, k] for k, h in enumerate(header)}
