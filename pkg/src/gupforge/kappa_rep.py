"""Momentum-space representations of the deformed Poincaré algebras.

Operators act on test functions of momentum (:class:`ScalarField`), so every
commutator is evaluated exactly to roundoff through nested dual numbers.

Generators, for a case with on-shell energy ``ℰ(p)``:

* ``P_i`` multiplies by ``p_i`` and ``H`` by ``ℰ(|p|)``;
* ``J_ij = -i (p_i ∂_j - p_j ∂_i)``;
* ``K_i = i λ(p) ∂_i``.

The boost profile follows from demanding ``[K_i, H] = i P_i``: this forces
``λ ∂ℰ/∂p = p``.  For ``sin(τℰ)/τ = sqrt(p² + m²)`` that gives
``λ = sqrt(p²+m²) cos(τℰ) = sin(2τℰ)/(2τ)``, and then ``[K_i, P_j]`` and
``[K_i, K_j]`` are *checked*, not assumed.  The hyperbolic branch is the same
with ``sin → sinh``.  For a spatial lattice in 1+1 the roles of ``H`` and
``P`` swap and ``K = i ℰ ∂_p``.

Algebra checks run with ħ = c = 1.  Position operators and velocities carry
the unit system of the case.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .scalarcalc import (
    NATURAL,
    P_COMPONENTS,
    ZERO,
    DomainError,
    ScalarField,
    UnitSystem,
    arcsin,
    arcsinh,
    cos,
    cosh,
    exp,
    momentum_norm,
    primal,
    sin,
    sinh,
    sqrt,
)

KINDS = ("sine", "sinh", "continuum", "space")


@dataclass(frozen=True)
class DispersionCase:
    """``kind`` picks the deformation; for ``space`` the step ``tau`` is the lattice spacing."""

    kind: str
    tau: float = 0.0
    mass: float = 0.0
    units: UnitSystem = NATURAL

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.kind != "continuum" and not self.tau > 0:
            raise ValueError("deformed kinds need tau > 0")
        if self.mass < 0:
            raise ValueError("mass must be non-negative")

    @property
    def energy_max(self) -> float:
        """Largest on-shell energy (finite on the sine and lattice branches)."""
        hbar = self.units.hbar
        if self.kind == "sine":
            return math.pi * hbar / (2 * self.tau)
        if self.kind == "space":
            return math.sqrt(self.tau ** -2 + self.mass ** 2)
        return math.inf

    @property
    def p_limit(self) -> float:
        """Largest momentum on the propagating branch."""
        hbar, c = self.units.hbar, self.units.c
        if self.kind == "sine":
            e = hbar / self.tau
            return math.sqrt(max((e / c) ** 2 - (self.mass * c) ** 2, 0.0))
        if self.kind == "space":
            return math.pi / (2 * self.tau)
        return math.inf

    def rest_energy(self, p):
        c = self.units.c
        return sqrt(p * p * c * c + (self.mass * c * c) ** 2)


def energy_on_shell(p, case: DispersionCase):
    """On-shell energy for momentum modulus ``p`` (dual-aware)."""
    hbar = case.units.hbar
    if case.kind == "space":
        d = case.tau
        s = sin(d * p) / d
        return sqrt(s * s + case.mass ** 2)
    E = case.rest_energy(p)
    if case.kind == "continuum":
        return E
    z = case.tau * E / hbar
    if case.kind == "sine":
        zp = np.asarray(primal(z))
        if np.any(zp > 1 + 1e-15):
            raise DomainError(
                f"τE/ħ = {float(np.max(zp)):.6g} > 1: beyond the sine branch (ℰ_max = {case.energy_max:.6g})"
            )
        return hbar * arcsin(z) / case.tau
    return hbar * arcsinh(z) / case.tau


def boost_profile(p, case: DispersionCase):
    """λ(p) in ``K = i λ ∂`` (natural units)."""
    e = energy_on_shell(p, case)
    if case.kind == "sine":
        return sin(2 * case.tau * e) / (2 * case.tau)
    if case.kind == "sinh":
        return sinh(2 * case.tau * e) / (2 * case.tau)
    return e


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------


class PointwiseOperator:
    """Linear map on test functions; composition with ``@``."""

    def __init__(self, action: Callable[[ScalarField], ScalarField], label: str = ""):
        self.action = action
        self.label = label

    def __call__(self, phi: ScalarField) -> ScalarField:
        return self.action(phi)

    def __matmul__(self, other: "PointwiseOperator") -> "PointwiseOperator":
        return PointwiseOperator(lambda phi: self(other(phi)), f"{self.label}{other.label}")

    def __add__(self, other):
        return PointwiseOperator(lambda phi: self(phi) + other(phi), f"({self.label}+{other.label})")

    def __sub__(self, other):
        return PointwiseOperator(lambda phi: self(phi) - other(phi), f"({self.label}-{other.label})")

    def __rmul__(self, scalar):
        return PointwiseOperator(lambda phi: scalar * self(phi), f"{scalar}{self.label}")

    def __repr__(self):
        return f"PointwiseOperator({self.label})"


def multiply(g: ScalarField, label: str = "") -> PointwiseOperator:
    return PointwiseOperator(lambda phi: g * phi, label or g.label)


def derivative_op(coef: ScalarField, i: int, label: str = "") -> PointwiseOperator:
    """``coef(p) ∂/∂p_i``."""
    return PointwiseOperator(lambda phi: coef * phi.partial(i), label or f"{coef.label}d{i + 1}")


def bracket(A: PointwiseOperator, B: PointwiseOperator) -> PointwiseOperator:
    return PointwiseOperator(lambda phi: A(B(phi)) - B(A(phi)), f"[{A.label},{B.label}]")


def _field_1d(fn: Callable, label: str) -> ScalarField:
    return ScalarField(lambda p: fn(p[0]), label=label)


def energy_field(case: DispersionCase, dims: int = 3) -> ScalarField:
    if dims == 1:
        return _field_1d(lambda q: energy_on_shell(q, case), "H")
    return ScalarField(lambda p: energy_on_shell(momentum_norm(p), case), label="H")


def angular_momentum(i: int, j: int) -> PointwiseOperator:
    P = P_COMPONENTS
    mi = -1j * P[i]
    mj = -1j * P[j]
    return PointwiseOperator(lambda phi: mi * phi.partial(j) - mj * phi.partial(i), f"J{i + 1}{j + 1}")


def generator_reps(case: DispersionCase, dims: int = 3) -> Dict[str, PointwiseOperator]:
    """``H``, ``P_i``, ``K_i`` and (3+1) ``J_ij`` for ``case``.

    Keys: ``H``, ``P``/``K`` in 1+1; ``P1..P3``, ``K1..K3``, ``J12, J13, J23``... in 3+1.
    """
    if dims not in (1, 3):
        raise ValueError("dims must be 1 or 3")
    if case.kind == "space" and dims != 1:
        raise ValueError("the spatial-lattice algebra is 1+1 only")
    H = energy_field(case, dims)
    ops = {"H": multiply(H, "H")}
    if dims == 1:
        ops["P"] = multiply(P_COMPONENTS[0], "P")
        if case.kind == "space":
            lam = ScalarField(lambda p: 1j * energy_on_shell(p[0], case), label="iℰ")
        else:
            lam = ScalarField(lambda p: 1j * boost_profile(p[0], case), label="iλ")
        ops["K"] = derivative_op(lam, 0, "K")
        return ops
    lam = ScalarField(lambda p: 1j * boost_profile(momentum_norm(p), case), label="iλ")
    for i in range(3):
        ops[f"P{i + 1}"] = multiply(P_COMPONENTS[i], f"P{i + 1}")
        ops[f"K{i + 1}"] = derivative_op(lam, i, f"K{i + 1}")
    for i, j in itertools.permutations(range(3), 2):
        ops[f"J{i + 1}{j + 1}"] = angular_momentum(i, j)
    return ops


# ---------------------------------------------------------------------------
# Residual checks
# ---------------------------------------------------------------------------


def default_test_functions(dims: int = 3, n: int = 5, seed: int = 11) -> List[ScalarField]:
    """Gaussians times low-order complex polynomials, deterministic."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        c0 = complex(*rng.normal(size=2))
        c1 = rng.normal(size=3) + 1j * rng.normal(size=3)
        c2 = complex(*rng.normal(size=2))
        center = rng.normal(scale=0.3, size=3)
        width = rng.uniform(0.5, 1.5)
        if dims == 1:
            c1[1:] = 0
            center[1:] = 0

        def phi(p, c0=c0, c1=c1, c2=c2, center=center, width=width):
            poly = c0 + c1[0] * p[0] + c1[1] * p[1] + c1[2] * p[2] + c2 * p[0] * p[dims - 1]
            r2 = (p[0] - center[0]) ** 2 + (p[1] - center[1]) ** 2 + (p[2] - center[2]) ** 2
            return poly * exp(-r2 / (2 * width * width))

        out.append(ScalarField(phi, label=f"phi{k}"))
    return out


def sample_momenta(case: DispersionCase, dims: int, n: int, seed: int = 5) -> np.ndarray:
    rng = np.random.default_rng(seed)
    top = case.p_limit if math.isfinite(case.p_limit) else 2.0
    r = rng.uniform(0.05, 0.9, size=n) * top
    if dims == 1:
        sign = rng.choice([-1.0, 1.0], size=n)
        return np.stack([sign * r, np.zeros(n), np.zeros(n)], axis=1)
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d * r[:, None]


@dataclass
class Relation:
    name: str
    lhs: tuple  # (A, B) for [A, B]
    rhs: PointwiseOperator


def relative_residual(A, B, rhs, samples, test_functions) -> float:
    """``max |[A,B]φ - rhs φ| / max(|ABφ| + |BAφ| + |rhs φ|)`` per test function."""
    worst = 0.0
    for phi in test_functions:
        ab, ba, r = A(B(phi))(samples), B(A(phi))(samples), rhs(phi)(samples)
        scale = np.max(np.abs(ab) + np.abs(ba) + np.abs(r))
        err = np.max(np.abs(ab - ba - r))
        worst = max(worst, float(err / scale) if scale > 0 else float(err))
    return worst


def _zero_op():
    return PointwiseOperator(lambda phi: ZERO, "0")


def relations(case: DispersionCase, dims: int = 3) -> List[Relation]:
    """Printed commutation relations of ``case``, expressed through the representation."""
    ops = generator_reps(case, dims)
    H = ops["H"]
    zero = _zero_op()
    tau = case.tau
    rels: List[Relation] = []
    if dims == 1:
        P, K = ops["P"], ops["K"]
        rels.append(Relation("[P,H]=0", (P, H), zero))
        if case.kind == "space":
            d = tau
            rhs_kh = multiply(ScalarField(lambda p: 1j * sin(2 * d * p[0]) / (2 * d)), "i sin(2dP)/2d")
            rels.append(Relation("[K,P]=iH", (K, P), 1j * H))
            rels.append(Relation("[K,H]=i sin(2dP)/(2d)", (K, H), rhs_kh))
        else:
            rels.append(Relation("[K,H]=iP", (K, H), 1j * P))
            rels.append(Relation(f"[K,P]=i {_lam_name(case)}", (K, P), _lam_of_h(case, 1)))
        return rels
    for i in range(3):
        Pi, Ki = ops[f"P{i + 1}"], ops[f"K{i + 1}"]
        rels.append(Relation(f"[P{i + 1},H]=0", (Pi, H), zero))
        rels.append(Relation(f"[K{i + 1},H]=iP{i + 1}", (Ki, H), 1j * Pi))
        for j in range(3):
            Pj = ops[f"P{j + 1}"]
            rhs = _lam_of_h(case, 3) if i == j else zero
            rels.append(Relation(f"[K{i + 1},P{j + 1}]", (Ki, Pj), rhs))
            if i < j:
                rels.append(Relation(f"[P{i + 1},P{j + 1}]=0", (Pi, Pj), zero))
                rels.append(Relation(f"[K{i + 1},K{j + 1}]", (Ki, ops[f"K{j + 1}"]), _kk_rhs(case, ops, i, j)))
    # rotations stay undeformed
    for i, j in ((0, 1), (0, 2), (1, 2)):
        Jij = ops[f"J{i + 1}{j + 1}"]
        rels.append(Relation(f"[J{i + 1}{j + 1},H]=0", (Jij, H), zero))
        for k in range(3):
            for name in ("P", "K"):
                Vj, Vi = ops[f"{name}{j + 1}"], ops[f"{name}{i + 1}"]
                rhs = zero
                if k == i:
                    rhs = 1j * Vj
                if k == j:
                    rhs = -1j * Vi
                rels.append(Relation(f"[J{i + 1}{j + 1},{name}{k + 1}]", (Jij, ops[f"{name}{k + 1}"]), rhs))
    rels.append(Relation("[J23,J31]=iJ12", (ops["J23"], ops["J31"]), 1j * ops["J12"]))
    rels.append(Relation("[J31,J12]=iJ23", (ops["J31"], ops["J12"]), 1j * ops["J23"]))
    rels.append(Relation("[J12,J23]=iJ31", (ops["J12"], ops["J23"]), 1j * ops["J31"]))
    return rels


def _lam_name(case):
    return {"sine": "sin(2τH)/(2τ)", "sinh": "sinh(2τH)/(2τ)", "continuum": "H"}[case.kind]


def _lam_of_h(case: DispersionCase, dims: int) -> PointwiseOperator:
    """``i δ sin(2τH)/(2τ)`` built from the energy field (not from λ)."""
    H = energy_field(case, dims)
    tau = case.tau
    if case.kind == "sine":
        g = ScalarField(lambda p: 1j * sin(2 * tau * H.evaluate(p)) / (2 * tau))
    elif case.kind == "sinh":
        g = ScalarField(lambda p: 1j * sinh(2 * tau * H.evaluate(p)) / (2 * tau))
    else:
        g = ScalarField(lambda p: 1j * H.evaluate(p))
    return multiply(g, "iλ(H)")


def _kk_rhs(case, ops, i, j) -> PointwiseOperator:
    """``-i J_ij cos(2τH) ∓ i τ² P^k (P_i J_jk + P_j J_ki + P_k J_ij)``."""
    H = energy_field(case, 3)
    tau = case.tau
    P = P_COMPONENTS
    if case.kind == "sine":
        cfac = ScalarField(lambda p: cos(2 * tau * H.evaluate(p)))
        sign = -1.0
    elif case.kind == "sinh":
        cfac = ScalarField(lambda p: cosh(2 * tau * H.evaluate(p)))
        sign = 1.0
    else:
        cfac = ScalarField.constant(1.0)
        sign = 0.0

    def J(a, b):
        return ZERO_OP if a == b else ops[f"J{a + 1}{b + 1}"]

    def act(phi):
        out = (-1j) * (cfac * J(i, j)(phi))
        if sign:
            acc = ZERO
            for k in range(3):
                inner = P[i] * J(j, k)(phi) + P[j] * J(k, i)(phi) + P[k] * J(i, j)(phi)
                acc = acc + P[k] * inner
            out = out + (1j * sign * tau * tau) * acc
        return out

    return PointwiseOperator(act, f"KK{i + 1}{j + 1}")


ZERO_OP = _zero_op()


def casimir_residual(case: DispersionCase, samples: np.ndarray) -> float:
    """``max |C₂ - m²|`` on shell, which should vanish identically."""
    p = np.linalg.norm(np.atleast_2d(samples), axis=1)
    E = np.asarray(energy_on_shell(p, case))
    m2 = case.mass ** 2
    if case.kind == "space":
        c2 = E ** 2 - np.sin(case.tau * p) ** 2 / case.tau ** 2
    elif case.kind == "sine":
        c2 = np.sin(case.tau * E) ** 2 / case.tau ** 2 - p ** 2
    elif case.kind == "sinh":
        c2 = np.sinh(case.tau * E) ** 2 / case.tau ** 2 - p ** 2
    else:
        c2 = E ** 2 - p ** 2
    return float(np.max(np.abs(c2 - m2) / np.maximum(1.0, p ** 2 + m2)))


def check_algebra(case: DispersionCase, dims: int = 3, samples=None, test_functions=None) -> List[dict]:
    """Residual report for every relation of ``case`` plus the Casimir identity."""
    if samples is None:
        samples = sample_momenta(case, dims, 50)
    samples = np.atleast_2d(np.asarray(samples, float))
    if case.kind == "sine":
        energy_on_shell(np.linalg.norm(samples, axis=1), case)  # raises outside the branch
    if test_functions is None:
        test_functions = default_test_functions(dims)
    report = []
    for rel in relations(case, dims):
        A, B = rel.lhs
        report.append(
            {
                "relation": rel.name,
                "case": case.kind,
                "dims": dims,
                "max_residual": relative_residual(A, B, rel.rhs, samples, test_functions),
                "samples": int(len(samples)),
            }
        )
    report.append(
        {"relation": "C2=m^2", "case": case.kind, "dims": dims,
         "max_residual": casimir_residual(case, samples), "samples": int(len(samples))}
    )
    return report


def jacobi_residual(ops: Sequence[PointwiseOperator], samples, test_functions) -> float:
    """``[A,[B,C]] + cyclic`` applied to test functions, relative to its pieces."""
    A, B, C = ops
    worst = 0.0
    for phi in test_functions:
        terms = [bracket(X, bracket(Y, Z))(phi)(samples) for X, Y, Z in ((A, B, C), (B, C, A), (C, A, B))]
        scale = sum(np.max(np.abs(t)) for t in terms)
        if scale > 0:
            worst = max(worst, float(np.max(np.abs(sum(terms))) / scale))
    return worst


def report_json(report: List[dict]) -> str:
    return json.dumps(report, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# Position operator and velocity
# ---------------------------------------------------------------------------


def position_factor(case: DispersionCase) -> Callable:
    """``C(p)`` with ``x_i = iħ C(p) ∂_i``."""
    hbar = case.units.hbar

    def C(p):
        if case.kind == "continuum":
            return 1.0 + 0.0 * p
        e = energy_on_shell(p, case)
        if case.kind == "sine":
            return cos(case.tau * e / hbar)
        if case.kind == "sinh":
            return cosh(case.tau * e / hbar)
        raise ValueError("no position operator for the spatial lattice case")

    return C


def position_operator(case: DispersionCase) -> List[PointwiseOperator]:
    C = position_factor(case)
    coef = ScalarField(lambda p: (1j * case.units.hbar) * C(momentum_norm(p)), label="iħC")
    return [derivative_op(coef, i, f"x{i + 1}") for i in range(3)]


def expected_xp(case: DispersionCase, p):
    """Closed-form δ-coefficient of ``[x_i, p_j]`` divided by iħ."""
    hbar = case.units.hbar
    E = case.rest_energy(p)
    if case.kind == "sine":
        return np.sqrt(1 - (case.tau * E / hbar) ** 2)
    if case.kind == "sinh":
        return np.sqrt(1 + (case.tau * E / hbar) ** 2)
    return np.ones_like(np.asarray(p, float))


def xx_coefficient(case: DispersionCase) -> float:
    """``[x_i, x_j] = i · coefficient · J_ij``."""
    ct2 = (case.units.c * case.tau) ** 2
    return {"sine": ct2, "sinh": -ct2, "continuum": 0.0}[case.kind]


def position_commutator_residuals(case: DispersionCase, samples=None, test_functions=None) -> dict:
    """Relative residuals of ``[x_i,p_j]`` and ``[x_i,x_j]`` against their closed forms."""
    if samples is None:
        samples = sample_momenta(case, 3, 50)
    if test_functions is None:
        test_functions = default_test_functions(3)
    hbar = case.units.hbar
    x = position_operator(case)
    Pm = [multiply(P_COMPONENTS[i]) for i in range(3)]
    fxp = ScalarField(lambda p: (1j * hbar) * _xp_dual(case, momentum_norm(p)))
    xp, xx = 0.0, 0.0
    k = xx_coefficient(case)
    for i in range(3):
        for j in range(3):
            rhs = multiply(fxp) if i == j else ZERO_OP
            xp = max(xp, relative_residual(x[i], Pm[j], rhs, samples, test_functions))
            if i < j:
                Jij = angular_momentum(i, j)
                xx = max(xx, relative_residual(x[i], x[j], (1j * k) * Jij, samples, test_functions))
    return {"xp": xp, "xx": xx}


def _xp_dual(case, p):
    hbar = case.units.hbar
    z = case.tau * case.rest_energy(p) / hbar
    if case.kind == "sine":
        return sqrt(1 - z * z)
    if case.kind == "sinh":
        return sqrt(1 + z * z)
    return 1.0 + 0.0 * p


def velocity(case: DispersionCase, p: float, naive: bool = False) -> float:
    """Speed for momentum modulus ``p``.

    ``naive`` uses the canonical position operator, giving ``∂ℰ/∂p``; otherwise
    ``v = (i/ħ)[H, x]`` with the corrected operator, applied to a constant.
    """
    hbar, c = case.units.hbar, case.units.c
    if naive:
        E = float(case.rest_energy(p))
        if case.kind == "continuum":
            return p * c * c / E
        e = float(energy_on_shell(p, case))
        cos_t = math.cos(case.tau * e / hbar) if case.kind == "sine" else math.cosh(case.tau * e / hbar)
        if cos_t <= 1e-15:
            raise DomainError("naive velocity diverges at τℰ = π/2")
        return p * c * c / E / cos_t
    H = multiply(energy_field(case, 3), "H")
    x1 = position_operator(case)[0]
    one = ScalarField.constant(1.0)
    v = (1j / hbar) * (bracket(H, x1)(one))(np.array([p, 0.0, 0.0]))
    return float(np.real(v))


def discrete_space_group_velocity(p, d: float):
    """Massless group velocity on a spatial lattice: ``cos(d|p|) p̂``."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 0:
        return float(np.cos(d * abs(arr)))
    r = np.linalg.norm(arr)
    if r == 0:
        raise DomainError("direction undefined at p = 0")
    return np.cos(d * r) * arr / r


# ---------------------------------------------------------------------------
# Momentum grids
# ---------------------------------------------------------------------------

STENCIL_ORDER = 4
_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


@dataclass(frozen=True)
class Grid1D:
    p_min: float
    p_max: float
    n: int

    def __post_init__(self):
        if self.n < 9 or not self.p_max > self.p_min:
            raise ValueError("grid needs p_max > p_min and at least 9 nodes")

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.n)

    @property
    def h(self) -> float:
        return (self.p_max - self.p_min) / (self.n - 1)

    def refine(self) -> "Grid1D":
        return Grid1D(self.p_min, self.p_max, 2 * self.n - 1)


def grid_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order central first derivative; NaN on the two boundary nodes each side."""
    v = np.asarray(values)
    out = np.full(v.shape, np.nan, dtype=np.result_type(v, float))
    out[2:-2] = (_D1[0] * v[:-4] + _D1[1] * v[1:-3] + _D1[3] * v[3:-1] + _D1[4] * v[4:]) / h
    return out


@dataclass
class GridState:
    grid: Grid1D
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.grid.n,):
            raise ValueError("amplitude count must match the grid")
        if not np.all(np.isfinite(self.amplitudes)):
            raise ValueError("amplitudes must be finite")

    @classmethod
    def from_function(cls, grid: Grid1D, fn: Callable) -> "GridState":
        return cls(grid, fn(grid.nodes))


def interior(n: int, margin: int = 2 * 2) -> slice:
    """Nodes at least two stencil half-widths from either boundary."""
    if n <= 2 * margin:
        raise ValueError("grid too small for the interior margin")
    return slice(margin, n - margin)


def grid_commutator_xp(case: DispersionCase, grid: Grid1D, psi: Callable) -> float:
    """``max |[x, p]ψ - iħ C ψ|`` on the interior, ``x = iħ C(p) d/dp``."""
    hbar = case.units.hbar
    q = grid.nodes
    C = np.asarray(position_factor(case)(np.abs(q)), dtype=float)
    state = GridState.from_function(grid, psi).amplitudes

    def x(v):
        return 1j * hbar * C * grid_derivative(v, grid.h)

    comm = x(q * state) - q * x(state)
    sl = interior(grid.n)
    return float(np.max(np.abs(comm[sl] - 1j * hbar * C[sl] * state[sl])))
