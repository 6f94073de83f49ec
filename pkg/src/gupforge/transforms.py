"""Changes of momentum variable that restore a canonical or tensor-free bracket."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, interpolate

from .bracket import AlgebraSpec, BracketAlgebra, commutator, probe_momenta
from .kappa_rep import Grid1D, grid_derivative, interior
from .scalarcalc import NATURAL, DomainError, RadialProfile, ScalarField, UnitSystem, lift_radial

QUAD_OPTS = dict(epsabs=1e-13, epsrel=1e-13, limit=200)


def _f_real(f: RadialProfile, p: float) -> float:
    return float(np.real(f(p)))


@dataclass
class MomentumMap1D:
    """``k(p) = ∫₀^p dq / f(q)`` tabulated on ``[0, p_top]``.

    ``saturates`` is set when ``f`` vanishes at a finite edge and ``k`` tends
    to the finite limit ``k_max`` there.
    """

    f: RadialProfile
    p_nodes: np.ndarray
    k_nodes: np.ndarray
    saturates: bool = False
    _inverse: Callable = field(default=None, repr=False)

    def __post_init__(self):
        if np.any(np.diff(self.k_nodes) <= 0):
            raise ValueError("k(p) must be strictly increasing")
        self._inverse = interpolate.PchipInterpolator(self.k_nodes, self.p_nodes)

    @property
    def p_top(self) -> float:
        return float(self.p_nodes[-1])

    @property
    def k_max(self) -> float:
        return float(self.k_nodes[-1])

    def _k_scalar(self, p: float) -> float:
        if not 0 <= p <= self.p_top:
            raise DomainError(f"p={p} outside the tabulated range [0, {self.p_top:.6g}]")
        i = int(np.searchsorted(self.p_nodes, p))
        i = min(max(i, 1), len(self.p_nodes) - 1)
        # integrate from whichever neighbouring node is closer
        lo, hi = self.p_nodes[i - 1], self.p_nodes[i]
        if p - lo <= hi - p:
            base, start = self.k_nodes[i - 1], lo
        else:
            base, start = self.k_nodes[i], hi
        if p == start:
            return float(base)
        val, _ = integrate.quad(lambda q: 1.0 / _f_real(self.f, q), start, p, **QUAD_OPTS)
        return float(base + val)

    def k(self, p):
        arr = np.asarray(p, dtype=float)
        out = np.vectorize(self._k_scalar, otypes=[float])(arr)
        return float(out) if arr.ndim == 0 else out

    def _p_scalar(self, k: float) -> float:
        if not 0 <= k <= self.k_max:
            raise DomainError(f"k={k} outside the map range [0, {self.k_max:.6g}]")
        p = float(self._inverse(k))
        for _ in range(30):
            fp = _f_real(self.f, p)
            step = (self._k_scalar(p) - k) * fp
            p_new = min(max(p - step, 0.0), self.p_top)
            if abs(p_new - p) <= 1e-15 * max(1.0, p):
                return p_new
            p = p_new
        return p

    def p(self, k):
        arr = np.asarray(k, dtype=float)
        out = np.vectorize(self._p_scalar, otypes=[float])(arr)
        return float(out) if arr.ndim == 0 else out


def canonical_momentum_1d(f: RadialProfile, p_top: Optional[float] = None, n: int = 1025) -> MomentumMap1D:
    """Tabulate ``k(p)`` piecewise with adaptive quadrature."""
    bounded = math.isfinite(f.p_max)
    top = f.p_max if bounded else (p_top if p_top is not None else 100.0)
    if p_top is not None:
        top = min(top, p_top)
    edge_zero = bounded and top == f.p_max and abs(_f_real(f, f.p_max)) < 1e-12
    s = np.linspace(0.0, 1.0, n)
    # cluster nodes toward a vanishing-f edge where k(p) steepens
    p_nodes = top * (1 - (1 - s) ** 2) if edge_zero else top * s
    fvals = [_f_real(f, q) for q in p_nodes[:-1] if q > 0] if n > 2 else []
    if fvals and min(fvals) <= 0:
        raise DomainError("f must be positive on the domain")
    k_nodes = np.zeros(n)
    for i in range(1, n):
        with warnings.catch_warnings():
            # the last segment ends on an integrable 1/f singularity when f -> 0
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            seg, _ = integrate.quad(lambda q: 1.0 / _f_real(f, q), p_nodes[i - 1], p_nodes[i], **QUAD_OPTS)
        k_nodes[i] = k_nodes[i - 1] + seg
    return MomentumMap1D(f, p_nodes, k_nodes, saturates=edge_zero)


def cubic_test_function(p):
    p = np.asarray(p)
    return 1.0 + 0.5j * p - 0.3 * p ** 2 + 0.1j * p ** 3


def gaussian_test_function(center: float, width: float) -> Callable:
    def psi(p):
        p = np.asarray(p)
        return np.exp(-((p - center) ** 2) / (2 * width ** 2)) * (1 + 0.3j * p)

    return psi


def verify_canonical(
    f: RadialProfile,
    grid: Grid1D,
    mapping: Optional[MomentumMap1D] = None,
    psi: Optional[Callable] = None,
    units: UnitSystem = NATURAL,
) -> float:
    """``max |[x, k]ψ - iħψ| / (ħ max|ψ|)`` with ``x = iħ f(p) d/dp`` on the grid interior."""
    hbar = units.hbar
    mapping = mapping or canonical_momentum_1d(f, p_top=grid.p_max)
    q = grid.nodes
    if psi is None:
        span = grid.p_max - grid.p_min
        psi = gaussian_test_function(grid.p_min + 0.5 * span, span / 8)
    state = np.asarray(psi(q), dtype=complex)
    kq = mapping.k(q)
    fq = np.real(np.asarray(f(q), dtype=complex))

    def x(v):
        return 1j * hbar * fq * grid_derivative(v, grid.h)

    comm = x(kq * state) - kq * x(state)
    sl = interior(grid.n)
    return float(np.max(np.abs(comm[sl] - 1j * hbar * state[sl])) / (hbar * np.max(np.abs(state[sl]))))


def convergence_ratios(f: RadialProfile, grid: Grid1D, levels: int = 4, **kw):
    """Residuals on successively halved grids and the ratios between them."""
    res = []
    g = grid
    for _ in range(levels):
        res.append(verify_canonical(f, g, **kw))
        g = g.refine()
    return res, [a / b for a, b in zip(res, res[1:])]


# ---------------------------------------------------------------------------
# Tensor-term removal
# ---------------------------------------------------------------------------


def _clenshaw(coef: np.ndarray, t):
    b1 = b2 = 0.0 * t
    for c in coef[:0:-1]:
        b1, b2 = 2 * t * b1 - b2 + c, b1
    return t * b1 - b2 + coef[0]


@dataclass(frozen=True)
class TensorRemoval:
    u: RadialProfile
    coefficients: np.ndarray
    fit_error: float


def remove_tensor_term(
    f: RadialProfile,
    g2: RadialProfile,
    p_top: Optional[float] = None,
    degree: int = 48,
    rtol: float = 1e-12,
) -> TensorRemoval:
    """Solve ``u' = -g2 p u / (f + g2 p²)`` from ``u(0) = 1``.

    The solution is fitted by a Chebyshev series on ``[0, p_top]`` so that the
    returned profile can be differentiated through by the bracket engine.
    """
    if g2.const == 0.0:
        one = RadialProfile.constant(1.0, f.p_max, "u=1")
        return TensorRemoval(one, np.array([1.0]), 0.0)
    top = p_top if p_top is not None else (f.p_max if math.isfinite(f.p_max) else 2.5)
    top = min(top, f.p_max, g2.p_max)

    def g2p(p):
        # g2 may carry a 1/p piece; g2·p is regular at the origin
        return _f_real(g2, max(p, 1e-300)) * p

    def denom(p):
        return _f_real(f, p) + g2p(p) * p

    def rhs(p, u):
        return [-g2p(p) * u[0] / denom(p)]

    def crossing(p, u):
        return denom(p)

    crossing.terminal = True
    scan = np.linspace(0.0, top, 2049)
    den = np.array([denom(q) for q in scan])
    if np.any(den <= 0):
        raise DomainError(f"f + g2 p² vanishes near p = {scan[int(np.argmax(den <= 0))]:.6g}")
    nodes = 0.5 * top * (1 - np.cos(np.pi * (np.arange(degree + 1) + 0.5) / (degree + 1)))
    t_eval = np.concatenate(([0.0], np.sort(nodes), [top]))
    sol = integrate.solve_ivp(rhs, (0.0, top), [1.0], method="RK45", t_eval=t_eval, rtol=rtol, atol=1e-14, events=crossing)
    if sol.status == 1:
        raise DomainError(f"f + g2 p² vanishes near p = {sol.t_events[0][0]:.6g}")
    if not sol.success:
        raise RuntimeError(sol.message)
    u_nodes = sol.y[0][1:-1]
    t_nodes = 2 * np.sort(nodes) / top - 1
    coef = np.polynomial.chebyshev.chebfit(t_nodes, u_nodes, degree)
    check = np.linspace(-1, 1, 257)
    dense = integrate.solve_ivp(rhs, (0.0, top), [1.0], method="RK45", t_eval=0.5 * top * (check + 1), rtol=rtol, atol=1e-14)
    fit_err = float(np.max(np.abs(np.polynomial.chebyshev.chebval(check, coef) - dense.y[0])))

    def u(p):
        return _clenshaw(coef, 2 * p / top - 1)

    return TensorRemoval(RadialProfile(u, top, "u"), coef, fit_err)


def tensor_residuals(spec: AlgebraSpec, u: RadialProfile, samples: Optional[np.ndarray] = None) -> dict:
    """Decompose ``[x_i, u(p) p_j] = iħ (D δ_ij + T p_i p_j)`` with the bracket engine.

    Returns ``max |T|`` and ``max |D - f u|`` over probe momenta with all
    components non-zero.
    """
    alg = BracketAlgebra(spec)
    hbar = spec.units.hbar
    if samples is None:
        samples = probe_momenta(spec, 40, seed=3)
        samples = samples[np.all(np.abs(samples) > 1e-3 * spec.momentum_scale, axis=1)]
    samples = samples[np.linalg.norm(samples, axis=1) <= u.p_max]
    uf = lift_radial(u)
    ff = lift_radial(spec.f)
    t_max = d_max = 0.0
    for i in range(3):
        j = (i + 1) % 3
        kj = alg.scalar(uf * ScalarField.component(j))
        ki = alg.scalar(uf * ScalarField.component(i))
        cij = commutator(alg.X(i + 1), kj).coefficient(())
        cii = commutator(alg.X(i + 1), ki).coefficient(())
        vij = np.asarray(cij(samples)) / (1j * hbar)
        vii = np.asarray(cii(samples)) / (1j * hbar)
        T = vij / (samples[:, i] * samples[:, j])
        D = vii - T * samples[:, i] ** 2
        t_max = max(t_max, float(np.max(np.abs(T))))
        d_max = max(d_max, float(np.max(np.abs(D - np.asarray(ff(samples)) * np.asarray(uf(samples))))))
    return {"tensor": t_max, "delta_mismatch": d_max, "samples": int(len(samples))}


# ---------------------------------------------------------------------------
# Hamiltonian in the canonical variable
# ---------------------------------------------------------------------------


def transform_hamiltonian(f: RadialProfile, mass: float, mapping: Optional[MomentumMap1D] = None) -> Callable:
    """Kinetic energy ``p(k)² / 2m`` as a function of the canonical momentum.

    ``p(k)`` is generally transcendental, so any polynomial truncation in ``k``
    (a derivative expansion in position space) needs unbounded order.
    """
    if not mass > 0:
        raise ValueError("mass must be positive")
    mapping = mapping or canonical_momentum_1d(f)

    def kinetic(k):
        if math.isinf(mass):
            return 0.0 * np.asarray(k, dtype=float)
        return mapping.p(k) ** 2 / (2 * mass)

    return kinetic


def map_csv(mapping: MomentumMap1D, u: Optional[RadialProfile] = None, n: int = 101) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("p", "k", "u"))
    top = mapping.p_top if u is None else min(mapping.p_top, u.p_max)
    ps = np.linspace(0.0, top, n)
    ks = mapping.k(ps)
    us = np.ones_like(ps) if u is None else np.real(np.asarray([u(q) for q in ps], dtype=complex))
    for row in zip(ps, ks, us):
        w.writerow([f"{v:.16e}" for v in row])
    return buf.getvalue()
