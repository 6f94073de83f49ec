"""Commutator calculus over the generators ``x_i`` and ``J_i``.

Momenta never appear as symbols: ``[p_i, p_j] = 0`` and ``[p_i, g(p)] = 0``,
so every momentum dependence lives in the coefficients, which are
:class:`~gupforge.scalarcalc.ScalarField` objects.  An element is a dict from
normal-ordered words to coefficients, with the coefficient standing to the
*left* of the word.

Normal order puts all ``X`` before all ``J`` with ascending indices.  Words
are sorted by adjacent swaps; each swap of a misordered pair emits the
commutator, which is either shorter (lower degree) or replaces two ``X`` by a
``J``, so the rewrite terminates.  Coefficients are moved leftward through
symbols using ``s g = g s + [s, g]``.

The rotation generators are kept abstract.  In particular ``p . J`` is not
assumed to vanish; :func:`project_orbital` imposes ``J = L`` explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .scalarcalc import (
    NATURAL,
    ONE,
    P_COMPONENTS,
    ZERO,
    DomainError,
    RadialProfile,
    ScalarField,
    UnitSystem,
    lift_radial,
)

SYMBOLS = ("X1", "X2", "X3", "J1", "J2", "J3")
Word = Tuple[int, ...]
DEGREE_CAP = 4
FUZZ_POINTS = 25
FUZZ_SEED = 20240611
ZERO_RTOL = 1e-12


class DegreeCapError(RuntimeError):
    pass


def levi_civita(i: int, j: int, k: int) -> int:
    return (i - j) * (j - k) * (k - i) // 2


def word_str(word: Word) -> str:
    return "*".join(SYMBOLS[s] for s in word) or "1"


def _is_x(s: int) -> bool:
    return s < 3


@dataclass(frozen=True)
class AlgebraSpec:
    """Deformation profiles of a candidate rotationally invariant algebra.

    ``[x_i, x_j] = (ħ/κc)² a(p) i ε_ijk J_k`` and
    ``[x_i, p_j] = iħ (f(p) δ_ij + g2(p) p_i p_j)``.
    """

    a: RadialProfile
    f: RadialProfile
    g2: RadialProfile = field(default_factory=lambda: RadialProfile.constant(0.0, name="0"))
    kappa: float = 1.0
    units: UnitSystem = NATURAL
    orbital_projection: bool = False
    name: str = ""
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        pm = self.p_max
        top = 0.999 * pm if math.isfinite(pm) else 10.0 * self.kappa * self.units.c
        probe = np.linspace(1e-3 * top, top, 64)
        fv = np.real(np.asarray(self.f(probe)))
        if np.any(fv <= 0):
            raise ValueError(f"{self.name or 'spec'}: f must be positive on its domain")

    @property
    def p_max(self) -> float:
        return min(self.a.p_max, self.f.p_max, self.g2.p_max)

    @property
    def momentum_scale(self) -> float:
        return self.kappa * self.units.c

    def with_projection(self, flag: bool = True) -> "AlgebraSpec":
        return AlgebraSpec(self.a, self.f, self.g2, self.kappa, self.units, flag, self.name, self.params)


def probe_momenta(spec: AlgebraSpec, n: int, seed: int = FUZZ_SEED, rng=None) -> np.ndarray:
    """Random momenta inside the spec's domain, never at the origin."""
    rng = rng if rng is not None else np.random.default_rng(seed)
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    if math.isfinite(spec.p_max):
        lo, hi = 0.05 * spec.p_max, 0.95 * spec.p_max
    else:
        lo, hi = 0.05 * spec.momentum_scale, 2.0 * spec.momentum_scale
    r = rng.uniform(lo, hi, size=(n, 1))
    return d * r


class BracketAlgebra:
    """Rewrite system for one :class:`AlgebraSpec`."""

    def __init__(self, spec: AlgebraSpec, degree_cap: int = DEGREE_CAP, fuzz: Optional[np.ndarray] = None):
        self.spec = spec
        self.degree_cap = degree_cap
        self.hbar = spec.units.hbar
        self.xx_scale = (spec.units.hbar / (spec.kappa * spec.units.c)) ** 2
        self.a_field = lift_radial(spec.a)
        self.f_field = lift_radial(spec.f)
        self.g2_field = lift_radial(spec.g2)
        self.fuzz = probe_momenta(spec, FUZZ_POINTS) if fuzz is None else np.asarray(fuzz, float)
        fmax = float(np.max(np.abs(self.f_field(self.fuzz))))
        self.zero_tol = ZERO_RTOL * max(1.0, self.hbar) ** 3 * max(1.0, fmax)
        self._normal_cache: Dict[Word, Dict[Word, ScalarField]] = {}

    # generators -------------------------------------------------------------
    def X(self, i: int) -> "Element":
        return Element(self, {(i - 1,): ONE})

    def J(self, i: int) -> "Element":
        return Element(self, {(i + 2,): ONE})

    def p(self, i: int) -> "Element":
        return self.scalar(P_COMPONENTS[i - 1])

    def scalar(self, g) -> "Element":
        g = g if isinstance(g, ScalarField) else ScalarField.constant(g)
        return Element(self, {(): g}) if not g.is_zero else Element(self, {})

    def zero(self) -> "Element":
        return Element(self, {})

    # elementary brackets -----------------------------------------------------
    def symbol_coeff_bracket(self, s: int, g: ScalarField) -> ScalarField:
        """``[s, g(p)]`` for a generator ``s``; always a pure coefficient."""
        if g.const is not None:
            return ZERO
        P = P_COMPONENTS
        if _is_x(s):
            i = s
            out = self.f_field * g.partial(i)
            if not self.g2_field.is_zero:
                radial = ZERO
                for j in range(3):
                    radial = radial + P[j] * g.partial(j)
                out = out + self.g2_field * P[i] * radial
            return (1j * self.hbar) * out
        i = s - 3
        out = ZERO
        for a in range(3):
            for k in range(3):
                e = levi_civita(i, a, k)
                if e:
                    out = out + (1j * e) * (P[k] * g.partial(a))
        return out

    def symbol_bracket(self, s: int, t: int) -> List[Tuple[ScalarField, Word]]:
        """``[s, t]`` for generator symbols as a list of (coefficient, word)."""
        out = []
        if _is_x(s) and _is_x(t):
            for k in range(3):
                e = levi_civita(s, t, k)
                if e:
                    out.append(((1j * e * self.xx_scale) * self.a_field, (k + 3,)))
        elif not _is_x(s) and _is_x(t):  # [J_i, X_j] = i ε_ijk X_k
            for k in range(3):
                e = levi_civita(s - 3, t, k)
                if e:
                    out.append((ScalarField.constant(1j * e), (k,)))
        elif _is_x(s) and not _is_x(t):  # [X_i, J_j] = -i ε_jik X_k
            for k in range(3):
                e = levi_civita(t - 3, s, k)
                if e:
                    out.append((ScalarField.constant(-1j * e), (k,)))
        else:
            for k in range(3):
                e = levi_civita(s - 3, t - 3, k)
                if e:
                    out.append((ScalarField.constant(1j * e), (k + 3,)))
        return out

    # rewriting -----------------------------------------------------------------
    def word_times_coeff(self, word: Word, g: ScalarField) -> List[Tuple[ScalarField, Word]]:
        """Rewrite ``word * g`` as a sum of ``coefficient * subword``."""
        if g.is_zero:
            return []
        if not word:
            return [(g, ())]
        head, s = word[:-1], word[-1]
        out = [(c, w + (s,)) for c, w in self.word_times_coeff(head, g)]
        h = self.symbol_coeff_bracket(s, g)
        if not h.is_zero:
            out.extend(self.word_times_coeff(head, h))
        return out

    def normalize(self, word: Word) -> Dict[Word, ScalarField]:
        if len(word) > self.degree_cap:
            raise DegreeCapError(f"word {word_str(word)} exceeds degree cap {self.degree_cap}")
        cached = self._normal_cache.get(word)
        if cached is not None:
            return cached
        for i in range(len(word) - 1):
            if word[i] > word[i + 1]:
                break
        else:
            result = {word: ONE}
            self._normal_cache[word] = result
            return result
        s, t = word[i], word[i + 1]
        prefix, suffix = word[:i], word[i + 2:]
        acc: Dict[Word, ScalarField] = {}
        _accumulate(acc, self.normalize(prefix + (t, s) + suffix), ONE)
        for c, mid in self.symbol_bracket(s, t):
            for c2, w2 in self.word_times_coeff(prefix, c):
                _accumulate(acc, self.normalize(w2 + mid + suffix), c2)
        result = {w: c for w, c in acc.items() if not c.is_zero}
        self._normal_cache[word] = result
        return result

    def negligible(self, g: ScalarField) -> bool:
        if g.is_zero:
            return True
        vals = np.asarray(g(self.fuzz))
        return bool(np.max(np.abs(vals)) <= self.zero_tol)

    def prune(self, terms: Dict[Word, ScalarField]) -> Dict[Word, ScalarField]:
        return {w: c for w, c in terms.items() if not self.negligible(c)}


def _accumulate(acc: Dict[Word, ScalarField], terms: Dict[Word, ScalarField], factor: ScalarField):
    for w, c in terms.items():
        prod = factor * c
        if prod.is_zero:
            continue
        acc[w] = acc[w] + prod if w in acc else prod


class Element:
    """Finite sum of ``coefficient * normal word`` terms."""

    __slots__ = ("algebra", "terms")

    def __init__(self, algebra: BracketAlgebra, terms: Dict[Word, ScalarField]):
        self.algebra = algebra
        self.terms = terms

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, word: Word) -> ScalarField:
        return self.terms.get(tuple(word), ZERO)

    def coefficient_of(self, *names: str) -> ScalarField:
        return self.coefficient(tuple(SYMBOLS.index(n) for n in names))

    @property
    def j_degree(self) -> int:
        return max((sum(1 for s in w if not _is_x(s)) for w in self.terms), default=0)

    def _combine(self, other: "Element", sign: float) -> "Element":
        acc = dict(self.terms)
        for w, c in other.terms.items():
            c = c if sign > 0 else -c
            acc[w] = acc[w] + c if w in acc else c
        return Element(self.algebra, self.algebra.prune(acc))

    def __add__(self, other: "Element") -> "Element":
        return self._combine(other, 1.0)

    def __sub__(self, other: "Element") -> "Element":
        return self._combine(other, -1.0)

    def __neg__(self) -> "Element":
        return Element(self.algebra, {w: -c for w, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, Element):
            return mul(self, other)
        return mul(self, self.algebra.scalar(other))

    def __rmul__(self, other):
        return mul(self.algebra.scalar(other), self)

    def words(self) -> List[str]:
        return [word_str(w) for w in self.terms]

    def __repr__(self) -> str:
        body = " + ".join(f"[{c.label}]*{word_str(w)}" for w, c in self.terms.items())
        return f"Element({body or '0'})"


def mul(lhs: Element, rhs: Element) -> Element:
    """Normal-ordered product."""
    alg = lhs.algebra
    acc: Dict[Word, ScalarField] = {}
    for w1, c1 in lhs.terms.items():
        for w2, c2 in rhs.terms.items():
            for c3, w3 in alg.word_times_coeff(w1, c2):
                _accumulate(acc, alg.normalize(w3 + w2), c1 * c3)
    return Element(alg, alg.prune(acc))


def commutator(lhs: Element, rhs: Element) -> Element:
    return mul(lhs, rhs) - mul(rhs, lhs)


# ---------------------------------------------------------------------------
# Jacobi residuals
# ---------------------------------------------------------------------------


def _algebra(spec_or_alg) -> BracketAlgebra:
    if isinstance(spec_or_alg, BracketAlgebra):
        return spec_or_alg
    return BracketAlgebra(spec_or_alg)


def jacobi_xxx(spec, project: Optional[bool] = None) -> Element:
    """``[x1,[x2,x3]] + [x2,[x3,x1]] + [x3,[x1,x2]]``.

    Projection onto orbital angular momentum follows
    ``spec.orbital_projection`` unless ``project`` is given.
    """
    alg = _algebra(spec)
    x = [alg.X(i) for i in (1, 2, 3)]
    res = alg.zero()
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        res = res + commutator(x[i], commutator(x[j], x[k]))
    if project is None:
        project = alg.spec.orbital_projection
    return project_orbital(res) if project else res


def jacobi_xxp(spec, i: int, j: int, k: int, project: Optional[bool] = None) -> Element:
    """``[x_i,[x_j,p_k]] + [x_j,[p_k,x_i]] + [p_k,[x_i,x_j]]`` (1-based indices)."""
    alg = _algebra(spec)
    xi, xj, pk = alg.X(i), alg.X(j), alg.p(k)
    res = commutator(xi, commutator(xj, pk)) + commutator(xj, commutator(pk, xi)) + commutator(pk, commutator(xi, xj))
    if project is None:
        project = alg.spec.orbital_projection
    return project_orbital(res) if project else res


def jacobi_xxp_all(spec, project: Optional[bool] = None) -> Dict[Tuple[int, int, int], Element]:
    """Residuals for every index triple with ``i < j``; the rest follow by antisymmetry."""
    alg = _algebra(spec)
    return {
        (i, j, k): jacobi_xxp(alg, i, j, k, project)
        for i in (1, 2, 3)
        for j in (1, 2, 3)
        if i < j
        for k in (1, 2, 3)
    }


def project_orbital(e: Element) -> Element:
    """Drop the component of every J-linear coefficient vector along ``p``."""
    if e.j_degree > 1:
        raise ValueError("orbital projection supports J-degree <= 1 only")
    alg = e.algebra
    P = P_COMPONENTS
    out: Dict[Word, ScalarField] = {}
    groups: Dict[Word, List[ScalarField]] = {}
    for w, c in e.terms.items():
        if w and not _is_x(w[-1]):
            vec = groups.setdefault(w[:-1], [ZERO, ZERO, ZERO])
            vec[w[-1] - 3] = vec[w[-1] - 3] + c
        else:
            out[w] = c
    p2 = P[0] * P[0] + P[1] * P[1] + P[2] * P[2]
    for prefix, v in groups.items():
        pv = P[0] * v[0] + P[1] * v[1] + P[2] * v[2]
        if pv.is_zero:
            for k in range(3):
                if not v[k].is_zero:
                    out[prefix + (k + 3,)] = v[k]
            continue
        ratio = pv / p2
        for k in range(3):
            out[prefix + (k + 3,)] = v[k] - P[k] * ratio
    return Element(alg, alg.prune(out))


def residual_norm(e, samples) -> float:
    """Max coefficient magnitude over ``samples`` in units of ``ħ f(p)``.

    Accepts an :class:`Element` or an iterable of them.
    """
    elements = [e] if isinstance(e, Element) else list(e)
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if np.any(np.linalg.norm(samples, axis=1) == 0):
        raise DomainError("residual samples must avoid p = 0")
    worst = 0.0
    for el in elements:
        if el.is_zero:
            continue
        alg = el.algebra
        scale = alg.hbar * np.abs(np.asarray(alg.f_field(samples)))
        for c in el.terms.values():
            worst = max(worst, float(np.max(np.abs(np.asarray(c(samples))) / scale)))
    return worst


def residual_report(spec: AlgebraSpec, samples) -> dict:
    """Both Jacobi residual norms for ``spec``, with and without projection."""
    alg = BracketAlgebra(spec)
    xxx = jacobi_xxx(alg, project=False)
    xxp = jacobi_xxp_all(alg, project=False)
    return {
        "xxx": residual_norm(xxx, samples),
        "xxp": residual_norm(xxp.values(), samples),
        "xxx_orbital": residual_norm(project_orbital(xxx), samples),
        "xxp_orbital": residual_norm([project_orbital(v) for v in xxp.values()], samples),
    }
