"""Differentiable scalar functions of momentum.

Everything downstream (bracket coefficients, operator representations,
transformed momenta) is built out of two objects defined here:

* :class:`RadialProfile`, a function of ``p = |p|`` such as ``f(p)`` or ``a(p)``;
* :class:`ScalarField`, a function of the three momentum components.

Derivatives are computed with tagged forward-mode dual numbers, so they are
exact to roundoff and can be nested to any order.  Components of a
:class:`Dual` may be numpy arrays, which lets a single evaluation run over a
whole batch of probe momenta.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np


class DomainError(ValueError):
    """Raised when a function is evaluated outside its domain."""


# ---------------------------------------------------------------------------
# Dual numbers
# ---------------------------------------------------------------------------

_tag_counter = itertools.count(1)


def new_tag() -> int:
    return next(_tag_counter)


class Dual:
    """``re + eps * ε`` with ``ε² = 0``, labelled by a perturbation tag.

    Components may themselves be :class:`Dual` instances carrying *smaller*
    tags; this is what makes nested differentiation safe.
    """

    __slots__ = ("tag", "re", "eps")
    __array_ufunc__ = None  # make ndarray defer to our reflected operators
    __array_priority__ = 1000

    def __init__(self, tag: int, re, eps):
        self.tag = tag
        self.re = re
        self.eps = eps

    def _split(self, other, tag):
        if isinstance(other, Dual) and other.tag == tag:
            return other.re, other.eps
        return other, 0.0

    def _top(self, other) -> int:
        if isinstance(other, Dual) and other.tag > self.tag:
            return other.tag
        return self.tag

    def __add__(self, other):
        t = self._top(other)
        a, b = self._split(self, t)
        c, d = self._split(other, t)
        return Dual(t, a + c, b + d)

    __radd__ = __add__

    def __sub__(self, other):
        t = self._top(other)
        a, b = self._split(self, t)
        c, d = self._split(other, t)
        return Dual(t, a - c, b - d)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return Dual(self.tag, -self.re, -self.eps)

    def __pos__(self):
        return self

    def __mul__(self, other):
        t = self._top(other)
        a, b = self._split(self, t)
        c, d = self._split(other, t)
        return Dual(t, a * c, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        t = self._top(other)
        a, b = self._split(self, t)
        c, d = self._split(other, t)
        return Dual(t, a / c, (b * c - a * d) / (c * c))

    def __rtruediv__(self, other):
        t = self.tag
        a, b = self.re, self.eps
        return Dual(t, other / a, -other * b / (a * a))

    def __pow__(self, n):
        if isinstance(n, Dual):
            return exp(n * log(self))
        if n == 0:
            return 1.0
        if n == 1:
            return self
        if n == 2:
            return self * self
        return Dual(self.tag, self.re ** n, n * self.re ** (n - 1) * self.eps)

    def __rpow__(self, base):
        return exp(self * math.log(base))

    def __repr__(self) -> str:
        return f"Dual[{self.tag}]({self.re!r} + {self.eps!r}ε)"


def primal(x):
    """Strip all dual parts, returning the underlying number/array."""
    while isinstance(x, Dual):
        x = x.re
    return x


def tangent(x, tag: int):
    """Coefficient of the ε carrying ``tag`` in ``x``."""
    if not isinstance(x, Dual) or x.tag < tag:
        return 0.0
    if x.tag == tag:
        return x.eps
    return Dual(x.tag, tangent(x.re, tag), tangent(x.eps, tag))


def _elementary(base: Callable, deriv: Callable) -> Callable:
    def op(x):
        if isinstance(x, Dual):
            return Dual(x.tag, op(x.re), deriv(x.re) * x.eps)
        return base(x)

    op.__name__ = base.__name__
    return op


# derivative rules are lambdas so they resolve the dual-aware names lazily
sqrt = _elementary(np.sqrt, lambda a: 0.5 / sqrt(a))
exp = _elementary(np.exp, lambda a: exp(a))
log = _elementary(np.log, lambda a: 1.0 / a)
sin = _elementary(np.sin, lambda a: cos(a))
cos = _elementary(np.cos, lambda a: -sin(a))
sinh = _elementary(np.sinh, lambda a: cosh(a))
cosh = _elementary(np.cosh, lambda a: sinh(a))
arcsin = _elementary(np.arcsin, lambda a: 1.0 / sqrt(1.0 - a * a))
arcsinh = _elementary(np.arcsinh, lambda a: 1.0 / sqrt(1.0 + a * a))
arctan = _elementary(np.arctan, lambda a: 1.0 / (1.0 + a * a))


def derivative(fn: Callable, x):
    """d fn / dx at ``x`` (``x`` may itself be dual)."""
    t = new_tag()
    return tangent(fn(Dual(t, x, 1.0)), t)


# ---------------------------------------------------------------------------
# Units
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UnitSystem:
    hbar: float = 1.0
    c: float = 1.0
    G_N: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "c", "G_N"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def natural(cls, planck_mass: float = 1.0) -> "UnitSystem":
        """ħ = c = 1 with the Planck mass given directly."""
        if not planck_mass > 0:
            raise ValueError("planck_mass must be positive")
        return cls(1.0, 1.0, 1.0 / planck_mass ** 2)

    @property
    def planck_mass(self) -> float:
        return math.sqrt(self.hbar * self.c / self.G_N)

    @property
    def planck_length(self) -> float:
        return math.sqrt(self.hbar * self.G_N / self.c ** 3)


NATURAL = UnitSystem()


# ---------------------------------------------------------------------------
# Radial profiles and scalar fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialProfile:
    """A function of the momentum modulus on ``[0, p_max]``.

    ``fn`` must accept floats, arrays and :class:`Dual` values and be built
    from the dual-aware functions in this module.
    """

    fn: Callable
    p_max: float = math.inf
    name: str = ""
    const: Optional[float] = field(default=None, compare=False)

    @classmethod
    def constant(cls, value: float, p_max: float = math.inf, name: str = "") -> "RadialProfile":
        v = float(value)
        return cls(lambda p: v + 0.0 * p, p_max, name or repr(v), const=v)

    def _check(self, p):
        x = np.asarray(primal(p), dtype=float)
        if np.any(~np.isfinite(x)):
            raise DomainError(f"{self.name or 'profile'}: non-finite momentum")
        if np.any(x < 0) or np.any(x > self.p_max * (1 + 1e-12)):
            bad = x[(x < 0) | (x > self.p_max * (1 + 1e-12))]
            raise DomainError(
                f"{self.name or 'profile'}: momentum {bad.flat[0]!r} outside [0, {self.p_max}]"
            )

    def __call__(self, p):
        self._check(p)
        with np.errstate(invalid="ignore"):
            out = self.fn(p)
        if not np.all(np.isfinite(np.asarray(primal(out)))):
            raise DomainError(f"{self.name or 'profile'}: non-finite value")
        return out

    def derivative(self, p):
        self._check(p)
        return derivative(self.fn, p)

    def second_derivative(self, p):
        self._check(p)
        return derivative(lambda q: derivative(self.fn, q), p)

    def deriv_profile(self) -> "RadialProfile":
        if self.const is not None:
            return RadialProfile.constant(0.0, self.p_max, f"d({self.name})")
        fn = self.fn
        return RadialProfile(lambda p: derivative(fn, p), self.p_max, f"d({self.name})")


Momentum = Sequence  # three components, each float / ndarray / Dual


class ScalarField:
    """A function of the momentum components ``(p1, p2, p3)``.

    ``fn`` receives a 3-tuple whose entries may be arrays or duals.  ``const``
    marks fields known to be constant, which keeps exact zeros exact.
    ``partials`` optionally supplies closed-form first derivatives.
    """

    __slots__ = ("fn", "const", "label", "_partials")

    def __init__(self, fn: Callable, const=None, label: str = "", partials=None):
        self.fn = fn
        self.const = const
        self.label = label
        self._partials = partials

    # construction -------------------------------------------------------
    @classmethod
    def constant(cls, value) -> "ScalarField":
        v = complex(value) if isinstance(value, complex) else float(value)
        return cls(lambda p: v, const=v, label=repr(v))

    @classmethod
    def component(cls, i: int) -> "ScalarField":
        partials = tuple(cls.constant(1.0 if j == i else 0.0) for j in range(3))
        return cls(lambda p: p[i], label=f"p{i + 1}", partials=partials)

    @property
    def is_zero(self) -> bool:
        return self.const is not None and self.const == 0

    # evaluation -----------------------------------------------------------
    def evaluate(self, p: Momentum):
        """Raw evaluation on a 3-tuple (dual-aware, no shape handling)."""
        if self.const is not None:
            return self.const
        return self.fn(p)

    def __call__(self, momenta):
        m = np.asarray(momenta, dtype=float)
        single = m.ndim == 1
        m = np.atleast_2d(m)
        val = self.evaluate((m[:, 0], m[:, 1], m[:, 2]))
        val = np.broadcast_to(np.asarray(val), (m.shape[0],)).copy()
        return val[0] if single else val

    def partial(self, i: int) -> "ScalarField":
        if self.const is not None:
            return ZERO
        if self._partials is not None:
            return self._partials[i]
        fn = self.fn

        def d(p):
            t = new_tag()
            q = list(p)
            q[i] = Dual(t, q[i], 1.0)
            return tangent(fn(tuple(q)), t)

        return ScalarField(d, label=f"d{i + 1}({self.label})")

    def gradient(self, momenta):
        return np.stack([self.partial(i)(momenta) for i in range(3)], axis=-1)

    def hessian(self, momenta):
        return np.stack(
            [np.stack([self.partial(i).partial(j)(momenta) for j in range(3)], axis=-1) for i in range(3)],
            axis=-2,
        )

    # arithmetic -------------------------------------------------------------
    def __add__(self, other):
        other = _as_field(other)
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        if self.const is not None and other.const is not None:
            return ScalarField.constant(self.const + other.const)
        f, g = self.evaluate, other.evaluate
        return ScalarField(lambda p: f(p) + g(p), label=f"({self.label}+{other.label})")

    __radd__ = __add__

    def __neg__(self):
        if self.const is not None:
            return ScalarField.constant(-self.const)
        f = self.evaluate
        return ScalarField(lambda p: -f(p), label=f"-{self.label}")

    def __sub__(self, other):
        return self + (-_as_field(other))

    def __rsub__(self, other):
        return _as_field(other) - self

    def __mul__(self, other):
        other = _as_field(other)
        if self.is_zero or other.is_zero:
            return ZERO
        if self.const is not None and other.const is not None:
            return ScalarField.constant(self.const * other.const)
        if self.const == 1:
            return other
        if other.const == 1:
            return self
        f, g = self.evaluate, other.evaluate
        return ScalarField(lambda p: f(p) * g(p), label=f"{self.label}*{other.label}")

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_field(other)
        if other.const is not None:
            return self * (1.0 / other.const)
        f, g = self.evaluate, other.evaluate
        return ScalarField(lambda p: f(p) / g(p), label=f"{self.label}/{other.label}")

    def __repr__(self) -> str:
        return f"ScalarField({self.label or '?'})"


def _as_field(x) -> ScalarField:
    if isinstance(x, ScalarField):
        return x
    return ScalarField.constant(x)


ZERO = ScalarField.constant(0.0)
ONE = ScalarField.constant(1.0)


def momentum_norm(p: Momentum):
    return sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2])


def lift_radial(profile: RadialProfile) -> ScalarField:
    """Compose ``profile`` with ``|p|``; undefined at the origin."""
    if profile.const is not None:
        return ScalarField.constant(profile.const)

    def fn(p):
        r = momentum_norm(p)
        if np.any(np.asarray(primal(r)) == 0):
            raise DomainError("radial field evaluated at p = 0")
        return profile(r)

    return ScalarField(fn, label=profile.name or "radial")


P_COMPONENTS = tuple(ScalarField.component(i) for i in range(3))


# ---------------------------------------------------------------------------
# Truncated binomial series
# ---------------------------------------------------------------------------

BINOMIAL_MAX_ORDER = 5000
DEFAULT_SERIES_ORDER = 12


def binomial_half(n: int) -> Fraction:
    """Generalized binomial coefficient C(1/2, n) as an exact rational."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > BINOMIAL_MAX_ORDER:
        raise OverflowError(f"binomial_half limited to n <= {BINOMIAL_MAX_ORDER}, got {n}")
    num = (-1) ** n * math.factorial(2 * n)
    den = 4 ** n * (1 - 2 * n) * math.factorial(n) ** 2
    return Fraction(num, den)


def sqrt_series_eval(x: float, order: int = DEFAULT_SERIES_ORDER) -> float:
    """Partial sum of the binomial series of ``sqrt(1 + x)``."""
    if order < 0:
        raise ValueError("order must be non-negative")
    if not abs(x) < 1:
        raise DomainError(f"sqrt series diverges for |x| >= 1 (x={x})")
    return math.fsum(float(binomial_half(n)) * x ** n for n in range(order + 1))
