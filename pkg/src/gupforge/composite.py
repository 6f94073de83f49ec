"""Center-of-mass commutator of an N-particle body under a deformed algebra.

With ``X = (1/N) Σ x_α`` and ``P = Σ p_α`` the isotropic part of ``[X_i, P_j]``
is ``iħ δ_ij (1/N) Σ f(|p_α|)``.  For the quadratic profile ``f = 1 + βp²`` the
sum splits into a rigid piece ``βP²/N²`` and the spread of the ``p_α²``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bracket import AlgebraSpec
from .scalarcalc import DomainError


@dataclass(frozen=True)
class Body:
    momenta: np.ndarray  # shape (N, 3)
    masses: Optional[np.ndarray] = None

    def __post_init__(self):
        p = np.atleast_2d(np.asarray(self.momenta, dtype=float))
        if p.ndim != 2 or p.shape[1] != 3 or p.shape[0] < 1:
            raise ValueError("body needs N >= 1 momentum 3-vectors")
        if not np.all(np.isfinite(p)):
            raise ValueError("constituent momenta must be finite")
        object.__setattr__(self, "momenta", p)
        if self.masses is not None:
            m = np.asarray(self.masses, dtype=float)
            if m.shape != (p.shape[0],):
                raise ValueError("one mass per constituent")
            if np.any(m != m[0]):
                raise ValueError("constituents with unequal masses are not supported")
            object.__setattr__(self, "masses", m)

    @property
    def n(self) -> int:
        return self.momenta.shape[0]

    @property
    def total_momentum(self) -> np.ndarray:
        return np.array([math.fsum(col) for col in self.momenta.T])

    @property
    def magnitudes(self) -> np.ndarray:
        return np.linalg.norm(self.momenta, axis=1)

    @classmethod
    def rigid(cls, P, n: int) -> "Body":
        """``n`` constituents each carrying ``P/n``."""
        P = np.broadcast_to(np.asarray(P, dtype=float), (3,)) if np.ndim(P) else np.array([float(P), 0.0, 0.0])
        return cls(np.tile(P / n, (n, 1)))


def _f_values(spec: AlgebraSpec, mags: np.ndarray) -> np.ndarray:
    if np.any(mags > spec.p_max):
        raise DomainError(f"a constituent momentum exceeds the domain limit {spec.p_max:.6g}")
    return np.real(np.atleast_1d(np.asarray(spec.f(mags), dtype=complex)))


def com_commutator(body: Body, spec: AlgebraSpec) -> float:
    """Coefficient of ``iħ δ_ij`` in ``[X_i, P_j]``: the mean of ``f`` over constituents."""
    return math.fsum(_f_values(spec, body.magnitudes)) / body.n


def rigid_effective(P, n: int, spec: AlgebraSpec) -> float:
    """``f(|P|/n)``: every constituent carries the same share of ``P``."""
    if n < 1:
        raise ValueError("N must be at least 1")
    mag = float(np.linalg.norm(P)) if np.ndim(P) else abs(float(P))
    return float(_f_values(spec, np.array([mag / n]))[0])


def variance_decomposition(body: Body, beta: float):
    """Return ``(βP²/N², (β/N) Σ (p_α² - P²/N²))`` for ``f = 1 + βp²``."""
    n = body.n
    P2 = math.fsum(c * c for c in body.total_momentum)
    rigid = beta * P2 / (n * n)
    sq = [math.fsum(v * v for v in row) for row in body.momenta]
    spread = beta / n * math.fsum(s - P2 / (n * n) for s in sq)
    return rigid, spread


def effective_beta(beta: float, n: int) -> float:
    return beta / (n * n)


def parse_bodies_csv(text: str) -> list:
    """Bodies as CSV rows ``body_id, px, py, pz``; rows of one id form one body.

    A file with only three columns is read as a single body.
    """
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].lstrip().startswith("#")]
    if rows and not _numeric(rows[0][-1]):
        rows = rows[1:]
    if not rows:
        raise ValueError("no constituents found")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("ragged CSV rows")
    if width == 3:
        return [Body(np.array(rows, dtype=float))]
    if width != 4:
        raise ValueError("expected columns px,py,pz or body,px,py,pz")
    groups: dict = {}
    for r in rows:
        groups.setdefault(r[0].strip(), []).append([float(v) for v in r[1:]])
    return [Body(np.array(v)) for v in groups.values()]


def _numeric(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def analyse(body: Body, spec: AlgebraSpec, beta: Optional[float] = None) -> dict:
    out = {
        "n": body.n,
        "total_momentum": body.total_momentum.tolist(),
        "com_commutator": com_commutator(body, spec),
        "rigid_effective": rigid_effective(body.total_momentum, body.n, spec),
    }
    if beta is not None:
        rigid, spread = variance_decomposition(body, beta)
        out.update(rigid_term=rigid, variance_term=spread, identity_gap=abs(1 + rigid + spread - out["com_commutator"]))
    return out
