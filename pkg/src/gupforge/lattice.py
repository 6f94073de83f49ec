"""Klein-Gordon evolution with a discrete spatial or temporal step.

Two set-ups, both periodic in space with ħ = c = 1:

``space``
    lattice spacing ``d``; ``-∂_t² φ + Δ_x² φ - m² φ = 0`` with the symmetric
    difference ``Δ_x φ = [φ(x+d) - φ(x-d)] / 2d``, integrated in continuous
    time with classical RK4.
``time``
    time step ``τ``; ``φ(t+2τ) = 2φ(t) - φ(t-2τ) + 4τ² (∂_x² - m²) φ(t)``.
    The ±τ difference only couples slices 2τ apart, so one sub-lattice is
    evolved and each call to :func:`step` advances time by 2τ.  ``∂_x²`` is
    spectral by default.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from .scalarcalc import DomainError

GROWTH_LIMIT = 1e6


class LatticeInstability(RuntimeError):
    pass


class EvanescentMode(DomainError):
    """Momentum outside the propagating band of the discrete-time branch."""


def analytic_energy(p, kind: str, step: float, mass: float = 0.0):
    p = np.asarray(p, dtype=float)
    if kind == "space":
        return np.sqrt(np.sin(step * p) ** 2 / step ** 2 + mass ** 2)
    z = step * np.sqrt(p ** 2 + mass ** 2)
    if np.any(z > 1):
        raise EvanescentMode(f"τ sqrt(p²+m²) = {float(np.max(z)):.6g} > 1")
    return np.arcsin(z) / step


def branch_limit(kind: str, step: float, mass: float = 0.0) -> float:
    if kind == "space":
        return math.pi / (2 * step)
    return math.sqrt(max(step ** -2 - mass ** 2, 0.0))


@dataclass(frozen=True)
class LatticeField1D:
    kind: str  # "space" or "time"
    step_size: float  # d or τ
    mass: float
    spacing: float  # node distance a_x
    slices: tuple  # (φ, ∂_t φ) for space; (φ(t-2τ), φ(t)) for time
    t: float = 0.0
    dt: float = 0.0  # RK4 step, space only
    spatial: str = "spectral"  # time kind: "spectral" or "fd2"
    norm0: float = 1.0

    @property
    def nodes(self) -> int:
        return self.slices[1].shape[0] if self.kind == "time" else self.slices[0].shape[0]

    @property
    def current(self) -> np.ndarray:
        return self.slices[1] if self.kind == "time" else self.slices[0]

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.nodes) * self.spacing

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.nodes, self.spacing)


def _laplacian_space(phi, d):
    return (np.roll(phi, -2) - 2 * phi + np.roll(phi, 2)) / (4 * d * d)


def _rhs_space(phi, d, m2):
    return _laplacian_space(phi, d) - m2 * phi


def step(field: LatticeField1D) -> LatticeField1D:
    """Advance by one step (``dt`` for space, ``2τ`` for time)."""
    if field.kind == "space":
        phi, pi = field.slices
        d, m2, h = field.step_size, field.mass ** 2, field.dt
        k1p, k1v = pi, _rhs_space(phi, d, m2)
        k2p, k2v = pi + 0.5 * h * k1v, _rhs_space(phi + 0.5 * h * k1p, d, m2)
        k3p, k3v = pi + 0.5 * h * k2v, _rhs_space(phi + 0.5 * h * k2p, d, m2)
        k4p, k4v = pi + h * k3v, _rhs_space(phi + h * k3p, d, m2)
        new = (
            phi + h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p),
            pi + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v),
        )
        out = replace(field, slices=new, t=field.t + h)
    else:
        prev, cur = field.slices
        tau, m2 = field.step_size, field.mass ** 2
        if field.spatial == "spectral":
            k = field.wavenumbers
            lap = np.fft.ifft(-(k ** 2) * np.fft.fft(cur))
        else:
            a = field.spacing
            lap = (np.roll(cur, -1) - 2 * cur + np.roll(cur, 1)) / (a * a)
        nxt = 2 * cur - prev + 4 * tau * tau * (lap - m2 * cur)
        out = replace(field, slices=(cur, nxt), t=field.t + 2 * tau)
    nrm = float(np.linalg.norm(out.current))
    if not math.isfinite(nrm) or nrm > GROWTH_LIMIT * field.norm0:
        raise LatticeInstability(f"norm grew from {field.norm0:.3g} to {nrm:.3g} at t={out.t:.6g}")
    return out


def _space_energy_of_k(k, d, m):
    return np.sqrt(np.sin(k * d) ** 2 / d ** 2 + m * m)


def init_space(phi0: np.ndarray, d: float, mass: float, dt: Optional[float] = None) -> LatticeField1D:
    """Positive-frequency seed: each Fourier mode starts as ``e^{-iℰt}``."""
    phi0 = np.asarray(phi0, dtype=complex)
    k = 2 * np.pi * np.fft.fftfreq(phi0.shape[0], d)
    E = _space_energy_of_k(k, d, mass)
    pi0 = np.fft.ifft(-1j * E * np.fft.fft(phi0))
    emax = math.sqrt(d ** -2 + mass ** 2)
    dt = dt if dt is not None else 0.05 / emax
    return LatticeField1D("space", d, mass, d, (phi0, pi0), dt=dt, norm0=float(np.linalg.norm(phi0)))


def init_time(
    phi0: np.ndarray, tau: float, mass: float, spacing: float, spatial: str = "spectral", seed: str = "analytic"
) -> LatticeField1D:
    """Second slice from the exact phase factor ``e^{-2iℰτ}`` (``seed='analytic'``)
    or from a second-order Taylor step with the continuum frequency (``seed='taylor'``,
    which excites the backward branch and so fits less accurately)."""
    phi0 = np.asarray(phi0, dtype=complex)
    n = phi0.shape[0]
    k = 2 * np.pi * np.fft.fftfreq(n, spacing)
    z = tau * np.sqrt(k ** 2 + mass ** 2)
    f0 = np.fft.fft(phi0)
    if seed == "analytic":
        E = np.arcsin(np.minimum(z, 1.0)) / tau
        nxt = np.fft.ifft(f0 * np.exp(-2j * E * tau))
    elif seed == "taylor":
        w = np.sqrt(k ** 2 + mass ** 2)
        nxt = np.fft.ifft(f0 * (1 - 2j * w * tau - 2 * (w * tau) ** 2))
    else:
        raise ValueError("seed must be 'analytic' or 'taylor'")
    # store (φ(t-2τ), φ(t)) with t = 2τ so the first step produces φ(4τ)
    return LatticeField1D(
        "time", tau, mass, spacing, (phi0, nxt), t=2 * tau, spatial=spatial, norm0=float(np.linalg.norm(phi0))
    )


# ---------------------------------------------------------------------------
# Measurements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LatticeConfig:
    kind: str = "space"
    step_size: float = 1.0
    mass: float = 0.0
    nodes: int = 512
    spacing: Optional[float] = None
    periods: float = 10.0
    dt: Optional[float] = None
    spatial: str = "spectral"
    seed: str = "analytic"

    def __post_init__(self):
        if self.kind not in ("space", "time"):
            raise ValueError("kind must be 'space' or 'time'")
        if not self.step_size > 0 or self.nodes < 16:
            raise ValueError("need step_size > 0 and at least 16 nodes")

    @property
    def node_spacing(self) -> float:
        if self.spacing is not None:
            return self.spacing
        if self.kind == "space":
            return self.step_size
        # Nyquist wavenumber at the band edge keeps every mode stable
        return math.pi / branch_limit("time", self.step_size, self.mass)


@dataclass(frozen=True)
class DispersionMeasurement:
    p: float
    energy_measured: float
    energy_analytic: float

    @property
    def rel_error(self) -> float:
        return abs(self.energy_measured - self.energy_analytic) / abs(self.energy_analytic)


def mode_index(p: float, cfg: LatticeConfig, strict: bool = False) -> int:
    n = p * cfg.nodes * cfg.node_spacing / (2 * math.pi)
    idx = int(round(n))
    if strict and abs(n - idx) > 1e-9 * max(1.0, abs(n)):
        raise ValueError(f"p={p} is not commensurate with the periodic grid")
    if not 0 <= idx < cfg.nodes // 2:
        raise ValueError("p beyond the grid's Nyquist wavenumber")
    return idx


def measure_dispersion(p: float, cfg: LatticeConfig = LatticeConfig(), strict: bool = False) -> DispersionMeasurement:
    """Evolve a plane wave and fit the phase rotation rate of its Fourier mode.

    ``p`` is snapped to the nearest grid mode unless ``strict`` is set; the
    returned ``p`` is the one actually simulated.
    """
    idx = mode_index(p, cfg, strict)
    a = cfg.node_spacing
    x = np.arange(cfg.nodes) * a
    p_act = 2 * math.pi * idx / (cfg.nodes * a)
    e_ref = float(analytic_energy(p_act, cfg.kind, cfg.step_size, cfg.mass))
    phi0 = np.exp(1j * p_act * x)
    if cfg.kind == "space":
        fld = init_space(phi0, cfg.step_size, cfg.mass, cfg.dt)
    else:
        fld = init_time(phi0, cfg.step_size, cfg.mass, a, cfg.spatial, cfg.seed)
    t_end = fld.t + cfg.periods * 2 * math.pi / max(e_ref, 1e-12)
    times, amps = [fld.t], [np.vdot(phi0, fld.current) / cfg.nodes]
    while fld.t < t_end:
        fld = step(fld)
        times.append(fld.t)
        amps.append(np.vdot(phi0, fld.current) / cfg.nodes)
    phase = np.unwrap(np.angle(np.asarray(amps)))
    slope = np.polyfit(np.asarray(times), phase, 1)[0]
    return DispersionMeasurement(p_act, float(-slope), e_ref)


def dispersion_scan(momenta: Sequence[float], cfg: LatticeConfig = LatticeConfig()) -> List[DispersionMeasurement]:
    return [measure_dispersion(p, cfg) for p in momenta]


def dispersion_csv(rows: Sequence[DispersionMeasurement]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("p", "energy_measured", "energy_analytic", "rel_error"))
    for r in rows:
        w.writerow([f"{v:.16e}" for v in (r.p, r.energy_measured, r.energy_analytic, r.rel_error)])
    return buf.getvalue()


def measured_energy_max(cfg: LatticeConfig, window: int = 3) -> float:
    """Largest measured energy over modes around the band edge ``p = π/2d``."""
    if cfg.kind != "space":
        raise ValueError("energy maximum is a discrete-space measurement")
    edge = mode_index(math.pi / (2 * cfg.step_size), cfg)
    a = cfg.node_spacing
    best = 0.0
    for idx in range(edge - window, edge + window + 1):
        p = 2 * math.pi * idx / (cfg.nodes * a)
        best = max(best, measure_dispersion(p, cfg).energy_measured)
    return best


def mode_power_drift(cfg: LatticeConfig, p: float, steps: int = 1000) -> float:
    """Relative change of ``|φ_p|²`` over ``steps`` discrete-time steps."""
    if cfg.kind != "time":
        raise ValueError("mode power drift is a discrete-time check")
    idx = mode_index(p, cfg)
    a = cfg.node_spacing
    x = np.arange(cfg.nodes) * a
    p_act = 2 * math.pi * idx / (cfg.nodes * a)
    phi0 = np.exp(1j * p_act * x)
    fld = init_time(phi0, cfg.step_size, cfg.mass, a, cfg.spatial, cfg.seed)
    pow0 = abs(np.vdot(phi0, fld.current) / cfg.nodes) ** 2
    for _ in range(steps):
        fld = step(fld)
    pow1 = abs(np.vdot(phi0, fld.current) / cfg.nodes) ** 2
    return abs(pow1 - pow0) / pow0


def group_velocity_packet(
    p0: float, width: float, cfg: LatticeConfig = LatticeConfig(nodes=2048), duration: Optional[float] = None
) -> float:
    """Track the centroid of a Gaussian packet on the spatial lattice and fit its speed."""
    if cfg.kind != "space":
        raise ValueError("packet tracking is implemented for the spatial lattice")
    d = cfg.step_size
    if width < 8 * d:
        raise ValueError("packet width must cover at least 8 grid cells")
    L = cfg.nodes * d
    x = np.arange(cfg.nodes) * d
    x0 = 0.25 * L
    phi0 = np.exp(-((x - x0) ** 2) / (2 * width ** 2) + 1j * p0 * x)
    fld = init_space(phi0, d, cfg.mass, cfg.dt)
    duration = duration if duration is not None else 0.4 * L
    edge = (x < 4 * width) | (x > L - 4 * width)
    times, cents = [], []
    n_steps = int(math.ceil(duration / fld.dt))
    sample_every = max(1, n_steps // 200)
    for k in range(n_steps + 1):
        if k % sample_every == 0:
            rho = np.abs(fld.current) ** 2
            if rho[edge].sum() > 1e-6 * rho.sum():
                raise RuntimeError("packet reached the boundary before the measurement ended")
            times.append(fld.t)
            cents.append(float(np.dot(rho, x) / rho.sum()))
        if k < n_steps:
            fld = step(fld)
    return float(np.polyfit(times, cents, 1)[0])
