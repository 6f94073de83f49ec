"""Command-line front end: ``gupforge <command> [options]``.

Every command writes ``<command>-report.json`` (and, where relevant, a data file) into the
output directory and prints the report on stdout.  Exit status is 0 when all
checks pass, 1 when any check fails and 2 for usage or configuration errors.
"""

from __future__ import annotations

import os

_threads = os.environ.get("GUP_FORGE_THREADS")
if _threads and _threads.isdigit() and int(_threads) > 0:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse  # noqa: E402
import csv  # noqa: E402
import io  # noqa: E402
import json  # noqa: E402
import math  # noqa: E402
import sys  # noqa: E402
import tempfile  # noqa: E402
import time  # noqa: E402
from pathlib import Path  # noqa: E402
from typing import Callable, Dict, List, Optional, Tuple  # noqa: E402

import numpy as np  # noqa: E402

from . import composite, kappa_rep, lattice, presets, transforms, uncertainty  # noqa: E402
from .scalarcalc import DomainError  # noqa: E402

COMMANDS = ("jacobi", "curves", "dispersion", "kpoincare", "composite", "transform", "suite")
GENERATOR = "numpy.random.PCG64"


class ConfigError(ValueError):
    pass


def _positive(name):
    def conv(text):
        val = float(text)
        if not val > 0:
            raise ConfigError(f"{name} must be positive")
        return val

    return conv


def _non_negative(name):
    def conv(text):
        val = float(text)
        if val < 0:
            raise ConfigError(f"{name} must be non-negative")
        return val

    return conv


def _positive_int(name):
    def conv(text):
        val = int(text)
        if val < 1:
            raise ConfigError(f"{name} must be a positive integer")
        return val

    return conv


def _choice(name, options):
    def conv(text):
        if text not in options:
            raise ConfigError(f"{name} must be one of {', '.join(options)}")
        return text

    return conv


# key -> (converter, default, help)
KEYS: Dict[str, Tuple[Callable, object, str]] = {
    "preset": (str, None, "algebra preset (heisenberg, mm_plus[_p|_E], mm_minus[_p|_E], kmm, ali)"),
    "kappa": (_positive("kappa"), 1.0, "deformation mass κ"),
    "beta": (_positive("beta"), None, "kmm β in momentum⁻² units"),
    "beta0": (_positive("beta0"), 1.0, "dimensionless β₀"),
    "tau": (_positive("tau"), 1.0, "time step τ"),
    "d": (_positive("d"), 1.0, "lattice spacing d"),
    "m": (_non_negative("m"), 0.0, "particle mass"),
    "alpha": (_positive("alpha"), 1.0, "integration constant f(0)²"),
    "alpha_ali": (_positive("alpha_ali"), 1e-4, "ali deformation parameter"),
    "nodes": (_positive_int("nodes"), 512, "lattice nodes"),
    "points": (_positive_int("points"), 6, "momenta per dispersion scan"),
    "probes": (_positive_int("probes"), 100, "probe momenta for Jacobi residuals"),
    "n_bodies": (_positive_int("n_bodies"), 1000, "random bodies when no CSV is given"),
    "bodies": (str, None, "CSV of body_id,px,py,pz rows"),
    "seed": (int, 20240611, "seed of the probe-momentum generator"),
    "tol": (_positive("tol"), presets.CONSISTENCY_TOL, "Jacobi residual tolerance"),
    "out": (str, "gupforge-out", "output directory"),
    "format": (_choice("format", ("csv", "json")), "csv", "data file format"),
}


def read_config_file(path: str) -> Dict[str, str]:
    values: Dict[str, str] = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in KEYS:
            raise ConfigError(f"{path}:{n}: unknown key {key!r}")
        values[key] = val
    return values


def resolve_config(file_values: Dict[str, str], flag_values: Dict[str, object]) -> Dict[str, object]:
    cfg = {}
    for key, (conv, default, _) in KEYS.items():
        if flag_values.get(key) is not None:
            raw = flag_values[key]
        elif key in file_values:
            raw = file_values[key]
        else:
            cfg[key] = default
            continue
        try:
            cfg[key] = conv(raw) if isinstance(raw, str) else conv(str(raw))
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gupforge", description="Deformed-commutator workbench")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="file of 'key = value' lines; flags take precedence")
        for key, (_, default, help_text) in KEYS.items():
            p.add_argument("--" + key.replace("_", "-"), dest=key, default=None, help=f"{help_text} (default {default})")
    return parser


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


class Report:
    def __init__(self, command: str, cfg: dict):
        self.command = command
        self.cfg = cfg
        self.checks: List[dict] = []
        self.data: dict = {}
        self.started = time.perf_counter()

    def check(self, name: str, value, passed: bool, threshold=None, **extra):
        entry = {"name": name, "value": _jsonable(value), "passed": bool(passed)}
        if threshold is not None:
            entry["threshold"] = threshold
        entry.update({k: _jsonable(v) for k, v in extra.items()})
        self.checks.append(entry)
        return passed

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "config": {k: v for k, v in self.cfg.items()},
            "rng": {"generator": GENERATOR, "seed": self.cfg["seed"]},
            "passed": self.passed,
            "checks": self.checks,
            "failures": [c["name"] for c in self.checks if not c["passed"]],
            "data": _jsonable(self.data),
            "elapsed_s": round(time.perf_counter() - self.started, 3),
        }


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_as_json(text: str) -> str:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    header = rows[0]
    return json.dumps([dict(zip(header, map(float, r))) for r in rows[1:]], indent=1) + "\n"


def _emit_data(cfg: dict, stem: str, csv_text: str) -> str:
    out = Path(cfg["out"])
    if cfg["format"] == "json":
        name = f"{stem}.json"
        write_atomic(out / name, _csv_as_json(csv_text))
    else:
        name = f"{stem}.csv"
        write_atomic(out / name, csv_text)
    return name


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

GENERAL_SPIN_PRESETS = ("heisenberg", "mm_plus_p", "mm_plus_E", "mm_minus_p", "mm_minus_E", "ali")
ALIASES = {"mm_plus": ("mm_plus_p", "mm_plus_E"), "mm_minus": ("mm_minus_p", "mm_minus_E")}


def _preset_kwargs(name: str, cfg: dict) -> dict:
    kw = {}
    if name.endswith("_E"):
        kw["mass"] = cfg["m"]
    if name == "kmm":
        if cfg["beta"] is not None:
            kw["beta"] = cfg["beta"]
        else:
            kw["beta0"] = cfg["beta0"]
    if name == "ali":
        kw["alpha_ali"] = cfg["alpha_ali"]
    return kw


def make_preset(name: str, cfg: dict):
    try:
        return presets.preset(name, kappa=cfg["kappa"], **_preset_kwargs(name, cfg))
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None


def cmd_jacobi(cfg: dict, rep: Report) -> None:
    if cfg["preset"]:
        names = ALIASES.get(cfg["preset"], (cfg["preset"],))
        expect_general = {n: None for n in names}
    else:
        names = GENERAL_SPIN_PRESETS + ("kmm",)
        expect_general = {n: n != "kmm" for n in names}
        if cfg["beta"] is None:
            cfg = dict(cfg, beta=0.2)
    results = {}
    for name in names:
        spec = make_preset(name, cfg)
        br = presets.classify(spec, n_probe=cfg["probes"], seed=cfg["seed"], tol=cfg["tol"])
        results[name] = br.as_dict()
        want = expect_general[name]
        if want is None or want:
            rep.check(f"{name}: general-spin Jacobi", max(br.residual_xxx, br.residual_xxp),
                      br.general_spin_consistent, cfg["tol"], label=br.label)
        else:
            rep.check(f"{name}: consistent only after orbital projection", br.residual_xxx,
                      br.label == "spin-zero-only", cfg["tol"], residual_xxx_orbital=br.residual_xxx_orbital)
    rep.data["presets"] = results
    if len(results) == 1:
        rep.data.update(next(iter(results.values())))


def cmd_curves(cfg: dict, rep: Report) -> None:
    prm = uncertainty.UncertaintyParams(beta0=cfg["beta0"], mass=cfg["m"])
    text = uncertainty.curves_csv(prm)
    rep.data["file"] = _emit_data(cfg, "curves", text)
    cols = uncertainty.read_curves_csv(text)
    end = {k: float(v[-1]) for k, v in cols.items()}
    ordering = end["kmm"] > end["mm_plus"] > end["heisenberg"] > end["mm_minus"] == 0.0
    rep.check("ordering at the largest Δp: kmm > mm_plus > heisenberg > mm_minus = 0", end, ordering)
    rep.check("mm_plus decreasing", None, bool(np.all(np.diff(cols["mm_plus"]) < 0)))
    dk = np.diff(cols["kmm"])
    sign_changes = int(np.count_nonzero(np.diff(np.sign(dk)) != 0))
    rep.check("kmm has a single interior minimum", sign_changes, sign_changes == 1 and dk[0] < 0 < dk[-1])
    i = int(np.argmin(cols["kmm"]))
    lp = prm.units.planck_length
    rep.data["kmm_grid_minimum"] = {"delta_p": float(cols["delta_p"][i]), "delta_x": float(cols["kmm"][i])}
    res = uncertainty.min_dx(uncertainty.sample_curve("kmm", prm))
    want_dp = prm.planck_momentum / math.sqrt(prm.beta0)
    want_dx = lp * math.sqrt(prm.beta0)
    rep.check("kmm minimum location", res.dp_star, abs(res.dp_star / want_dp - 1) < 1e-4, 1e-4, expected=want_dp)
    rep.check("kmm minimum value", res.dx_star, abs(res.dx_star / want_dx - 1) < 1e-4, 1e-4, expected=want_dx)


def _scan_momenta(limit: float, n: int) -> np.ndarray:
    return np.linspace(0.1, 0.8, n) * limit


def cmd_dispersion(cfg: dict, rep: Report) -> None:
    rows = []
    for kind, step_size in (("space", cfg["d"]), ("time", cfg["tau"])):
        lc = lattice.LatticeConfig(kind, step_size, cfg["m"], cfg["nodes"])
        limit = lattice.branch_limit(kind, step_size, cfg["m"])
        scan = lattice.dispersion_scan(_scan_momenta(limit, cfg["points"]), lc)
        worst = max(r.rel_error for r in scan)
        rep.check(f"{kind}: dispersion relative error", worst, worst < 1e-3, 1e-3)
        rows.extend(scan)
        if kind == "space":
            emax = lattice.measured_energy_max(lc)
            want = math.sqrt(step_size ** -2 + cfg["m"] ** 2)
            rep.check("space: maximal energy", emax, abs(emax / want - 1) < 1e-3, 1e-3, expected=want)
    rep.data["file"] = _emit_data(cfg, "dispersion", lattice.dispersion_csv(rows))


def cmd_kpoincare(cfg: dict, rep: Report) -> None:
    tol = 1e-8
    for kind in kappa_rep.KINDS:
        case = kappa_rep.DispersionCase(kind, cfg["d"] if kind == "space" else cfg["tau"], cfg["m"])
        for dims in ((1,) if kind == "space" else (1, 3)):
            samples = kappa_rep.sample_momenta(case, dims, 50, seed=cfg["seed"])
            for row in kappa_rep.check_algebra(case, dims, samples):
                limit = 1e-12 if row["relation"] == "C2=m^2" else tol
                rep.check(f"{kind} {dims}D {row['relation']}", row["max_residual"], row["max_residual"] < limit, limit)
        if kind in ("sine", "sinh", "continuum"):
            pos = kappa_rep.position_commutator_residuals(case, kappa_rep.sample_momenta(case, 3, 50, seed=cfg["seed"]))
            for key, val in pos.items():
                rep.check(f"{kind} position [{key}]", val, val < tol, tol)
    # a massless particle moves at exactly c, so the monotonicity check needs m > 0
    case = kappa_rep.DispersionCase("sine", cfg["tau"], cfg["m"] or 0.5 / cfg["tau"])
    ps = np.linspace(0.01, 0.99, 60) * case.p_limit
    v = [kappa_rep.velocity(case, p) for p in ps]
    ok = bool(np.all(np.diff(v) > 0) and max(v) <= case.units.c * (1 + 1e-12))
    rep.check("sine: corrected velocity increasing and below c", max(v), ok)


def cmd_composite(cfg: dict, rep: Report) -> None:
    name = cfg["preset"] or "kmm"
    if name == "kmm" and cfg["beta"] is None:
        cfg = dict(cfg, beta=0.01)
    spec = make_preset(name, cfg)
    beta = spec.params.get("beta") if name == "kmm" else None
    if cfg["bodies"]:
        bodies = composite.parse_bodies_csv(Path(cfg["bodies"]).read_text())
    else:
        rng = np.random.default_rng(cfg["seed"])
        bodies = []
        for _ in range(cfg["n_bodies"]):
            n = int(rng.integers(1, 65))
            bodies.append(composite.Body(rng.normal(scale=0.3 * spec.momentum_scale, size=(n, 3))))
    analyses = [composite.analyse(b, spec, beta) for b in bodies]
    rep.data["bodies"] = len(bodies)
    rep.data["analyses"] = analyses if cfg["bodies"] else analyses[:5]
    if beta is not None:
        gap = max(a["identity_gap"] / a["com_commutator"] for a in analyses)
        rep.check("1 + rigid + variance = com commutator", gap, gap <= 1e-15, 1e-15)
        ns = [2 ** k for k in range(7)]
        dev = [composite.rigid_effective(1.0, n, spec) - 1.0 for n in ns]
        scale = max(abs(d * n * n / beta - 1) for d, n in zip(dev, ns))
        # f - 1 cancels about log10(N²/β) digits, hence the looser bound
        rep.check("effective β scales as 1/N²", scale, scale < 1e-9, 1e-9)


def cmd_transform(cfg: dict, rep: Report) -> None:
    name = cfg["preset"] or "mm_plus_p"
    name = ALIASES.get(name, (name,))[0]
    spec = make_preset(name, cfg)
    scale = spec.momentum_scale
    if spec.g2.const != 0.0:
        tr = transforms.remove_tensor_term(spec.f, spec.g2, p_top=2.5 * scale)
        res = transforms.tensor_residuals(spec, tr.u)
        rep.check(f"{name}: p_i p_j coefficient after transform", res["tensor"], res["tensor"] < 1e-8, 1e-8)
        rep.check(f"{name}: δ coefficient equals f u", res["delta_mismatch"], res["delta_mismatch"] < 1e-10, 1e-10)
        mapping = transforms.canonical_momentum_1d(spec.f, p_top=2.5 * scale)
        rep.data["file"] = _emit_data(cfg, "transform", transforms.map_csv(mapping, tr.u))
        return
    top = 0.9 * spec.p_max if math.isfinite(spec.p_max) else 4.0 * scale
    mapping = transforms.canonical_momentum_1d(spec.f, p_top=top if not math.isfinite(spec.p_max) else None)
    ps = np.linspace(0.0, top, 200)
    rt = float(np.max(np.abs(mapping.p(mapping.k(ps)) - ps)))
    rep.check(f"{name}: p(k(p)) round trip", rt, rt < 1e-9, 1e-9)
    rep.data["saturates"] = mapping.saturates
    rep.data["k_max"] = mapping.k_max
    grid = kappa_rep.Grid1D(0.0, top, 41)
    res, ratios = transforms.convergence_ratios(spec.f, grid, mapping=mapping)
    rep.data["grid_residuals"] = res
    if spec.f.const is None:
        rep.check(f"{name}: fourth-order convergence", ratios[-1], 12 < ratios[-1] < 20, [12, 20])
    rep.check(f"{name}: [x,k] residual at finest grid", res[-1], res[-1] < 1e-6, 1e-6)
    rep.data["file"] = _emit_data(cfg, "transform", transforms.map_csv(mapping))


def cmd_suite(cfg: dict, rep: Report) -> None:
    runs = [("jacobi", {}), ("curves", {}), ("dispersion", {}), ("kpoincare", {}), ("composite", {}),
            ("transform", {"preset": "mm_plus_p"}), ("transform", {"preset": "mm_minus_p"}), ("transform", {"preset": "ali"})]
    for cmd, override in runs:
        sub = dict(cfg, **override)
        if cmd != "transform":
            sub["preset"] = None
        sub_rep = Report(cmd, sub)
        HANDLERS[cmd](sub, sub_rep)
        tag = f"{cmd}[{override['preset']}]" if override else cmd
        for c in sub_rep.checks:
            rep.checks.append(dict(c, name=f"{tag}: {c['name']}"))


HANDLERS = {
    "jacobi": cmd_jacobi,
    "curves": cmd_curves,
    "dispersion": cmd_dispersion,
    "kpoincare": cmd_kpoincare,
    "composite": cmd_composite,
    "transform": cmd_transform,
    "suite": cmd_suite,
}


def run(command: str, cfg: dict) -> Tuple[int, dict]:
    rep = Report(command, cfg)
    HANDLERS[command](cfg, rep)
    report = rep.as_dict()
    write_atomic(Path(cfg["out"]) / f"{command}-report.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    return (0 if rep.passed else 1), report


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    flags = {k: v for k, v in vars(args).items() if k in KEYS}
    try:
        if _threads is not None and not (_threads.isdigit() and int(_threads) > 0):
            raise ConfigError("GUP_FORGE_THREADS must be a positive integer")
        file_values = read_config_file(args.config) if args.config else {}
        cfg = resolve_config(file_values, flags)
        code, report = run(args.command, cfg)
    except (ConfigError, OSError) as exc:
        print(f"gupforge: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, DomainError) as exc:
        print(f"gupforge: invalid parameters: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(report, indent=2, sort_keys=True))
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
