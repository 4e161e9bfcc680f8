"""Command-line front end.

    randers-sphere <experiment> [--config run.json] [--out DIR] [--seed N]
                   [--step H] [--fan-n N] [--svg | --no-svg] [options]

Every run writes ``report.json`` to the output directory; curve-producing
experiments also write CSV traces and (unless ``--no-svg``) SVG plots.

Exit codes: 0 all checks pass, 1 a check failed, 2 bad configuration,
3 structural precondition failed, 4 numerical failure (pole crossing,
convexity loss, domain error during the run).
"""

from __future__ import annotations

import argparse
import copy
import dataclasses
import hashlib
import json
import math
import subprocess
import sys
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .cutlocus import (conjugate_locus, randers_cut_locus, riemann_cut_locus,
                       scan_half_period)
from .errors import (ConfigError, DomainError, FanTooCoarse, NonConvexError, PoleCrossing,
                     PreconditionFailed, RandersSphereError)
from .fields import FieldKind, VectorFieldSpec, parse_wind, radial, rotation, sum_field, zero_field
from .geodesics import (covector_for_angle, h_trace_from_fan, hamiltonian_along,
                        integrate_h_fan, integrate_h_geodesic, integrate_randers_fan,
                        integrate_randers_geodesic, nav_trace_from_fan, state_from_angle,
                        trace_envelope, write_trace_csv)
from .metrics import NavigationData, make_chain
from .surface import (Family, SurfacePoint, check_profile_conditions, closed_form_curvature,
                      gauss_curvature, make_surface)
from .svg import Curve, emit_svg
from .verification import DEFAULT_SEED, run_identity_suites

SCHEMA = 1
EXPERIMENTS = ("check", "curvature", "geodesic", "fan", "cutlocus", "verify-lemmas", "halfperiod")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_NUMERIC = 0, 1, 2, 3, 4

PRESETS = {
    "paper-s4": {
        "profile": "twisted-sine", "alpha": 0.25, "q_r": math.pi / 3, "q_theta": 0.0,
        "winds": [{"type": "rotation", "mu": 0.2, "role": "killing"},
                  {"type": "rotation", "mu": 0.1, "role": "killing"},
                  {"type": "sum", "role": "closing",
                   "terms": [{"type": "radial", "A": "ratio"},
                             {"type": "rotation", "mu": -0.3}]}],
    },
}


@dataclass
class RunConfig:
    experiment: str = "check"
    profile: str = "twisted-sine"
    alpha: float = 0.25
    lambda_: float = 1.0
    preset: str | None = None
    winds: list = field(default_factory=list)
    q_r: float = math.pi / 3
    q_theta: float = 0.0
    phi: float = 0.5
    length: float = 2 * math.pi
    step: float = 1e-3
    fan_n: int = 256
    n_grid: int = 32
    seed: int = DEFAULT_SEED
    pole_guard: float = 1e-6
    tolerances: dict = field(default_factory=dict)
    out: str = "out"
    svg: bool = True
    projection: str = "chart"

    KEY_ALIASES = {"lambda": "lambda_"}

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        data = dict(data)
        preset = data.get("preset")
        merged: dict = {}
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigError(f"unknown preset {preset!r}; known: {sorted(PRESETS)}")
            merged.update(copy.deepcopy(PRESETS[preset]))
        merged.update(data)
        names = {f.name for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in merged.items():
            attr = cls.KEY_ALIASES.get(key, key)
            if attr not in names or attr.isupper():
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[attr] = value
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        def num(name, lo, hi, integer=False, lo_open=False):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{name} must be a number")
            if integer and int(v) != v:
                raise ConfigError(f"{name} must be an integer")
            if not (lo < v if lo_open else lo <= v) or not v <= hi:
                raise ConfigError(f"{name}={v} outside [{lo}, {hi}]")

        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        try:
            Family(self.profile)
        except ValueError:
            raise ConfigError(f"unknown profile {self.profile!r}") from None
        if self.profile == "custom":
            raise ConfigError("custom profiles are only available from the Python API")
        num("alpha", 0.0, 0.5, lo_open=True)
        if self.alpha >= 0.5:
            raise ConfigError("alpha must be < 1/2")
        num("lambda_", 0.0, 1e6)
        num("step", 0.0, 0.1, lo_open=True)
        num("fan_n", 64, 8192, integer=True)
        if int(self.fan_n) % 2:
            raise ConfigError("fan_n must be even")
        num("n_grid", 8, 4096, integer=True)
        num("seed", 0, 2 ** 64 - 1, integer=True)
        num("pole_guard", 0.0, 0.1, lo_open=True)
        num("q_r", self.pole_guard, math.pi - self.pole_guard, lo_open=True)
        num("q_theta", -1e6, 1e6)
        num("phi", -1e6, 1e6)
        num("length", 0.0, 200.0, lo_open=True)
        if self.projection not in ("chart", "azimuthal"):
            raise ConfigError("projection must be 'chart' or 'azimuthal'")
        if not isinstance(self.winds, list):
            raise ConfigError("winds must be a list")
        if not isinstance(self.tolerances, dict):
            raise ConfigError("tolerances must be an object")
        self.fan_n, self.n_grid, self.seed = int(self.fan_n), int(self.n_grid), int(self.seed)
        self.wind_chain()

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["lambda"] = d.pop("lambda_")
        return d

    def surface(self):
        params = {"alpha": self.alpha} if self.profile == "twisted-sine" else (
            {"lambda": self.lambda_} if self.profile == "arcsin-ratio" else {})
        try:
            return make_surface(self.profile, pole_guard=self.pole_guard, **params)
        except DomainError as exc:
            raise ConfigError(str(exc)) from None

    def wind_chain(self) -> tuple[list[VectorFieldSpec], list[VectorFieldSpec]]:
        """``(killing, closing)`` winds; killing entries must come first."""
        killing, closing = [], []
        for entry in self.winds:
            spec, role = wind_from_config(entry)
            if role == "killing":
                if closing:
                    raise ConfigError("killing winds must precede closing winds")
                killing.append(spec)
            else:
                closing.append(spec)
        return killing, closing

    def total_wind(self) -> VectorFieldSpec:
        killing, closing = self.wind_chain()
        winds = killing + closing
        return sum_field(winds) if winds else zero_field()


def wind_from_config(entry) -> tuple[VectorFieldSpec, str]:
    """Catalog wind from a string id or an object ``{"type": ..., ...}``.

    Rotations default to the ``killing`` role, everything else to ``closing``.
    """
    try:
        if isinstance(entry, str):
            spec = parse_wind(entry)
            role = None
        elif isinstance(entry, dict):
            entry = dict(entry)
            role = entry.pop("role", None)
            spec = _wind_object(entry)
        else:
            raise ConfigError(f"bad wind entry {entry!r}")
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    if role is None:
        role = "killing" if spec.kind is FieldKind.ROTATION else "closing"
    if role not in ("killing", "closing"):
        raise ConfigError(f"wind role must be 'killing' or 'closing', got {role!r}")
    return spec, role


_RADIAL_NAMES = {"ratio": "ratio", "r/sqrt(r^2+1)": "ratio", "sin": "sin", "const": "const"}


def _wind_object(entry: dict) -> VectorFieldSpec:
    kind = entry.pop("type", None)
    if kind == "rotation":
        allowed, spec = {"mu"}, rotation(float(entry.get("mu", 0.0)))
    elif kind == "radial":
        name = _RADIAL_NAMES.get(str(entry.get("A", "ratio")))
        if name is None:
            raise ConfigError(f"unknown radial profile {entry.get('A')!r}")
        allowed, spec = {"A", "c"}, radial(name, c=float(entry.get("c", 1.0)))
    elif kind == "sum":
        allowed = {"terms"}
        spec = sum_field([_wind_object(dict(t)) for t in entry.get("terms", [])])
    elif kind == "zero":
        allowed, spec = set(), zero_field()
    else:
        raise ConfigError(f"unknown wind type {kind!r}")
    extra = set(entry) - allowed
    if extra:
        raise ConfigError(f"unknown wind keys {sorted(extra)}")
    return spec


# ------------------------------------------------------------------ report


def version_string() -> str:
    try:
        desc = subprocess.run(["git", "describe", "--always", "--tags", "--dirty"],
                              cwd=Path(__file__).resolve().parent, capture_output=True,
                              text=True, timeout=5)
        if desc.returncode == 0 and desc.stdout.strip():
            return f"{__version__}+g{desc.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def report_hash(report: dict) -> str:
    """SHA-256 of the report without its timestamp and output location."""
    body = {k: v for k, v in report.items() if k not in ("timestamp", "hash")}
    if isinstance(body.get("config"), dict):
        body["config"] = {k: v for k, v in body["config"].items() if k != "out"}
    blob = json.dumps(_jsonable(body), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class Report:
    experiment: str
    config: dict
    checks: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    error: dict | None = None

    def check(self, name: str, passed: bool, value=None, tolerance=None, **extra) -> None:
        self.checks.append({"name": name, "passed": bool(passed), "value": value,
                            "tolerance": tolerance, **extra})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def as_dict(self) -> dict:
        cfg = self.config
        d = {"schema": SCHEMA, "experiment": self.experiment, "passed": self.passed,
             "checks": self.checks, "results": self.results, "artifacts": sorted(self.artifacts),
             "config": cfg, "error": self.error,
             "provenance": {"seed": cfg.get("seed"), "step": cfg.get("step"),
                            "fan_n": cfg.get("fan_n"), "version": version_string()},
             "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds")}
        d = _jsonable(d)
        d["hash"] = report_hash(d)
        return d


# ------------------------------------------------------------- experiments


def _q(cfg: RunConfig) -> SurfacePoint:
    return SurfacePoint(cfg.q_r, cfg.q_theta)


def run_check(cfg: RunConfig, rep: Report, out: Path) -> None:
    surf = cfg.surface()
    cond = check_profile_conditions(surf.profile)
    for key in ("c1", "c2", "c3"):
        rep.check(key, getattr(cond, key), value=cond.worst[key][1], at=cond.worst[key][0])
    rep.results["a"] = surf.a
    rep.results["normalization"] = abs(surf.a * float(surf.profile.dh(0.0)) - 1.0)


def run_curvature(cfg: RunConfig, rep: Report, out: Path) -> None:
    surf = cfg.surface()
    g = 10 * surf.pole_guard
    r = np.linspace(g, math.pi - g, max(cfg.n_grid, 256))
    G = gauss_curvature(surf, r)
    closed = None
    if surf.profile.family in (Family.TWISTED_SINE, Family.ARCSIN_RATIO):
        closed = closed_form_curvature(surf.profile, r)
        err = float(np.max(np.abs(G - closed)))
        tol = cfg.tolerances.get("curvature", 1e-8)
        rep.check("closed-form-agreement", err < tol, err, tol)
    sym = float(np.max(np.abs(G - gauss_curvature(surf, math.pi - r))))
    rep.check("equatorial-symmetry", sym < 1e-10, sym, 1e-10)
    rep.results["G_equator"] = float(gauss_curvature(surf, math.pi / 2))
    rep.results["G_min"], rep.results["G_max"] = float(G.min()), float(G.max())
    path = out / "curvature.csv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("r,G" + (",G_closed" if closed is not None else "") + "\n")
        for i in range(len(r)):
            row = [r[i], G[i]] + ([closed[i]] if closed is not None else [])
            fh.write(",".join(f"{v:.12g}" for v in row) + "\n")
    rep.artifacts.append(path.name)
    if cfg.svg:
        emit_svg([Curve(r, G, "G(r)")], out / "curvature.svg",
                 {"title": f"Gaussian curvature, {surf.id}"}, "chart", ("r", "G"))
        rep.artifacts.append("curvature.svg")


def run_geodesic(cfg: RunConfig, rep: Report, out: Path) -> None:
    surf = cfg.surface()
    q = _q(cfg)
    wind = cfg.total_wind()
    if wind.kind is FieldKind.ZERO:
        tr = integrate_h_geodesic(surf, state_from_angle(surf, q, cfg.phi), cfg.length, cfg.step)
        drift = float(np.max(np.abs(tr.nu - tr.nu[0])))
        speed = float(np.max(np.abs(tr.dr ** 2 + (surf.m(tr.r) * tr.dtheta) ** 2 - 1)))
        tol = cfg.tolerances.get("clairaut", 1e-8)
        rep.check("clairaut-drift", drift < tol, drift, tol)
        rep.check("unit-speed-drift", speed < 1e-8 * max(cfg.length, 1.0), speed,
                  1e-8 * max(cfg.length, 1.0))
    else:
        nav = NavigationData(surf, wind)
        tr = integrate_randers_geodesic(nav, q, covector_for_angle(nav, q, cfg.phi),
                                        cfg.length, cfg.step)
        drift = float(np.max(np.abs(hamiltonian_along(nav, tr) - 1)))
        tol = cfg.tolerances.get("hamiltonian", 1e-7 * max(cfg.length, 1.0))
        rep.check("hamiltonian-drift", drift < tol, drift, tol)
    rep.results["trace"] = trace_envelope(tr, surf.id, [w.id for w in _winds(cfg)])
    write_trace_csv(tr, out / "trace.csv")
    rep.artifacts.append("trace.csv")
    if cfg.svg:
        emit_svg([Curve(tr.theta if cfg.projection == "azimuthal" else np.mod(tr.theta, 2 * math.pi),
                        tr.r, tr.metric_tag, points=cfg.projection == "chart")],
                 out / "trace.svg", {"title": "geodesic"}, cfg.projection)
        rep.artifacts.append("trace.svg")


def _winds(cfg: RunConfig):
    k, c = cfg.wind_chain()
    return k + c


def run_fan(cfg: RunConfig, rep: Report, out: Path) -> None:
    surf = cfg.surface()
    q = _q(cfg)
    wind = cfg.total_wind()
    phis = -math.pi + (np.arange(cfg.fan_n) + 0.5) * 2 * math.pi / cfg.fan_n
    if wind.kind is FieldKind.ZERO:
        fan = integrate_h_fan(surf, q, phis, cfg.length, cfg.step)
        traces = [h_trace_from_fan(surf, fan, j) for j in range(fan.size)]
        drift = max(float(np.max(np.abs(t.nu - t.nu[0]))) for t in traces)
        rep.results["max_clairaut_drift"] = drift
    else:
        nav = NavigationData(surf, wind)
        fan = integrate_randers_fan(nav, q, covector_for_angle(nav, q, phis), cfg.length, cfg.step)
        traces = [nav_trace_from_fan(nav, fan, j, "F") for j in range(fan.size)]
        drift = max(float(np.max(np.abs(hamiltonian_along(nav, t) - 1))) for t in traces)
        rep.results["max_hamiltonian_drift"] = drift
    halted = int(np.count_nonzero(fan.halt_reason))
    rep.results["members"] = fan.size
    rep.results["halted"] = halted
    rep.check("fan-integrated", all(len(t) > 1 for t in traces), fan.size, None)
    path = out / "fan.csv"
    for j, t in enumerate(traces):
        write_trace_csv(t, path, member=j, append=j > 0)
    rep.artifacts.append(path.name)
    if cfg.svg:
        stride = max(1, len(traces) // 64)
        curves = [Curve(t.theta if cfg.projection == "azimuthal" else np.unwrap(t.theta), t.r)
                  for t in traces[::stride]]
        emit_svg(curves, out / "fan.svg", {"title": f"fan of {fan.size}"}, cfg.projection)
        rep.artifacts.append("fan.svg")


def run_cutlocus(cfg: RunConfig, rep: Report, out: Path) -> None:
    surf = cfg.surface()
    q = _q(cfg)
    killing, closing = cfg.wind_chain()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", FanTooCoarse)
        if killing or closing:
            chain = make_chain(surf, killing, closing)
            res = randers_cut_locus(chain, q, cfg.fan_n, cfg.step, tolerances=cfg.tolerances or None)
        else:
            res = riemann_cut_locus(surf, q, cfg.fan_n, step=cfg.step)
    rep.results["warnings"] = [str(w.message) for w in caught if issubclass(w.category, FanTooCoarse)]
    cond = check_profile_conditions(surf.profile)
    uniq = res.unique_points(1e-5)
    rep.results["cut_locus"] = {k: v for k, v in res.as_dict().items() if k != "points"}
    rep.results["n_points"] = len(res.cut_points)
    rep.results["n_unique"] = len(uniq)
    if len(uniq) == 1:
        rep.results["single_point"] = [uniq[0].r, uniq[0].theta]
    # symmetric, monotone profiles: the cut locus lies on the antipodal parallel
    if cond.c1 and cond.c2:
        tol = cfg.tolerances.get("parallel", 1e-3)
        dev = float(np.max(np.abs(res.r - (math.pi - q.r))))
        rep.check("antipodal-parallel", dev < tol, dev, tol)
    conj = {round(phi, 12): d for phi, _, d in conjugate_locus(surf, q, cfg.fan_n, step=cfg.step)}
    worst = -math.inf
    for c in res.cut_points:
        if c.angles and round(c.angles[0], 12) in conj:
            worst = max(worst, c.distance - conj[round(c.angles[0], 12)])
    if math.isfinite(worst):
        rep.check("cut-before-conjugate", worst <= 1e-6, worst, 1e-6)
    (out / "cutlocus.json").write_text(res.to_json(indent=1), encoding="utf-8")
    rep.artifacts.append("cutlocus.json")
    with open(out / "cutlocus.csv", "w", encoding="utf-8") as fh:
        fh.write("r,theta,distance,kind,nu\n")
        for c in res.cut_points:
            fh.write(f"{c.point.r:.12g},{c.point.theta:.12g},{c.distance:.12g},{c.kind.value},{c.nu:.12g}\n")
    rep.artifacts.append("cutlocus.csv")
    if cfg.svg:
        curves = [Curve(res.theta, res.r, "cut locus", points=True),
                  Curve(np.array([q.theta]), np.array([q.r]), "q", points=True, color="#000000")]
        emit_svg(curves, out / "cutlocus.svg", {"title": "cut locus"}, cfg.projection)
        rep.artifacts.append("cutlocus.svg")


def run_halfperiod(cfg: RunConfig, rep: Report, out: Path) -> None:
    surf = cfg.surface()
    table = scan_half_period(surf, cfg.n_grid, cfg.tolerances.get("quadrature", 1e-8))
    rep.results["table"] = table.as_dict()
    rep.check("monotone", table.monotone, float(np.max(np.diff(table.phi_values))), 1e-9)
    with open(out / "halfperiod.csv", "w", encoding="utf-8") as fh:
        fh.write("nu,phi\n")
        for a, b in zip(table.nu_grid, table.phi_values):
            fh.write(f"{a:.12g},{b:.12g}\n")
    rep.artifacts.append("halfperiod.csv")
    if cfg.svg:
        emit_svg([Curve(table.nu_grid, table.phi_values, "phi_m")], out / "halfperiod.svg",
                 {"title": f"half period, {surf.id}"}, "chart", ("nu", "phi_m"))
        rep.artifacts.append("halfperiod.svg")


def run_verify(cfg: RunConfig, rep: Report, out: Path) -> None:
    for res in run_identity_suites(cfg.seed):
        rep.check(res.name, res.passed, res.worst, res.tolerance,
                  trials=res.trials, agreed=res.agreed)


RUNNERS = {"check": run_check, "curvature": run_curvature, "geodesic": run_geodesic,
           "fan": run_fan, "cutlocus": run_cutlocus, "halfperiod": run_halfperiod,
           "verify-lemmas": run_verify}


def run(cfg: RunConfig) -> tuple[int, dict]:
    """Execute ``cfg``; returns ``(exit code, report dict)`` and writes ``report.json``."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rep = Report(cfg.experiment, cfg.as_dict())
    code = EXIT_OK
    try:
        RUNNERS[cfg.experiment](cfg, rep, out)
        code = EXIT_OK if rep.passed else EXIT_CHECK
    except ConfigError as exc:
        rep.error, code = {"type": "ConfigError", "message": str(exc)}, EXIT_CONFIG
    except PreconditionFailed as exc:
        rep.error = {"type": "PreconditionFailed", "message": str(exc), "failures": exc.failures}
        code = EXIT_PRECONDITION
    except (PoleCrossing, NonConvexError, DomainError, RandersSphereError, FloatingPointError) as exc:
        rep.error, code = {"type": type(exc).__name__, "message": str(exc)}, EXIT_NUMERIC
    report = rep.as_dict()
    (out / "report.json").write_text(json.dumps(report, indent=1, sort_keys=True) + "\n",
                                     encoding="utf-8")
    return code, report


# --------------------------------------------------------------------- argv


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="randers-sphere",
                                description="Randers metrics on two-spheres of revolution.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--out", help="output directory (default: out)")
    p.add_argument("--seed", type=int)
    p.add_argument("--step", type=float)
    p.add_argument("--fan-n", dest="fan_n", type=int)
    p.add_argument("--svg", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--profile", choices=[f.value for f in Family if f is not Family.CUSTOM])
    p.add_argument("--alpha", type=float)
    p.add_argument("--lambda", dest="lambda_", type=float)
    p.add_argument("--wind", dest="winds", action="append",
                   help="catalog wind id, e.g. rotation:0.3 or radial:ratio (repeatable)")
    p.add_argument("--q-r", dest="q_r", type=float)
    p.add_argument("--q-theta", dest="q_theta", type=float)
    p.add_argument("--phi", type=float, help="initial angle from the parallel")
    p.add_argument("--length", type=float)
    p.add_argument("--n-grid", dest="n_grid", type=int)
    p.add_argument("--projection", choices=("chart", "azimuthal"))
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        if "experiment" in data and data["experiment"] != args.experiment:
            raise ConfigError(f"config experiment {data['experiment']!r} does not match "
                              f"subcommand {args.experiment!r}")
    data["experiment"] = args.experiment
    for key in ("out", "seed", "step", "fan_n", "svg", "preset", "profile", "alpha", "lambda_",
                "winds", "q_r", "q_theta", "phi", "length", "n_grid", "projection"):
        v = getattr(args, key)
        if v is not None:
            data["lambda" if key == "lambda_" else key] = v
    return RunConfig.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code, report = run(cfg)
    for c in report["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}: value={c['value']} tol={c['tolerance']}")
    if report.get("error"):
        print(f"error: {report['error']['type']}: {report['error']['message']}", file=sys.stderr)
    print(f"report: {Path(cfg.out) / 'report.json'} (hash {report['hash'][:12]})")
    return code


if __name__ == "__main__":
    sys.exit(main())
