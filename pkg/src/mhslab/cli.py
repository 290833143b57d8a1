"""Command-line entry point.

Subcommands: solve, compare, blowup, analyticity, norms, verify.
Exit codes: 0 ok, 1 verify failure, 2 configuration error, 3 breakdown,
4 no breaking detected, 5 radius collapse.
"""
from __future__ import annotations

import argparse
import contextlib
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import eulerian as eul
from . import lagrangian as lag
from .errors import CFLError, InitSyntaxError, InsufficientDataError, MHSError
from .initcond import parse_init, realize
from .io import CSV_COLUMNS, LAGRANGIAN_COLUMNS, HistoryWriter, format_float, read_snapshots, snapshot_line
from .scales import ScaleParams, drop_roundoff, scale_norm, sobolev_norm
from .spectral import ModelParams, sup_distance
from .taylor import integrate_taylor, taylor_coeffs, time_radius

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_BREAKDOWN, EXIT_NO_BREAKING, EXIT_RADIUS = range(6)

METHODS = ("eulerian", "lagrangian", "taylor", "compare")
TAYLOR_ORDER = 16
TAYLOR_SEGMENT = 0.01
RADIUS_FLOOR = 0.05
BLOWUP_N = 1024
BLOWUP_HORIZON = 1.0
BLOWUP_CFL = 0.4


class ConfigError(MHSError, ValueError):
    pass


@dataclass
class ScenarioConfig:
    p: int = 1
    init: str = "0.1*sin(2*pi*x)"
    n_modes: int = 256
    dt: float = 1e-4
    t_end: float = 0.1
    method: str = "eulerian"
    record_every: int = 100
    out: str | None = None
    snapshots: str | None = None
    s: float = 0.5
    sigma: float = 2.0
    k_max: int = 30
    seed: int = 0
    suite: str = "all"

    def validate(self) -> "ScenarioConfig":
        if self.p < 1:
            raise ConfigError(f"p must be an integer >= 1, got {self.p}")
        n = self.n_modes
        if n < 32 or n & (n - 1):
            raise ConfigError(f"n must be a power of two >= 32, got {n}")
        if not (self.dt > 0 and self.t_end > 0 and self.dt < self.t_end):
            raise ConfigError(f"need 0 < dt < t_end, got dt={self.dt:g}, t_end={self.t_end:g}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        try:
            ScaleParams(self.s, self.sigma, self.k_max)
        except MHSError as exc:
            raise ConfigError(str(exc)) from exc
        try:
            parse_init(self.init, self.n_modes)
        except InitSyntaxError as exc:
            raise ConfigError(f"bad --init: {exc}") from exc
        return self

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.p)

    @property
    def scale(self) -> ScaleParams:
        return ScaleParams(self.s, self.sigma, self.k_max)

    def initial_field(self):
        return realize(parse_init(self.init, self.n_modes), self.n_modes)


# flag/config-file key -> (field, converter)
_KEYS = {
    "p": ("p", int),
    "init": ("init", str),
    "n": ("n_modes", int),
    "n_modes": ("n_modes", int),
    "dt": ("dt", float),
    "t_end": ("t_end", float),
    "method": ("method", str),
    "record_every": ("record_every", int),
    "out": ("out", str),
    "snapshots": ("snapshots", str),
    "s": ("s", float),
    "sigma": ("sigma", float),
    "kmax": ("k_max", int),
    "k_max": ("k_max", int),
    "seed": ("seed", int),
    "suite": ("suite", str),
}


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def build_config(args: argparse.Namespace, overrides: dict | None = None) -> ScenarioConfig:
    """Defaults, then command defaults, then the config file, then flags."""
    raw: dict = dict(overrides or {})
    if getattr(args, "config", None):
        raw.update(read_config_file(args.config))
    for key in _KEYS:
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    fields = {}
    for key, val in raw.items():
        name, conv = _KEYS[key]
        try:
            fields[name] = conv(val)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {val!r}") from exc
    return ScenarioConfig(**fields).validate()


# ------------------------------------------------------------------ helpers

@contextlib.contextmanager
def _open_out(path):
    if path is None:
        yield None
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _summary(t, drift, code, extra="") -> str:
    line = f"final t={t:.6g} energy_drift={drift:.3e} code={code or 'none'}"
    return line + (f" {extra}" if extra else "")


def _drift(history) -> float:
    e0 = history[0].energy
    return max(abs(h.energy - e0) for h in history) / e0 if e0 > 0 else max(abs(h.energy) for h in history)


def _run_eulerian(cfg, writer=None, snap=None):
    run = eul.EulerianRun(cfg.initial_field(), cfg.params, cfg.dt)

    def hook(r):
        if writer is not None:
            writer.write(r.history[-1])
        if snap is not None:
            snap.write(snapshot_line(r.t, r.u) + "\n")

    eul.integrate(run, cfg.t_end, cfg.record_every, cfg.scale, on_record=hook)
    return run


def _run_lagrangian(cfg, writer=None, snap=None, fields=None):
    run = lag.LagrangianRun(lag.LagrangianState.initial(cfg.initial_field(), cfg.params), cfg.dt)

    def hook(r):
        if writer is not None:
            writer.write(r.history[-1])
        if snap is not None or fields is not None:
            u = lag.reconstruct_u(r.state)
            if fields is not None:
                fields.append(u)
            if snap is not None:
                s = r.state
                snap.write(snapshot_line(s.t, u, s.gamma.displacement, s.zeta) + "\n")

    lag.integrate_lagrangian(run, cfg.t_end, cfg.record_every, cfg.scale, on_record=hook)
    return run


def _record_times(cfg) -> list:
    step = cfg.dt * cfg.record_every
    k = int(math.floor(cfg.t_end / step + 1e-9))
    times = [i * step for i in range(k + 1)]
    if cfg.t_end - times[-1] > 1e-12 * max(1.0, cfg.t_end):
        times.append(cfg.t_end)
    return times


def _run_taylor(cfg, writer=None, snap=None):
    seg = min(TAYLOR_SEGMENT, cfg.t_end)
    tr = integrate_taylor(cfg.initial_field(), cfg.params, cfg.t_end, TAYLOR_ORDER, seg)
    history, fields, code = [], [], None
    for t in _record_times(cfg):
        u = tr.at(t)
        if not np.all(np.isfinite(u.grid)):
            code = eul.NONFINITE
            break
        rec = eul.make_record(u, t, seg if t > 0 else 0.0, cfg.scale)
        history.append(rec)
        fields.append(u)
        if writer is not None:
            writer.write(rec)
        if snap is not None:
            snap.write(snapshot_line(t, u) + "\n")
    return history, fields, code


# ------------------------------------------------------------------ commands

def cmd_solve(cfg: ScenarioConfig) -> int:
    if cfg.method == "compare":
        return cmd_compare(cfg)
    with _open_out(cfg.out) as out, _open_out(cfg.snapshots) as snap:
        try:
            if cfg.method == "eulerian":
                writer = HistoryWriter(out, CSV_COLUMNS) if out else None
                run = _run_eulerian(cfg, writer, snap)
                history, t, code = run.history, run.t, run.code
            elif cfg.method == "lagrangian":
                writer = HistoryWriter(out, LAGRANGIAN_COLUMNS) if out else None
                run = _run_lagrangian(cfg, writer, snap)
                history, t, code = run.history, run.state.t, run.code
            else:
                writer = HistoryWriter(out, CSV_COLUMNS) if out else None
                history, _, code = _run_taylor(cfg, writer, snap)
                t = history[-1].t
        except CFLError as exc:
            print(f"error: {exc}; try dt <= {exc.suggested_dt:.3g}", file=sys.stderr)
            return EXIT_CONFIG
    print(_summary(t, _drift(history), code))
    return EXIT_BREAKDOWN if code else EXIT_OK


def cmd_compare(cfg: ScenarioConfig) -> int:
    """All three solvers on one scenario; deviations at the shared record times."""
    e_fields: list = []
    with _open_out(cfg.out) as out, _open_out(cfg.snapshots) as snap:
        writer = HistoryWriter(out, CSV_COLUMNS) if out else None

        def hook(r):
            e_fields.append(r.u)
            if writer is not None:
                writer.write(r.history[-1])
            if snap is not None:
                snap.write(snapshot_line(r.t, r.u) + "\n")

        try:
            run = eul.EulerianRun(cfg.initial_field(), cfg.params, cfg.dt)
            eul.integrate(run, cfg.t_end, cfg.record_every, cfg.scale, on_record=hook)
            l_fields: list = []
            lrun = _run_lagrangian(cfg, fields=l_fields)
        except CFLError as exc:
            print(f"error: {exc}; try dt <= {exc.suggested_dt:.3g}", file=sys.stderr)
            return EXIT_CONFIG
        _, t_fields, t_code = _run_taylor(cfg)
    code = run.code or lrun.code or t_code
    n = min(len(e_fields), len(l_fields), len(t_fields))
    devs = {
        "eulerian-lagrangian": max(sup_distance(a, b) for a, b in zip(e_fields[:n], l_fields[:n])),
        "eulerian-taylor": max(sup_distance(a, b) for a, b in zip(e_fields[:n], t_fields[:n])),
        "lagrangian-taylor": max(sup_distance(a, b) for a, b in zip(l_fields[:n], t_fields[:n])),
    }
    for k, v in devs.items():
        print(f"deviation {k}: {v:.3e}")
    extra = f"max_deviation={max(devs.values()):.3e}"
    print(_summary(run.t, _drift(run.history), code, extra))
    return EXIT_BREAKDOWN if code else EXIT_OK


def cmd_blowup(cfg: ScenarioConfig) -> int:
    u0 = cfg.initial_field()
    if eul.energy(u0) <= 1e-28:
        print("no breaking detected: the initial slope energy vanishes")
        return EXIT_NO_BREAKING
    amp = max(1.0, u0.sup_norm() ** cfg.p)
    dt = min(cfg.dt, BLOWUP_CFL / (amp * 2.0 * math.pi * cfg.n_modes))
    run = eul.EulerianRun(u0, cfg.params, dt)
    with _open_out(cfg.out) as out:
        writer = HistoryWriter(out, CSV_COLUMNS) if out else None
        hook = (lambda r: writer.write(r.history[-1])) if writer else None
        eul.integrate(run, cfg.t_end, cfg.record_every, cfg.scale, on_record=hook)
    if run.code is None:
        print(f"no breaking detected before t={cfg.t_end:g}")
        return EXIT_NO_BREAKING
    fit = eul.estimate_breaking_time(run.trace)
    print(f"breakdown code={run.code} at t={run.t:.6g} (N={cfg.n_modes}, dt={dt:.3g})")
    if fit is None:
        print("no breaking detected: could not fit 1/sup|u_x| on the resolved window")
        return EXIT_NO_BREAKING
    print(f"estimated T*={fit.t_star:.6g} from {fit.n_points} steps in "
          f"[{fit.window[0]:.4g}, {fit.window[1]:.4g}]")
    if cfg.p == 1:
        oracle = eul.predict_breaking_time(u0, cfg.params)
        print(f"oracle T*={oracle:.6g} relative_error={(fit.t_star - oracle) / oracle:+.3e}")
    return EXIT_OK


ANALYTICITY_COLUMNS = ["t", "radius_est", "time_radius", "sup_abs_ux"]


def cmd_analyticity(cfg: ScenarioConfig) -> int:
    u0 = cfg.initial_field()
    t_star = eul.predict_breaking_time(u0, cfg.params)
    rows = []

    def hook(r):
        try:
            tr = time_radius(taylor_coeffs(r.u, cfg.params, TAYLOR_ORDER), cfg.scale)
        except InsufficientDataError:
            tr = math.nan
        rec = r.history[-1]
        rows.append({"t": rec.t, "radius_est": rec.radius_est, "time_radius": tr,
                     "sup_abs_ux": rec.sup_abs_ux})
        if writer is not None:
            writer.write(rows[-1])

    with _open_out(cfg.out) as out:
        writer = HistoryWriter(out, ANALYTICITY_COLUMNS) if out else None
        try:
            run = eul.EulerianRun(u0, cfg.params, cfg.dt)
            eul.integrate(run, cfg.t_end, cfg.record_every, cfg.scale, on_record=hook)
        except CFLError as exc:
            print(f"error: {exc}; try dt <= {exc.suggested_dt:.3g}", file=sys.stderr)
            return EXIT_CONFIG
    later = [r["radius_est"] for r in rows if r["t"] > 0]
    low = min(later) if later else math.inf
    print(f"time radius at t=0: {format_float(rows[0]['time_radius'])}")
    print(f"min spatial radius over (0, {run.t:.6g}]: {format_float(low)}")
    if t_star is not None:
        print(f"T*={t_star:.6g} t_end/T*={cfg.t_end / t_star:.3f}")
    if run.code is not None:
        print(f"radius collapse: run stopped with code={run.code} at t={run.t:.6g}")
        return EXIT_RADIUS
    checked = t_star is None or cfg.t_end <= 0.5 * t_star
    if checked and (math.isnan(low) or low <= RADIUS_FLOOR):
        print(f"radius collapse: spatial radius fell to {low:.4g} <= floor {RADIUS_FLOOR:g}")
        return EXIT_RADIUS
    return EXIT_OK


NORM_COLUMNS = ["t", "scale_norm", "argmax_k", "truncation_ok", "sobolev_norm"]


def cmd_norms(cfg: ScenarioConfig) -> int:
    if cfg.snapshots is None:
        raise ConfigError("norms needs --snapshots FILE")
    try:
        with open(cfg.snapshots, encoding="utf-8") as fh:
            snaps = read_snapshots(fh)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read snapshots: {exc}") from exc
    with _open_out(cfg.out) as out:
        writer = HistoryWriter(out or sys.stdout, NORM_COLUMNS)
        for t, u in snaps:
            rep = scale_norm(drop_roundoff(u.without_mean()), cfg.scale)
            writer.write({"t": t, "scale_norm": rep.value, "argmax_k": rep.argmax_k,
                          "truncation_ok": rep.truncation_ok,
                          "sobolev_norm": sobolev_norm(u, cfg.sigma)})
    return EXIT_OK


def cmd_verify(cfg: ScenarioConfig) -> int:
    from .verify import SUITES, failure_report, run_suites

    if cfg.suite not in SUITES + ("all",):
        raise ConfigError(f"suite must be one of {SUITES + ('all',)}")
    results = run_suites(cfg.suite)
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} properties passed")
    if n_fail:
        report = failure_report(results)
        print(report)
        if cfg.out:
            with open(cfg.out, "w", encoding="utf-8") as fh:
                fh.write(report + "\n")
        return EXIT_VERIFY
    return EXIT_OK


# ------------------------------------------------------------------ parser

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--p", type=str, help="nonlinearity exponent (integer >= 1)")
    p.add_argument("--init", type=str, help="initial data, e.g. '0.1*sin(2*pi*x)'")
    p.add_argument("--n", type=str, help="grid size (power of two >= 32)")
    p.add_argument("--dt", type=str, help="time step")
    p.add_argument("--t-end", dest="t_end", type=str, help="final time (horizon for blowup)")
    p.add_argument("--method", type=str, help="eulerian | lagrangian | taylor | compare")
    p.add_argument("--record-every", dest="record_every", type=str, help="steps between records")
    p.add_argument("--out", type=str, help="CSV output path")
    p.add_argument("--snapshots", type=str, help="JSON-lines snapshot path")
    p.add_argument("--s", type=str, help="scale-norm parameter in (0, 1)")
    p.add_argument("--sigma", type=str, help="inner Sobolev index")
    p.add_argument("--kmax", type=str, help="scale-norm truncation order")
    p.add_argument("--seed", type=str, help="64-bit seed")
    p.add_argument("--config", type=str, help="key=value config file")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mhslab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("solve", "run one solver and write history/snapshots"),
                           ("compare", "run all three solvers and report deviations"),
                           ("blowup", "integrate to breaking and fit the breaking time"),
                           ("analyticity", "track spatial and temporal analyticity radii"),
                           ("norms", "scale and Sobolev norms of a snapshot file"),
                           ("verify", "run the seeded property suites")):
        sp = sub.add_parser(name, help=helptext)
        _common(sp)
        if name == "verify":
            sp.add_argument("--suite", type=str, help="spectral | lemmas | derivatives | "
                            "equivalence | conservation | taylor | all")
    return parser


_COMMANDS = {
    "solve": (cmd_solve, {}),
    "compare": (cmd_compare, {"method": "compare"}),
    "blowup": (cmd_blowup, {"n": BLOWUP_N, "t_end": BLOWUP_HORIZON}),
    "analyticity": (cmd_analyticity, {}),
    "norms": (cmd_norms, {}),
    "verify": (cmd_verify, {}),
}


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    fn, overrides = _COMMANDS[args.command]
    try:
        cfg = build_config(args, overrides)
        return fn(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def _entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    _entry()
