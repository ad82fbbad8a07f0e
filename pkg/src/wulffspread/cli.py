"""Command-line entry point: ``wulffspread {speed,wulff,simulate,verify,terrace}``.

Every run writes ``runs/<timestamp>-<subcommand>/`` containing the resolved
configuration, ``summary.json`` (status, checks, timing) and
``results.json`` (numeric payload only, byte-identical across repeated runs
with the same configuration), plus CSV/SVG/binary outputs.

Exit codes: 0 all checks passed, 1 a scientific check failed, 2 configuration
error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ResolvedConfig, load, worker_cap
from .eigensolver import EigenError, critical_speed, speed_table
from .model import CATALOG, GridSpec, ModelError, builtin_model
from .pdesim import (
    FieldRecorder,
    RayRecorder,
    SimulationError,
    Simulator,
    bump_datum,
    directional_radius,
    front_like_speed,
    read_field,
    smoothed_step,
    verify_spreading_set,
    write_field,
    write_track_csv,
)
from .terrace import TerraceError, compute_terrace, terrace_from_run, verify_multitier
from .waves import WaveError
from .wulff import (
    DirectionalSpeedTable,
    WulffError,
    build_wulff,
    check_normal_property,
    lipschitz_witness,
    write_polygon_csv,
    write_polygon_svg,
)

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class RunDir:
    """Owner of one result directory."""

    def __init__(self, base, sub: str):
        stamp = datetime.now(timezone.utc).strftime("%Y%m%d-%H%M%S")
        path = Path(base) / f"{stamp}-{sub}"
        k = 1
        while path.exists():
            k += 1
            path = Path(base) / f"{stamp}-{sub}-{k}"
        path.mkdir(parents=True)
        self.path = path
        self.sub = sub
        self.started = datetime.now(timezone.utc).isoformat()
        self.t0 = time.perf_counter()

    def file(self, name: str) -> Path:
        return self.path / name

    def finish(self, status: str, checks: dict, results: dict, error: str | None = None,
               config: ResolvedConfig | None = None):
        if config is not None:
            self.file("config.resolved").write_text(config.to_ini())
        payload = json.dumps(_clean(results), indent=2, sort_keys=True) + "\n"
        self.file("results.json").write_text(payload)
        summary = {
            "subcommand": self.sub,
            "version": __version__,
            "started": self.started,
            "finished": datetime.now(timezone.utc).isoformat(),
            "elapsed_s": round(time.perf_counter() - self.t0, 3),
            "status": status,
            "checks": _clean(checks),
            "results": _clean(results),
        }
        if error:
            summary["error"] = error
        self.file("summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


# --------------------------------------------------------------------------- helpers

def _model(cfg: ResolvedConfig, default_dim=None):
    name = cfg.get("model", "name")
    if name is None:
        raise ConfigError("no model given (use --model or [model] name)")
    over = {k: cfg.get("model", k) for k in ("theta", "theta_bar", "amp", "amplitude")
            if cfg.get("model", k) is not None}
    dim = cfg.get("model", "dim", default_dim)
    return builtin_model(name, dim=dim, cells=cfg.get("model", "cells"), **over)


def _direction(text: str | None, dim: int) -> np.ndarray:
    text = ("1" if dim == 1 else "0") if text is None else str(text)
    if dim == 1:
        v = float(text)
        if v == 0:
            raise ConfigError("1D direction must be +1 or -1")
        return np.array([math.copysign(1.0, v)])
    if "," in text:
        parts = [float(p) for p in text.split(",")]
        if len(parts) != 2 or not any(parts):
            raise ConfigError(f"direction {text!r} is not a nonzero 2-vector")
        v = np.array(parts)
        return v / np.linalg.norm(v)
    ang = math.radians(float(text))
    return np.array([math.cos(ang), math.sin(ang)])


def _expected_speed(model, e):
    exp = model.expected
    if "c_star" in exp:
        return exp["c_star"][0]
    if model.dim == 2 and np.allclose(np.abs(e), [1, 0]) and "c_star_e1" in exp:
        return exp["c_star_e1"][0]
    if model.dim == 2 and np.allclose(np.abs(e), [0, 1]) and "c_star_e2" in exp:
        return exp["c_star_e2"][0]
    return None


def _synthetic_table(spec: str, n: int) -> DirectionalSpeedTable:
    kind, _, args = spec.partition(":")
    vals = [float(a) for a in args.split(",")] if args else []
    if kind == "circle":
        r = vals[0] if vals else 2.0
        return DirectionalSpeedTable.from_function(lambda t: r, n)
    if kind == "ellipse":
        a, b = (vals + [2.0, 1.0][len(vals):])[:2]
        return DirectionalSpeedTable.from_function(
            lambda t: math.sqrt((a * math.cos(t)) ** 2 + (b * math.sin(t)) ** 2), n)
    raise ConfigError(f"unknown synthetic table {spec!r} (use circle:r or ellipse:a,b)")


def _eigen_table(model, n, workers):
    if not model.reaction.is_kpp:
        raise ConfigError(f"eigenvalue route is only valid for KPP reactions; {model.name} is "
                          f"{model.reaction.kind}")
    if model.dim != 2:
        raise ConfigError("Wulff shapes need a 2D model (use --dim 2)")
    return speed_table(model.coeffs, n_angles=n, workers=workers)


def _write_table(path, table):
    write_track_csv(path, table.angles, table.speeds, ("angle", "speed"))


# --------------------------------------------------------------------------- subcommands

def cmd_speed(cfg, rd):
    model = _model(cfg)
    method = cfg.get("run", "method", "eigen")
    if method == "eigen" and not model.reaction.is_kpp:
        raise ConfigError(f"eigenvalue route is only valid for KPP reactions; {model.name} is "
                          f"{model.reaction.kind} (use --method front)")
    e = _direction(cfg.get("run", "direction"), model.dim)
    if method == "eigen":
        res = critical_speed(model.coeffs, e)
        c, tol = res.c_star, 1e-4
        results = {"c_star": c, "lambda_star": res.lambda_star, "direction": e}
    elif method == "front":
        h = cfg.get("grid", "spacing", 0.05)
        T = cfg.get("run", "T", 40.0)
        c = front_like_speed(model, e, GridSpec(dim=model.dim, spacing=h, dt=cfg.get("grid", "dt")), T)
        tol = 0.03
        results = {"c_star": c, "direction": e, "T": T, "spacing": h}
    else:
        raise ConfigError(f"unknown method {method!r} (eigen or front)")
    print(f"c*({', '.join(f'{v:.6g}' for v in e)}) = {c:.6f}  [{method}]")
    ref = _expected_speed(model, e)
    checks = {}
    if ref is not None:
        checks["reference"] = {"expected": ref, "value": c, "rel_tol": tol,
                               "passed": abs(c - ref) <= tol * abs(ref)}
    return checks, results


def cmd_wulff(cfg, rd):
    n = cfg.get("run", "angles", 256)
    n_xi = cfg.get("run", "n_xi", 720)
    workers = worker_cap(cfg.get("run", "workers"))
    synth = cfg.get("model", "name", "")
    if synth.startswith(("circle", "ellipse")):
        table = _synthetic_table(synth, n)
    else:
        table = _eigen_table(_model(cfg, 2), n, workers)
    shape = build_wulff(table, n_xi, workers=workers)
    write_polygon_csv(shape, rd.file("polygon.csv"))
    write_polygon_svg(shape, rd.file("polygon.svg"))
    _write_table(rd.file("speed_table.csv"), table)
    normal = check_normal_property(shape, table, tol=1e-3)
    lip = lipschitz_witness(shape, table)
    lo, hi = float(table.speeds.min()), math.sqrt(2) * table.axis_max()
    bounds_ok = bool((shape.radii >= lo * (1 - 1e-12)).all() and (shape.radii <= hi * (1 + 1e-12)).all())
    print(f"w in [{shape.radii.min():.6f}, {shape.radii.max():.6f}]; normal-property violation "
          f"{normal.max_violation:.2e}")
    checks = {"normal_property": {"max_violation": normal.max_violation, "passed": normal.passed},
              "radius_bounds": {"lower": lo, "upper": hi, "passed": bounds_ok},
              "lipschitz": {"observed": lip.observed, "constant": lip.constant, "passed": lip.passed}}
    results = {"radii_min": shape.radii.min(), "radii_max": shape.radii.max(), "n_xi": n_xi,
               "table_min": lo, "table_max": float(table.speeds.max()),
               "interpolation": shape.meta["interpolation"]}
    return checks, results


def _grid_from(cfg, dim, half_width):
    return GridSpec(dim=dim, spacing=cfg.get("grid", "spacing", 0.1 if dim == 1 else 0.25),
                    domain_half_width=cfg.get("grid", "half_width", half_width), dt=cfg.get("grid", "dt"))


def cmd_simulate(cfg, rd):
    model = _model(cfg)
    grid = _grid_from(cfg, model.dim, 30.0)
    T = cfg.get("run", "T", 10.0)
    axes = [grid.axis() for _ in range(model.dim)]
    init = cfg.get("run", "initial", "bump")
    ghost = None
    if init == "bump":
        u0 = bump_datum(axes)
    elif init == "front":
        mesh = np.meshgrid(*axes, indexing="ij")
        u0 = smoothed_step(mesh[0])
        ghost = [(1.0, 0.0)] + [(0.0, 0.0)] * (model.dim - 1)
    elif init.startswith("file:"):
        u0, head = read_field(init[5:])
        if u0.shape != tuple(len(a) for a in axes):
            raise ConfigError(f"initial field shape {u0.shape} does not match the grid")
    else:
        raise ConfigError(f"unknown initial datum {init!r} (bump, front or file:PATH)")
    obs_spec = cfg.get("run", "observers", "rays:8")
    observers, rays = [], None
    for item in filter(None, obs_spec.split(";")):
        kind, _, arg = item.partition(":")
        if kind == "rays":
            k = int(arg or 8)
            dirs = ([[1.0], [-1.0]] if model.dim == 1 else
                    [[math.cos(2 * math.pi * j / k), math.sin(2 * math.pi * j / k)] for j in range(k)])
            rays = RayRecorder(dirs)
            observers.append(rays)
        elif kind == "field":
            observers.append(FieldRecorder(every=int(arg or 10)))
        else:
            raise ConfigError(f"unknown observer {kind!r} (rays:N or field:EVERY)")
    sim = Simulator(model, axes, u0, ghost=ghost, dt=grid.dt, contamination="warn")
    state = sim.integrate(T, observers)
    write_field(rd.file("field.bin"), state, {"model": model.name})
    results = {"T": state.t, "steps": state.steps, "dt": state.dt, "u_min": state.u.min(),
               "u_max": state.u.max(), "warnings": state.warnings}
    if rays is not None:
        speeds = []
        for j, d in enumerate(rays.directions):
            curve = directional_radius(rays, d, 0.5)
            write_track_csv(rd.file(f"radius_{j}.csv"), curve.times, curve.radii, ("time", "radius"))
            speeds.append(curve.terminal_speed)
        results["terminal_radius_speeds"] = speeds
    print(f"t = {state.t:g}: u in [{state.u.min():.4g}, {state.u.max():.4g}], {state.steps} steps")
    checks = {"range": {"passed": bool(state.u.min() >= -1e-12 and state.u.max() <= 1 + 1e-12)}}
    return checks, results


def cmd_verify(cfg, rd):
    model = _model(cfg, 2)
    T = cfg.get("run", "T", 30.0)
    eps = cfg.get("verify", "eps", 0.15)
    eta_hi = cfg.get("verify", "eta_hi", 0.9)
    eta_lo = cfg.get("verify", "eta_lo", 0.05)
    scale = cfg.get("verify", "shape_scale", 1.0)
    n = cfg.get("run", "angles", 64)
    workers = worker_cap(cfg.get("run", "workers"))
    table = _eigen_table(model, n, workers)
    shape = build_wulff(table.scaled(scale) if scale != 1.0 else table, cfg.get("run", "n_xi", 720))
    write_polygon_csv(shape, rd.file("polygon.csv"))
    write_polygon_svg(shape, rd.file("polygon.svg"))
    half = cfg.get("grid", "half_width", math.ceil((1 + eps) * float(table.speeds.max()) * T * 1.1 + 5))
    grid = GridSpec(dim=2, spacing=cfg.get("grid", "spacing", 0.2), domain_half_width=half,
                    dt=cfg.get("grid", "dt"))
    axes = [grid.axis(), grid.axis()]
    sim = Simulator(model, axes, bump_datum(axes), dt=grid.dt, contamination="warn")
    state = sim.integrate(T)
    write_field(rd.file("field.bin"), state, {"model": model.name})
    rep = verify_spreading_set(state, shape, eps, eta_hi, eta_lo, T, require_box=False)
    print(f"inside min {rep.min_inside:.4f} (>= {eta_hi}), outside max {rep.max_outside:.4g} (<= {eta_lo})")
    checks = {"inside": {"min": rep.min_inside, "threshold": eta_hi, "passed": rep.inside_ok},
              "outside": {"max": rep.max_outside, "threshold": eta_lo, "passed": rep.outside_ok},
              "box_contains_outer": rep.box_contains_outer}
    results = {"min_inside": rep.min_inside, "max_outside": rep.max_outside, "eps": eps, "T": T,
               "shape_scale": scale, "radii_min": shape.radii.min(), "radii_max": shape.radii.max(),
               "half_width": half, "warnings": state.warnings}
    return checks, results


def cmd_terrace(cfg, rd):
    model = _model(cfg, 1)
    if not model.reaction.autonomous:
        raise ConfigError("terraces need an autonomous reaction")
    f = model.reaction.scalar()
    terr = compute_terrace(f)
    T = cfg.get("run", "T", 400.0)
    half = cfg.get("grid", "half_width", math.ceil(1.1 * terr.speeds[0] * T + 20))
    grid = GridSpec(dim=1, spacing=cfg.get("grid", "spacing", 0.1), domain_half_width=half,
                    dt=cfg.get("grid", "dt"))
    rep = verify_multitier(model, terr, grid, T)
    emp = terrace_from_run(rep.recorder, f)
    for k, w in enumerate(terr.waves, start=1):
        w.write_csv(rd.file(f"wave_{k}.csv"))
    lv_ok = len(emp.levels) == len(terr.levels) and all(
        abs(a - b) <= 0.02 for a, b in zip(emp.levels, terr.levels))
    sp_ok = len(emp.speeds) == len(terr.speeds) and all(
        abs(a - b) <= 0.05 * b for a, b in zip(emp.speeds, terr.speeds))
    print("levels " + ", ".join(f"{v:.4f}" for v in terr.levels) + "; speeds "
          + ", ".join(f"{v:.6f}" for v in terr.speeds))
    checks = {"multitier": {"passed": rep.passed,
                            "margins": {f"{c.name} @ {c.speed:.4f}": c.margin for c in rep.checks}},
              "empirical_levels": {"values": emp.levels, "passed": lv_ok},
              "empirical_speeds": {"values": emp.speeds, "passed": sp_ok}}
    results = {"terrace": terr.to_dict(), "empirical": {"levels": emp.levels, "speeds": emp.speeds,
                                                        "plateaus": emp.plateau_values}, "T": T}
    (rd.file("terrace.json")).write_text(json.dumps(_clean(results["terrace"]), indent=2) + "\n")
    return checks, results


COMMANDS = {"speed": cmd_speed, "wulff": cmd_wulff, "simulate": cmd_simulate,
            "verify": cmd_verify, "terrace": cmd_terrace}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wulffspread", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="INI file with [model] [grid] [run] [verify] sections")
        sp.add_argument("--model", help=f"catalog model: {', '.join(CATALOG)}")
        sp.add_argument("--dim", type=int)
        sp.add_argument("--cells", type=int, help="cell-grid points per period")
        sp.add_argument("--theta", type=float)
        sp.add_argument("--theta-bar", type=float)
        sp.add_argument("--amp", type=float)
        sp.add_argument("--amplitude", type=float)
        sp.add_argument("--spacing", type=float, help="simulation grid spacing")
        sp.add_argument("--half-width", type=float, help="simulation box half-width")
        sp.add_argument("--dt", type=float)
        sp.add_argument("--T", type=float, help="final time")
        sp.add_argument("--out", help="results base directory (default runs)")
        sp.add_argument("--workers", type=int)

    sp = sub.add_parser("speed", help="critical speed in one direction")
    common(sp)
    sp.add_argument("--direction", help="angle in degrees (2D), +1/-1 (1D) or 'x,y'")
    sp.add_argument("--method", choices=["eigen", "front"])
    sp = sub.add_parser("wulff", help="Wulff shape from an eigen speed table or a synthetic table")
    common(sp)
    sp.add_argument("--angles", type=int, help="table directions")
    sp.add_argument("--n-xi", type=int, help="sampled shape directions")
    sp = sub.add_parser("simulate", help="run the PDE from a bump, front or stored field")
    common(sp)
    sp.add_argument("--initial", help="bump, front or file:PATH")
    sp.add_argument("--observers", help="';'-separated: rays:N, field:EVERY")
    sp = sub.add_parser("verify", help="eigen speeds -> Wulff shape -> 2D bump run -> spreading check")
    common(sp)
    sp.add_argument("--angles", type=int)
    sp.add_argument("--n-xi", type=int)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--eta-hi", type=float)
    sp.add_argument("--eta-lo", type=float)
    sp.add_argument("--shape-scale", type=float, help="multiply the shape (deliberate-failure checks)")
    sp = sub.add_parser("terrace", help="terrace decomposition with simulation cross-checks")
    common(sp)
    return p


def _overrides(ns) -> dict:
    g = vars(ns)
    pick = {
        "model": {"name": "model", "dim": "dim", "cells": "cells", "theta": "theta",
                  "theta_bar": "theta_bar", "amp": "amp", "amplitude": "amplitude"},
        "grid": {"spacing": "spacing", "half_width": "half_width", "dt": "dt"},
        "run": {"T": "T", "method": "method", "direction": "direction", "angles": "angles",
                "n_xi": "n_xi", "initial": "initial", "observers": "observers", "out": "out",
                "workers": "workers"},
        "verify": {"eps": "eps", "eta_hi": "eta_hi", "eta_lo": "eta_lo", "shape_scale": "shape_scale"},
    }
    return {sec: {k: g.get(attr) for k, attr in keys.items()} for sec, keys in pick.items()}


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = load(ns.config, _overrides(ns))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        RunDir(ns.out or "runs", ns.command).finish("config-error", {}, {}, str(exc))
        return EXIT_CONFIG
    rd = RunDir(cfg.get("run", "out", "runs"), ns.command)
    try:
        checks, results = COMMANDS[ns.command](cfg, rd)
    except (ConfigError, ModelError, WulffError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        rd.finish("config-error", {}, {}, str(exc), cfg)
        return EXIT_CONFIG
    except (EigenError, SimulationError, WaveError, TerraceError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        rd.finish("fail", {}, {}, str(exc), cfg)
        return EXIT_FAIL
    ok = all(v.get("passed", True) for v in checks.values() if isinstance(v, dict))
    rd.finish("pass" if ok else "fail", checks, results, None, cfg)
    print(f"{'PASS' if ok else 'FAIL'}; results in {rd.path}")
    return EXIT_PASS if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
