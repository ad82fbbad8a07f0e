"""Propagating terraces of multistable reactions and their multi-tier spreading.

A terrace is a stack of travelling waves: wave ``m`` connects level
``theta_m`` to ``theta_{m-1}`` at speed ``c_m`` with ``0 = theta_0 < ... <
theta_M = 1`` and ``c_1 > ... > c_M > 0``. Here it is built by shooting a
single connection from 1 down to 0 and splitting wherever the trajectory stalls
at an intermediate stable zero, then merging tiers that violate the speed
ordering and finally dropping levels whose speed equals that of a higher tier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import map_coordinates

from .model import GridSpec, Model
from .pdesim import FieldRecorder, Simulator, fit_positions
from .waves import (
    WaveError,
    WaveProfile,
    _assemble,
    build_bump_subsolution,
    combustion_wave,
    monostable_wave,
    shoot_speed,
    stability_intervals,
)

EQUAL_TOL = 1e-6
BORDERLINE = 10 * EQUAL_TOL


class TerraceError(RuntimeError):
    pass


@dataclass
class TerraceDecomposition:
    levels: list
    speeds: list
    waves: list
    pre_merge: list
    pre_merge_waves: list
    flags: list = field(default_factory=list)

    @property
    def M(self) -> int:
        return len(self.speeds)

    @property
    def pre_merge_levels(self) -> list:
        return [0.0] + [lv for lv, _ in self.pre_merge]

    def to_dict(self) -> dict:
        return {"levels": list(map(float, self.levels)), "speeds": list(map(float, self.speeds)),
                "pre_merge": [[float(a), float(b)] for a, b in self.pre_merge], "flags": list(self.flags)}


def _interior(rep, lo, hi):
    zs = [z for z in rep.zeros if lo + 1e-9 < z < hi - 1e-9]
    return zs, [z for z in zs if rep.kinds[z] == "stable"]


def _connect(f, lo, hi, rep, allow_split=True) -> list:
    """Raw waves from ``hi`` down to ``lo``, listed top-down."""
    zs, stable = _interior(rep, lo, hi)
    flat = [(a, b) for a, b in rep.flats if abs(a - lo) < 1e-9 and b < hi]
    if not zs and flat:
        return [combustion_wave(f, flat[0][1], lo, hi)]
    if not zs:
        xs = np.linspace(lo, hi, 2001)[1:-1]
        if all(f(float(x)) > 0 for x in xs):
            return [monostable_wave(f, lo, hi)]
    con = shoot_speed(f, lo, hi, stall_candidates=stable if allow_split else ())
    if con.stall_level is not None:
        z = con.stall_level
        return _connect(f, z, hi, rep) + _connect(f, lo, z, rep)
    return [_assemble(f, lo, hi, con.c, "bistable")]


def remove_equal_speeds(levels, speeds, tol: float = EQUAL_TOL):
    """Drop ``(theta_m, c_m)`` whenever some higher tier ``n > m`` has ``c_n = c_m``.

    ``levels`` holds ``theta_1..theta_M`` (bottom-up) and ``speeds`` the
    matching ``c_1..c_M``. Within a block of equal speeds the highest level is
    kept. Idempotent.
    """
    keep_l, keep_c, kept = [], [], []
    for m, (lv, c) in enumerate(zip(levels, speeds)):
        if any(abs(c - speeds[n]) <= tol for n in range(m + 1, len(speeds))):
            continue
        keep_l.append(lv)
        keep_c.append(c)
        kept.append(m)
    return keep_l, keep_c, kept


def compute_terrace(f, rep=None) -> TerraceDecomposition:
    """Minimal terrace connecting 1 to 0 for an autonomous ``f``."""
    rep = rep or stability_intervals(f)
    if rep.degenerate:
        raise TerraceError(f"degenerate zeros {rep.degenerate}")
    waves = _connect(f, 0.0, 1.0, rep)[::-1]  # bottom-up
    flags = []
    # ordering: c_lower >= c_upper, otherwise merge across the shared level
    merged = True
    while merged and len(waves) > 1:
        merged = False
        for m in range(len(waves) - 1):
            lower, upper = waves[m], waves[m + 1]
            if upper.c > lower.c + EQUAL_TOL:
                con = shoot_speed(f, lower.theta_lo, upper.theta_hi)
                w = _assemble(f, lower.theta_lo, upper.theta_hi, con.c, "bistable")
                waves[m:m + 2] = [w]
                flags.append(f"merged tiers across level {lower.theta_hi:.6g}")
                merged = True
                break
    pre = [(w.theta_hi, w.c) for w in waves]
    for a, b in zip(pre, pre[1:]):
        if abs(a[1] - b[1]) <= BORDERLINE:
            flags.append(f"borderline speeds {a[1]:.9g} and {b[1]:.9g}")
    lv, cs, kept = remove_equal_speeds([p[0] for p in pre], [p[1] for p in pre])
    if cs and cs[-1] <= 0:
        raise TerraceError(f"lowest-speed tier has nonpositive speed {cs[-1]:.6g}; outside the terrace setting")
    return TerraceDecomposition([0.0] + lv, cs, [waves[k] for k in kept], pre, waves, flags)


# --------------------------------------------------------------------------- simulation checks

@dataclass
class TierCheck:
    name: str
    speed: float
    value: float
    target: float
    tolerance: float
    kind: str  # "equal", "max" or "min"

    @property
    def margin(self) -> float:
        if self.kind == "equal":
            return self.tolerance - abs(self.value - self.target)
        if self.kind == "max":
            return self.target - self.value
        return self.value - self.target

    @property
    def passed(self) -> bool:
        return self.margin >= 0


@dataclass
class MultitierReport:
    checks: list
    T: float
    dim: int
    recorder: object = None
    state: object = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _initial_bump(model: Model, terrace: TerraceDecomposition, axes, plateau: float):
    f = model.reaction.scalar()
    bump = build_bump_subsolution(f, terrace.M, terrace)
    h = float(axes[0][1] - axes[0][0])
    if model.dim == 1:
        n = len(axes[0])
        return bump.on_grid(f, h, n // 2, n), bump
    # radial plateau of the bump's peak, with the bump's decreasing flank outside
    n0 = int(math.ceil(2.0 * (bump.x2 - bump.x1) / h)) + 8
    half = bump.on_grid(f, h, n0, 2 * n0 + 1)[n0:]
    mesh = np.meshgrid(*axes, indexing="ij")
    r = np.sqrt(mesh[0] ** 2 + mesh[1] ** 2)
    s = np.maximum(r - plateau, 0.0) / h
    return np.interp(s, np.arange(len(half)), half, right=0.0), bump


def _values_at(state, radius, directions):
    axes = state.axes
    if state.dim == 1:
        return [float(np.interp(sgn * radius, axes[0], state.u)) for sgn in (1.0, -1.0)]
    out = []
    for th in directions:
        p = [radius * math.cos(th), radius * math.sin(th)]
        coords = [[(p[i] - ax[0]) / (ax[1] - ax[0])] for i, ax in enumerate(axes)]
        out.append(float(map_coordinates(state.u, coords, order=1)[0]))
    return out


def verify_multitier(model: Model, terrace: TerraceDecomposition, grid: GridSpec, T: float,
                     tol: float = 0.05, plateau: float = 8.0, n_directions: int = 8,
                     record_every: int = 10) -> MultitierReport:
    """Run from the bump below the top level and probe ``u(T, x)`` between tiers.

    For every ``m < M`` the probe speed is the midpoint of ``(c_{m+1}, c_m)``
    and ``u`` must be within ``tol`` of ``theta_m`` there; at ``1.1 c_1``
    ``u <= 0.05`` and at ``0.9 c_M`` ``u >= 1 - 0.05``. In 2D the initial datum
    is a radial plateau (radius ``plateau``) with the bump's flank and the
    probe radii are measured from the plateau edge.
    """
    c = terrace.speeds
    reach = 1.1 * c[0] * T
    L = grid.domain_half_width
    # the 2D datum starts as a plateau, so its fronts lead the probes by that radius
    need = reach + 5.0 + (plateau if model.dim == 2 else 0.0)
    if need > L:
        raise TerraceError(f"box half-width {L:g} too small for the probe radius {reach:g} (need {need:g})")
    axes = [grid.axis() for _ in range(model.dim)]
    u0, _ = _initial_bump(model, terrace, axes, plateau)
    sim = Simulator(model, axes, u0, dt=grid.dt)
    rec = FieldRecorder(every=record_every) if model.dim == 1 else None
    state = sim.integrate(T, [rec] if rec else [])
    dirs = 2 * math.pi * np.arange(n_directions) / n_directions
    r0 = plateau if model.dim == 2 else 0.0
    checks = []
    M = len(c)
    for m in range(1, M):
        cp = 0.5 * (c[m] + c[m - 1])
        for v in _values_at(state, r0 + cp * T, dirs):
            checks.append(TierCheck(f"plateau theta_{m}", cp, v, terrace.levels[m], tol, "equal"))
    for v in _values_at(state, r0 + 1.1 * c[0] * T, dirs):
        checks.append(TierCheck("ahead of fastest tier", 1.1 * c[0], v, 0.05, tol, "max"))
    for v in _values_at(state, r0 + 0.9 * c[-1] * T, dirs):
        checks.append(TierCheck("behind slowest tier", 0.9 * c[-1], v, terrace.levels[-1] - 0.05, tol, "min"))
    return MultitierReport(checks, T, model.dim, rec, state)


@dataclass
class EmpiricalTerrace:
    levels: list
    speeds: list
    plateau_values: list
    interface_levels: list
    fit_residuals: list


def _plateaus(x, u, zeros, rel=1e-3, match=0.02, min_len=None):
    du = np.gradient(u, x)
    flat = np.abs(du) <= rel * np.abs(du).max()
    min_len = min_len if min_len is not None else 2.0
    out = []
    i, n = 0, len(u)
    while i < n:
        if not flat[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and flat[j + 1]:
            j += 1
        if x[j] - x[i] >= min_len:
            val = float(np.median(u[i:j + 1]))
            z = min(zeros, key=lambda q: abs(q - val))
            if abs(z - val) <= match:
                out.append((float(x[i]), float(x[j]), val, z))
        i = j + 1
    return out


def terrace_from_run(recorder: FieldRecorder, f, fit: str = "linear", window: float = 0.5) -> EmpiricalTerrace:
    """Plateau levels of the final snapshot and speeds of the interfaces between them.

    Works on the half-line ``x >= 0`` of a 1D run. Interfaces are tracked at
    the midpoint between consecutive plateau values.
    """
    if recorder.axes is None or len(recorder.axes) != 1:
        raise TerraceError("terrace_from_run needs a 1D field recorder")
    x = recorder.axes[0]
    pos = x >= 0
    xp = x[pos]
    zeros = stability_intervals(f).zeros
    final = recorder.fields[-1][pos]
    pl = _plateaus(xp, final, zeros)
    if len(pl) < 2:
        raise TerraceError("no plateaus resolved (run too short)")
    # plateaus ordered outward from the centre: values should decrease
    vals = []
    for p in pl:
        if not vals or abs(p[3] - vals[-1][3]) > 1e-9:
            vals.append(p)
    levels = sorted({p[3] for p in vals})
    speeds, iface, resid = [], [], []
    for lo, hi in zip(levels, levels[1:]):
        eta = 0.5 * (lo + hi)
        track = []
        for snap in recorder.fields:
            v = snap[pos]
            idx = np.nonzero(v >= eta)[0]
            if idx.size == 0 or idx[-1] == len(v) - 1:
                track.append(math.nan)
                continue
            j = int(idx[-1])
            track.append(float(xp[j] + (xp[j + 1] - xp[j]) * (v[j] - eta) / (v[j] - v[j + 1])))
        sp, rs, _ = fit_positions(recorder.times, track, fit, window)
        speeds.append(sp)
        iface.append(eta)
        resid.append(rs)
    return EmpiricalTerrace(levels, speeds, [p[2] for p in vals], iface, resid)
