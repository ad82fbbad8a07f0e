"""Monotone explicit finite-difference solver for periodic reaction-diffusion-advection.

Solves ``u_t = div(A grad u) + q.grad u + f(x, t, u)`` on a box in 1D or 2D with
explicit Euler in time, flux-form diffusion (half-node coefficient averages)
and centred advection. Under the step restriction of :func:`stable_time_step`
the update is nondecreasing in every stencil value, so ordered data stay
ordered and ``0 <= u <= 1`` is preserved without any clamping.
"""

from __future__ import annotations

import csv
import math
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import map_coordinates

from .model import GridSpec, Model, ModelError

RANGE_TOL = 1e-12
CONTAM_WARN = 1e-6
CONTAM_ERROR = 1e-3
OUTPUT_INTERVAL = 0.1


class SimulationError(RuntimeError):
    pass


class BoundaryContaminationWarning(RuntimeWarning):
    pass


# --------------------------------------------------------------------------- time step

def _spacings(axes):
    return [float(ax[1] - ax[0]) for ax in axes]


def _coefficient_bounds(model: Model):
    c = model.coeffs
    a_max = float(max(c.a[i, i].max() for i in range(c.dim)))
    q_max = float(np.abs(c.qvec).max()) if c.qvec.size else 0.0
    return a_max, q_max


def stability_bound(model: Model, spacing) -> float:
    """``sum_i (2 a_max / h_i^2 + |q|_max / h_i) + Lip(f)``; ``dt`` times this must be <= 1."""
    hs = np.atleast_1d(np.asarray(spacing, dtype=float))
    if hs.size == 1:
        hs = np.repeat(hs, model.dim)
    a_max, q_max = _coefficient_bounds(model)
    return float(sum(2 * a_max / h ** 2 + q_max / h for h in hs) + model.reaction.lipschitz())


def stable_time_step(model: Model, spacing, cfl: float = 0.9) -> float:
    """Largest explicit step allowed by the monotonicity condition, scaled by ``cfl``."""
    if not 0 < cfl <= 1:
        raise SimulationError("cfl must lie in (0, 1]")
    return cfl / stability_bound(model, spacing)


# --------------------------------------------------------------------------- simulator

@dataclass
class SimulationState:
    axes: list
    t: float
    u: np.ndarray
    dt: float
    steps: int = 0
    warnings: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def spacing(self) -> float:
        return float(self.axes[0][1] - self.axes[0][0])


def box_axes(grid: GridSpec) -> list:
    return [grid.axis() for _ in range(grid.dim)]


def strip_axis(spacing: float) -> np.ndarray:
    """One period ``[0, 1)`` resolved by the node count closest to ``1 / spacing``."""
    m = max(4, int(round(1.0 / spacing)))
    return np.arange(m) / m


def _sl(axis, start, stop, ndim):
    idx = [slice(None)] * ndim
    idx[axis] = slice(start, stop)
    return tuple(idx)


class Simulator:
    """Time stepper on the tensor grid ``axes``.

    Parameters
    ----------
    model : Model
    axes : list of 1D arrays
        Uniform node coordinates per axis (physical units, period 1).
    periodic : sequence of bool, optional
        Periodic axes wrap around; their length must be a whole number of periods.
    ghost : sequence of (lo, hi), optional
        Dirichlet values outside the box on non-periodic axes (default 0).
    dt : float, optional
        Time step; derived from the monotonicity condition when omitted.
    contamination : {"error", "warn"}
        What to do when the outermost layer departs from the ghost value by
        more than ``1e-3``.
    """

    def __init__(self, model: Model, axes, u0, *, periodic=None, ghost=None, dt=None,
                 cfl: float = 0.9, contamination: str = "error"):
        self.model = model
        self.axes = [np.asarray(ax, dtype=float) for ax in axes]
        dim = len(self.axes)
        if dim != model.dim:
            raise ModelError(f"model is {model.dim}D but {dim} axes were given")
        c = model.coeffs
        if dim == 2 and (np.abs(c.a[0, 1]).max() > 0 or np.abs(c.a[1, 0]).max() > 0):
            raise SimulationError("off-diagonal diffusion has no monotone centred stencil; "
                                  "only diagonal A is supported")
        self.periodic = tuple(periodic) if periodic is not None else (False,) * dim
        self.ghost = tuple(ghost) if ghost is not None else ((0.0, 0.0),) * dim
        self.h = _spacings(self.axes)
        for ax, h in zip(self.axes, self.h):
            if not np.allclose(np.diff(ax), h, rtol=1e-9, atol=1e-12):
                raise SimulationError("axes must be uniform")
        if contamination not in ("error", "warn"):
            raise SimulationError("contamination must be 'error' or 'warn'")
        self.contamination = contamination

        a, q, lin = c.sample_on(self.axes)
        self.modulation = model.reaction.modulation_on(self.axes)
        self._diff = []
        for i in range(dim):
            aii = a[i, i]
            if np.ptp(aii) <= 1e-14:
                self._diff.append(float(aii.flat[0]) / self.h[i] ** 2)
                continue
            if self.periodic[i]:
                ext = np.concatenate([np.take(aii, [-1], axis=i), aii, np.take(aii, [0], axis=i)], axis=i)
            else:
                ext = np.concatenate([np.take(aii, [0], axis=i), aii, np.take(aii, [-1], axis=i)], axis=i)
            m = ext.shape[i]
            half = 0.5 * (ext[_sl(i, 0, m - 1, dim)] + ext[_sl(i, 1, m, dim)])
            self._diff.append(half / self.h[i] ** 2)
        self._adv = [None if np.abs(q[i]).max() == 0 else q[i] / (2 * self.h[i]) for i in range(dim)]
        for i in range(dim):
            if self._adv[i] is not None:
                a_min = float(a[i, i].min())
                if float(np.abs(q[i]).max()) * self.h[i] > 2 * a_min:
                    raise SimulationError("cell Peclet number above 2: centred advection is not monotone")

        bound = stability_bound(model, self.h)
        if dt is None:
            dt = cfl / bound
        elif dt * bound > 1.0 + 1e-12:
            raise SimulationError(f"dt={dt:g} violates the monotonicity condition dt <= {1 / bound:g}")
        self.dt_max = float(dt)

        u = np.array(u0, dtype=float)
        if u.shape != tuple(len(ax) for ax in self.axes):
            raise SimulationError(f"u0 has shape {u.shape}, expected {tuple(len(ax) for ax in self.axes)}")
        if not np.isfinite(u).all():
            raise SimulationError("u0 has non-finite values")
        if u.min() < -RANGE_TOL or u.max() > 1 + RANGE_TOL:
            raise SimulationError("u0 must take values in [0, 1]")
        self.state = SimulationState(self.axes, 0.0, u, self.dt_max)
        self._warned = False

    # -- stencil -------------------------------------------------------------
    def _extend(self, u, i):
        if self.periodic[i]:
            lo, hi = np.take(u, [-1], axis=i), np.take(u, [0], axis=i)
        else:
            shp = list(u.shape)
            shp[i] = 1
            lo = np.full(shp, self.ghost[i][0])
            hi = np.full(shp, self.ghost[i][1])
        return np.concatenate([lo, u, hi], axis=i)

    def rhs(self, u, t):
        out = self.model.reaction.eval(u, self.modulation, t)
        for i in range(u.ndim):
            ext = self._extend(u, i)
            n = ext.shape[i]
            flux = self._diff[i] * np.diff(ext, axis=i)
            out += flux[_sl(i, 1, n - 1, u.ndim)] - flux[_sl(i, 0, n - 2, u.ndim)]
            if self._adv[i] is not None:
                out += self._adv[i] * (ext[_sl(i, 2, n, u.ndim)] - ext[_sl(i, 0, n - 2, u.ndim)])
        return out

    def step(self, dt: float):
        s = self.state
        u = s.u + dt * self.rhs(s.u, s.t)
        lo, hi = float(u.min()), float(u.max())
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise SimulationError(f"non-finite value at t={s.t + dt:g}")
        if lo < -RANGE_TOL or hi > 1 + RANGE_TOL:
            raise SimulationError(f"range violation at t={s.t + dt:g}: [{lo:.3e}, {hi:.3e}] "
                                  "(clamping would be required)")
        s.u = u
        s.steps += 1
        s.t = s.steps * s.dt

    def boundary_excess(self) -> float:
        u = self.state.u
        worst = 0.0
        for i in range(u.ndim):
            if self.periodic[i]:
                continue
            worst = max(worst, float(np.abs(np.take(u, 0, axis=i) - self.ghost[i][0]).max()),
                        float(np.abs(np.take(u, -1, axis=i) - self.ghost[i][1]).max()))
        return worst

    def _monitor(self):
        ex = self.boundary_excess()
        s = self.state
        if ex > CONTAM_ERROR:
            msg = f"boundary contamination {ex:.3e} > {CONTAM_ERROR:g} at t={s.t:g}: box too small"
            if self.contamination == "error":
                raise SimulationError(msg)
            if msg not in s.warnings and not any(w.startswith("boundary contamination") and ">" in w
                                                 for w in s.warnings):
                s.warnings.append(msg)
                warnings.warn(msg, BoundaryContaminationWarning, stacklevel=3)
        elif ex > CONTAM_WARN and not self._warned:
            self._warned = True
            msg = f"boundary value {ex:.3e} exceeds {CONTAM_WARN:g} at t={s.t:g}"
            s.warnings.append(msg)
            warnings.warn(msg, BoundaryContaminationWarning, stacklevel=3)

    def schedule(self, T: float):
        """Number of steps and the step that lands exactly on ``T``."""
        if T < 0:
            raise SimulationError("T must be nonnegative")
        n = max(1, math.ceil(T / self.dt_max - 1e-9)) if T > 0 else 0
        return n, (T / n if n else self.dt_max)

    def integrate(self, T: float, observers=()):
        n, dt = self.schedule(T)
        self.state.dt = dt
        cadence = max(1, round(OUTPUT_INTERVAL / dt))
        for ob in observers:
            ob.observe(self.state.t, self.state.u, self)
        for k in range(1, n + 1):
            self.step(dt)
            if k % cadence == 0 or k == n:
                self._monitor()
                for ob in observers:
                    ob.observe(self.state.t, self.state.u, self)
        return self.state


def run(model: Model, grid: GridSpec, u0, T: float, observers=(), **kw) -> SimulationState:
    """Integrate from ``u0`` on the box ``[-L, L]^dim`` of ``grid`` up to time ``T``."""
    if grid.dim != model.dim:
        raise ModelError("grid and model dimensions differ")
    kw.setdefault("dt", grid.dt)
    sim = Simulator(model, box_axes(grid), u0, **kw)
    return sim.integrate(T, observers)


def comparison_check(model: Model, grid: GridSpec, u0_low, u0_high, T: float, **kw) -> float:
    """Largest value of ``u_low - u_high`` over all steps (should be <= 1e-10)."""
    low, high = np.asarray(u0_low, dtype=float), np.asarray(u0_high, dtype=float)
    if (low > high).any():
        raise SimulationError("initial data are not ordered")
    kw.setdefault("dt", grid.dt)
    a = Simulator(model, box_axes(grid), low, **kw)
    b = Simulator(model, box_axes(grid), high, **kw)
    n, dt = a.schedule(T)
    a.state.dt = b.state.dt = dt
    worst = float((low - high).max())
    for _ in range(n):
        a.step(dt)
        b.step(dt)
        worst = max(worst, float((a.state.u - b.state.u).max()))
    return worst


# --------------------------------------------------------------------------- observers

class FieldRecorder:
    """Keeps full snapshots (every ``every``-th output)."""

    def __init__(self, every: int = 1):
        self.every = every
        self.times: list[float] = []
        self.fields: list[np.ndarray] = []
        self.axes = None
        self._count = 0
        self.ghost = None

    def observe(self, t, u, sim):
        if self.axes is None:
            self.axes = sim.axes
            self.ghost = sim.ghost
        if self._count % self.every == 0:
            self.times.append(float(t))
            self.fields.append(u.copy())
        self._count += 1

    def profile(self, e, s_min=None, s_max=None, ds=None):
        """Samples of every snapshot along the line ``s e`` through the origin."""
        return _line_samples(self.axes, self.fields, self.times, e, s_min, s_max, ds)


def _line_samples(axes, fields, times, e, s_min=None, s_max=None, ds=None):
    e = np.atleast_1d(np.asarray(e, dtype=float))
    e = e / np.linalg.norm(e)
    if len(axes) == 1:
        x = axes[0]
        s = x * e[0]
        order = np.argsort(s)
        s = s[order]
        keep = np.ones(len(s), bool)
        if s_min is not None:
            keep &= s >= s_min - 1e-12
        if s_max is not None:
            keep &= s <= s_max + 1e-12
        vals = np.array([f[order][keep] for f in fields])
        return s[keep], np.asarray(times), vals
    h = min(_spacings(axes))
    ds = ds or h / 2
    reach = _ray_reach(axes, e)
    lo = -_ray_reach(axes, -e) if s_min is None else s_min
    hi = reach if s_max is None else s_max
    s = np.arange(lo, hi + 1e-12, ds)
    coords = [(s * e[i] - ax[0]) / (ax[1] - ax[0]) for i, ax in enumerate(axes)]
    vals = np.array([map_coordinates(f, coords, order=1, mode="nearest") for f in fields])
    return s, np.asarray(times), vals


def _ray_reach(axes, e):
    """Largest ``s >= 0`` with ``s e`` inside the box."""
    r = math.inf
    for i, ax in enumerate(axes):
        if e[i] > 1e-14:
            r = min(r, ax[-1] / e[i])
        elif e[i] < -1e-14:
            r = min(r, ax[0] / e[i])
    return max(r, 0.0)


class RayRecorder:
    """Samples the field along fixed rays ``s e`` (bilinear interpolation in 2D).

    Cheap for large 2D runs where full snapshots would not fit in memory.
    """

    def __init__(self, directions, s_min: float = 0.0, s_max: float | None = None, ds=None):
        self.directions = [np.atleast_1d(np.asarray(d, dtype=float)) / np.linalg.norm(d)
                           for d in directions]
        self.s_min, self.s_max, self.ds = s_min, s_max, ds
        self.times: list[float] = []
        self.samples: list[list[np.ndarray]] = [[] for _ in self.directions]
        self.s: list[np.ndarray] = []
        self._coords = None

    def _setup(self, sim):
        axes = sim.axes
        h = min(_spacings(axes))
        ds = self.ds or (h if len(axes) == 1 else h / 2)
        self._coords = []
        for e in self.directions:
            hi = _ray_reach(axes, e) if self.s_max is None else self.s_max
            lo = self.s_min if self.s_min >= 0 else -_ray_reach(axes, -e)
            s = np.arange(lo, hi + 1e-12, ds)
            self.s.append(s)
            self._coords.append([(s * e[i] - ax[0]) / (ax[1] - ax[0]) for i, ax in enumerate(axes)])

    def observe(self, t, u, sim):
        if self._coords is None:
            self._setup(sim)
        self.times.append(float(t))
        for k, coords in enumerate(self._coords):
            self.samples[k].append(map_coordinates(u, coords, order=1, mode="nearest"))

    def profile(self, e, s_min=None, s_max=None, ds=None):
        e = np.atleast_1d(np.asarray(e, dtype=float))
        e = e / np.linalg.norm(e)
        for k, d in enumerate(self.directions):
            if d.shape == e.shape and np.allclose(d, e, atol=1e-9):
                return self.s[k], np.asarray(self.times), np.array(self.samples[k])
        raise SimulationError(f"direction {e.tolist()} was not recorded")


# --------------------------------------------------------------------------- fronts

@dataclass
class InterfaceTrack:
    e: np.ndarray
    eta: float
    times: np.ndarray
    positions: np.ndarray
    fit_speed: float
    fit_residual: float
    fit: str = "linear"
    log_coefficient: float | None = None


def _last_crossing(s, v, eta):
    """Largest ``s`` with ``v >= eta`` (linear interpolation); nan if empty or unbounded."""
    idx = np.nonzero(v >= eta)[0]
    if idx.size == 0:
        return math.nan
    j = int(idx[-1])
    if j == len(v) - 1:
        return math.nan
    return float(s[j] + (s[j + 1] - s[j]) * (v[j] - eta) / (v[j] - v[j + 1]))


def fit_positions(times, positions, fit: str = "linear", window: float = 0.5):
    """Least-squares speed over the last ``window`` fraction of the time span.

    ``fit="bramson"`` adds a ``log t`` regressor, absorbing the logarithmic
    delay of pulled fronts that otherwise biases the slope at moderate times.
    Returns ``(speed, rms residual, log coefficient or None)``.
    """
    t = np.asarray(times, dtype=float)
    x = np.asarray(positions, dtype=float)
    ok = np.isfinite(x)
    t, x = t[ok], x[ok]
    if t.size < 3:
        raise SimulationError("too few interface positions to fit a speed")
    start = t[0] + (t[-1] - t[0]) * (1.0 - window)
    sel = t >= start - 1e-12
    t, x = t[sel], x[sel]
    if fit == "linear":
        cols = [t, np.ones_like(t)]
    elif fit == "bramson":
        if (t <= 0).any():
            raise SimulationError("log fit needs positive times")
        cols = [t, np.log(t), np.ones_like(t)]
    else:
        raise SimulationError(f"unknown fit {fit!r}")
    mat = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(mat, x, rcond=None)
    resid = float(np.sqrt(np.mean((mat @ coef - x) ** 2)))
    return float(coef[0]), resid, (float(coef[1]) if fit == "bramson" else None)


def track_interface(recorder, e, eta: float = 0.5, fit: str = "linear", window: float = 0.5) -> InterfaceTrack:
    """Level-``eta`` interface position ``X(t)`` along the line through the origin in direction ``e``."""
    if not 0 < eta < 1:
        raise SimulationError("eta must lie in (0, 1)")
    s, times, vals = recorder.profile(e)
    pos = np.array([_last_crossing(s, v, eta) for v in vals])
    speed, resid, logc = fit_positions(times, pos, fit, window)
    e = np.atleast_1d(np.asarray(e, dtype=float))
    return InterfaceTrack(e / np.linalg.norm(e), eta, times, pos, speed, resid, fit, logc)


@dataclass
class RadiusCurve:
    eta: float
    xi: np.ndarray
    times: np.ndarray
    radii: np.ndarray

    @property
    def empty(self) -> bool:
        return self.radii.size == 0

    @property
    def terminal_speed(self) -> float | None:
        if self.empty or self.times[-1] <= 0:
            return None
        return float(self.radii[-1] / self.times[-1])


def directional_radius(recorder, xi, eta: float = 0.5) -> RadiusCurve:
    """``R(t) = sup{r >= 0 : u(t, r xi) >= eta}`` at each output time (times with empty sets dropped)."""
    s, times, vals = recorder.profile(xi)
    keep = s >= -1e-12
    s, vals = s[keep], vals[:, keep]
    radii = []
    out_t = []
    for t, v in zip(times, vals):
        idx = np.nonzero(v >= eta)[0]
        if idx.size == 0:
            continue
        j = int(idx[-1])
        r = float(s[j]) if j == len(v) - 1 else float(s[j] + (s[j + 1] - s[j]) * (v[j] - eta) / (v[j] - v[j + 1]))
        radii.append(r)
        out_t.append(t)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    return RadiusCurve(eta, xi / np.linalg.norm(xi), np.array(out_t), np.array(radii))


def smoothed_step(s):
    """1 for ``s <= 0``, 0 for ``s >= 1``, a cosine ramp in between."""
    s = np.asarray(s, dtype=float)
    return np.where(s <= 0, 1.0, np.where(s >= 1, 0.0, 0.5 * (1 + np.cos(np.pi * np.clip(s, 0, 1)))))


def bump_datum(axes, radius: float = 2.0, ramp: float = 1.0):
    """Radial plateau: 1 on ``|x| <= radius``, cosine ramp to 0 over ``ramp``."""
    mesh = np.meshgrid(*axes, indexing="ij")
    r = np.sqrt(sum(m ** 2 for m in mesh))
    return smoothed_step((r - radius) / ramp)


def _speed_bound(model: Model) -> float:
    a_max, q_max = _coefficient_bounds(model)
    return 2.0 * math.sqrt(a_max * model.reaction.lipschitz()) + q_max


def _axis_of(e):
    e = np.atleast_1d(np.asarray(e, dtype=float))
    e = e / np.linalg.norm(e)
    k = int(np.abs(e).argmax())
    if not math.isclose(abs(e[k]), 1.0, abs_tol=1e-12):
        raise SimulationError("front-like runs support coordinate directions only")
    return k, bool(e[k] < 0)


def front_like_track(model: Model, e, grid: GridSpec, T: float, eta: float = 0.5,
                     fit: str | None = None, margin: float = 25.0) -> InterfaceTrack:
    """Front-like run along ``e`` and its level-``eta`` interface track.

    The datum is 1 for ``x.e <= 0`` decaying to 0 over one period. Models that
    are independent of the transverse coordinate run as 1D problems; otherwise
    a strip one period wide with periodic transverse boundary is used. The box
    along ``e`` is sized from a speed bound so the front stays clear of the
    far boundary.
    """
    if fit is None:
        fit = "bramson" if model.reaction.is_kpp else "linear"
    h = grid.spacing
    if model.dim == 1:
        m1 = model if np.atleast_1d(e)[0] > 0 else model.axis_model(0, reverse=True)
        axis, strip = 0, None
    else:
        axis, rev = _axis_of(e)
        try:
            m1 = model.axis_model(axis, reverse=rev)
            strip = None
        except ModelError:
            m1, strip = model, rev
    length = _speed_bound(m1) * T + margin
    left = 20.0
    long_axis = -left + h * np.arange(int(math.ceil((length + left) / h)) + 1)
    if strip is None:
        u0 = smoothed_step(long_axis)
        sim = Simulator(m1, [long_axis], u0, ghost=((1.0, 0.0),), dt=grid.dt)
        rec = FieldRecorder()
        sim.integrate(T, [rec])
        return track_interface(rec, [1.0], eta, fit)
    # strip in model coordinates; the long axis runs along +-e_axis
    sgn = -1.0 if strip else 1.0
    long_coords = sgn * long_axis
    if strip:
        long_coords = long_coords[::-1]
    axes = [None, None]
    axes[axis] = long_coords
    axes[1 - axis] = strip_axis(h)
    mesh = np.meshgrid(*axes, indexing="ij")
    u0 = smoothed_step(sgn * mesh[axis])
    ghost = [(0.0, 0.0), (0.0, 0.0)]
    ghost[axis] = (0.0, 1.0) if strip else (1.0, 0.0)
    periodic = [False, False]
    periodic[1 - axis] = True
    sim = Simulator(m1, axes, u0, periodic=periodic, ghost=ghost, dt=grid.dt)
    rec = _StripRecorder(axis, sgn)
    sim.integrate(T, [rec])
    return track_interface(rec, [1.0], eta, fit)


class _StripRecorder:
    """Profile along the long axis at transverse coordinate 0, oriented along ``e``."""

    def __init__(self, axis, sgn):
        self.axis, self.sgn = axis, sgn
        self.times, self.rows = [], []

    def observe(self, t, u, sim):
        self.s = self.sgn * sim.axes[self.axis]
        self.times.append(float(t))
        self.rows.append(np.take(u, 0, axis=1 - self.axis).copy())

    def profile(self, e):
        order = np.argsort(self.s)
        return self.s[order], np.asarray(self.times), np.array([r[order] for r in self.rows])


def front_like_speed(model: Model, e, grid: GridSpec, T: float, **kw) -> float:
    """Measured front speed in direction ``e`` (fitted slope of the level-1/2 interface)."""
    return front_like_track(model, e, grid, T, **kw).fit_speed


# --------------------------------------------------------------------------- spreading sets

@dataclass
class SpreadingReport:
    min_inside: float
    max_outside: float
    eta_hi: float
    eta_lo: float
    eps: float
    n_inside: int
    n_outside: int
    box_contains_outer: bool

    @property
    def inside_ok(self) -> bool:
        return self.n_inside > 0 and self.min_inside >= self.eta_hi

    @property
    def outside_ok(self) -> bool:
        return self.max_outside <= self.eta_lo

    @property
    def passed(self) -> bool:
        return self.inside_ok and self.outside_ok


def verify_spreading_set(state: SimulationState, shape, eps: float = 0.15, eta_hi: float = 0.9,
                         eta_lo: float = 0.05, T: float | None = None,
                         require_box: bool = True) -> SpreadingReport:
    """Compare ``u(T, x T)`` with the shrunken and enlarged shapes ``(1 -+ eps) W``."""
    T = state.t if T is None else T
    if T <= 0:
        raise SimulationError("T must be positive")
    mesh = np.meshgrid(*state.axes, indexing="ij")
    x = [m / T for m in mesh]
    rho = np.sqrt(sum(c ** 2 for c in x))
    if state.dim == 1:
        w = np.where(x[0] >= 0, shape.radii[0], shape.radii[1])
    else:
        w = shape.radius_at(np.arctan2(x[1], x[0]))
    reach = min(min(abs(ax[0]), abs(ax[-1])) for ax in state.axes)
    contains = (1 + eps) * float(shape.radii.max()) * T <= reach
    if require_box and not contains:
        raise SimulationError(
            f"box half-width {reach:g} cannot contain (1+eps) W T (radius {(1 + eps) * shape.radii.max() * T:g})")
    inside = rho <= (1 - eps) * w
    outside = rho > (1 + eps) * w
    u = state.u
    lo = float(u[inside].min()) if inside.any() else math.nan
    hi = float(u[outside].max()) if outside.any() else -math.inf
    return SpreadingReport(lo, hi, eta_hi, eta_lo, eps, int(inside.sum()), int(outside.sum()), contains)


# --------------------------------------------------------------------------- time almost periodic

@dataclass
class ApSpeedReport:
    front_speed: float
    bump_speed: float | None
    invaded: bool
    outcome: str


def ap_average_speed(model: Model, T: float = 200.0, grid: GridSpec | None = None,
                     bump_radius: float = 10.0, window: float = 0.5) -> ApSpeedReport:
    """Average speeds of a front-like and of a compactly supported datum for ``f(t, u)``.

    The bump is a plateau of half-width ``bump_radius`` centred at the origin;
    its speed is the fitted slope of the level-1/2 radius along ``x > 0``. A bump
    that dies out is reported as "no invasion" and no bump speed is claimed.
    """
    if model.dim != 1:
        raise SimulationError("ap_average_speed works on 1D models")
    grid = grid or GridSpec(dim=1, spacing=0.1)
    front = front_like_track(model, [1.0], grid, T, fit="linear", margin=20.0)
    h = grid.spacing
    reach = bump_radius + _speed_bound(model) * T + 20.0
    x = h * np.arange(-int(math.ceil(reach / h)), int(math.ceil(reach / h)) + 1)
    u0 = smoothed_step(np.abs(x) - bump_radius)
    sim = Simulator(model, [x], u0, dt=grid.dt)
    rec = RayRecorder([[1.0]])
    sim.integrate(T, [rec])
    curve = directional_radius(rec, [1.0], 0.5)
    final = float(sim.state.u.max())
    invaded = (not curve.empty and curve.times[-1] == rec.times[-1]
               and float(sim.state.u[len(x) // 2]) >= 0.5 and curve.radii[-1] > bump_radius)
    if not invaded:
        outcome = f"no invasion (max u at T = {final:.3e})"
        return ApSpeedReport(front.fit_speed, None, False, outcome)
    speed, _, _ = fit_positions(curve.times, curve.radii, "linear", window)
    return ApSpeedReport(front.fit_speed, speed, True, "invasion")


# --------------------------------------------------------------------------- output

HEADER_SIZE = 64
MAGIC = b"WSF1"


def write_field(path, state: SimulationState, meta: dict | None = None) -> Path:
    """Flat little-endian float64 grid with a 64-byte header plus a ``.txt`` sidecar."""
    path = Path(path)
    u = np.ascontiguousarray(state.u, dtype="<f8")
    nx = u.shape[0]
    ny = u.shape[1] if u.ndim == 2 else 1
    head = MAGIC + struct.pack("<III", u.ndim, nx, ny) + struct.pack(
        "<ddd", state.spacing, float(state.axes[0][0]), float(state.t))
    head = head.ljust(HEADER_SIZE, b"\0")
    with path.open("wb") as fh:
        fh.write(head)
        fh.write(u.tobytes(order="C"))
    lines = [f"ndim = {u.ndim}", f"shape = {' '.join(map(str, u.shape))}",
             f"spacing = {state.spacing!r}", f"origin = {float(state.axes[0][0])!r}",
             f"time = {float(state.t)!r}", "dtype = float64 little-endian, C order",
             f"header_bytes = {HEADER_SIZE}"]
    for k, v in (meta or {}).items():
        lines.append(f"{k} = {v}")
    path.with_suffix(path.suffix + ".txt").write_text("\n".join(lines) + "\n")
    return path


def read_field(path):
    """Inverse of :func:`write_field`: returns ``(u, header dict)``."""
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise SimulationError(f"{path} is not a field dump")
    ndim, nx, ny = struct.unpack("<III", raw[4:16])
    spacing, x0, t = struct.unpack("<ddd", raw[16:40])
    shape = (nx,) if ndim == 1 else (nx, ny)
    u = np.frombuffer(raw[HEADER_SIZE:], dtype="<f8").reshape(shape).copy()
    return u, {"ndim": ndim, "spacing": spacing, "origin": x0, "time": t}


def write_track_csv(path, times, values, header=("time", "value")) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for t, v in zip(times, values):
            wr.writerow([f"{t:.10g}", f"{v:.12g}"])
    return path
