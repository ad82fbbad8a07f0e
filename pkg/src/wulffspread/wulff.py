"""Freidlin-Gärtner radial function and the Wulff shape of a speed table.

Given directional speeds ``c*(e)`` the radial function is

    w(xi) = min_{e . xi > 0} c*(e) / (e . xi)

and the Wulff shape is the star-shaped set ``{r xi : 0 <= r <= w(xi)}``. The
set is not convexified.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * math.pi
DOT_EPS = 1e-9
ANGLE_TOL = 1e-4
GOLD = (math.sqrt(5.0) - 1.0) / 2.0
SOURCES = ("eigenvalue", "wave_bvp", "measured_front")
INTERPOLATION_NOTE = "c* linearly interpolated in angle between table nodes during refinement"


class WulffError(ValueError):
    pass


@dataclass(frozen=True)
class DirectionalSpeedTable:
    """Speeds ``c*(e)`` on a set of directions.

    In 2D ``angles`` are ascending angles in ``[0, 2 pi)``. In 1D the two
    directions ``+1`` and ``-1`` are stored as angles ``0`` and ``pi``.
    """

    dim: int
    angles: np.ndarray
    speeds: np.ndarray
    source: str = "eigenvalue"

    def __post_init__(self):
        ang = np.asarray(self.angles, dtype=float)
        spd = np.asarray(self.speeds, dtype=float)
        object.__setattr__(self, "angles", ang)
        object.__setattr__(self, "speeds", spd)
        if self.source not in SOURCES:
            raise WulffError(f"unknown source tag {self.source!r}")
        if ang.shape != spd.shape or ang.ndim != 1:
            raise WulffError("angles and speeds must be 1D arrays of equal length")
        if not np.isfinite(spd).all() or (spd <= 0).any():
            raise WulffError("all table speeds must be finite and positive")
        if self.dim == 1:
            if not np.allclose(ang, [0.0, math.pi]):
                raise WulffError("1D tables hold the directions +1 (angle 0) and -1 (angle pi)")
            return
        if self.dim != 2:
            raise WulffError("only dim 1 and 2 are supported")
        if len(ang) < 3 or (np.diff(ang) <= 0).any() or ang[0] < 0 or ang[-1] >= TWO_PI:
            raise WulffError("angles must be strictly increasing in [0, 2 pi)")
        gaps = np.diff(np.concatenate([ang, [ang[0] + TWO_PI]]))
        if gaps.max() > TWO_PI / 64 + 1e-12:
            raise WulffError(f"angular gap {gaps.max():.4f} exceeds 2 pi / 64")

    @classmethod
    def from_function(cls, fn, n_angles: int = 256, source: str = "eigenvalue"):
        angles = TWO_PI * np.arange(n_angles) / n_angles
        return cls(2, angles, np.array([fn(float(t)) for t in angles]), source)

    def directions(self) -> np.ndarray:
        if self.dim == 1:
            return np.array([[1.0], [-1.0]])
        return np.column_stack([np.cos(self.angles), np.sin(self.angles)])

    def scaled(self, s: float) -> "DirectionalSpeedTable":
        return DirectionalSpeedTable(self.dim, self.angles, self.speeds * s, self.source)

    def with_speed(self, index: int, value: float) -> "DirectionalSpeedTable":
        spd = self.speeds.copy()
        spd[index] = value
        return DirectionalSpeedTable(self.dim, self.angles, spd, self.source)

    def interp(self, angle):
        """Periodic linear interpolation of the speed in angle (2D only)."""
        ang = np.concatenate([self.angles, [self.angles[0] + TWO_PI]])
        spd = np.concatenate([self.speeds, [self.speeds[0]]])
        a = np.mod(np.asarray(angle, dtype=float) - self.angles[0], TWO_PI) + self.angles[0]
        return np.interp(a, ang, spd)

    def axis_max(self) -> float:
        """Largest speed over the coordinate directions ``+-e_i``."""
        if self.dim == 1:
            return float(self.speeds.max())
        return float(self.interp(np.array([0.0, 0.5, 1.0, 1.5]) * math.pi).max())


@dataclass
class WulffShape:
    dim: int
    xi_angles: np.ndarray
    radii: np.ndarray
    minimizers: np.ndarray
    vertices: np.ndarray
    meta: dict = field(default_factory=dict)

    def radius_at(self, angle):
        """Radial function between samples, linearly interpolated (2D)."""
        if self.dim == 1:
            a = np.asarray(angle, dtype=float)
            return np.where(np.cos(a) >= 0, self.radii[0], self.radii[1])
        ang = np.concatenate([self.xi_angles, [self.xi_angles[0] + TWO_PI]])
        rad = np.concatenate([self.radii, [self.radii[0]]])
        a = np.mod(np.asarray(angle, dtype=float) - self.xi_angles[0], TWO_PI) + self.xi_angles[0]
        return np.interp(a, ang, rad)

    def radius_toward(self, x) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.dim == 1:
            return float(self.radii[0] if x[0] >= 0 else self.radii[1])
        return float(self.radius_at(math.atan2(x[1], x[0])))

    @property
    def interval(self) -> tuple[float, float]:
        if self.dim != 1:
            raise WulffError("interval is only defined for 1D shapes")
        return (-float(self.radii[1]), float(self.radii[0]))


def _unit(xi, dim):
    if dim == 1:
        v = float(np.atleast_1d(xi)[0])
        if v == 0:
            raise WulffError("zero direction")
        return np.array([math.copysign(1.0, v)])
    if np.ndim(xi) == 0:
        return np.array([math.cos(float(xi)), math.sin(float(xi))])
    v = np.asarray(xi, dtype=float)
    nrm = np.linalg.norm(v)
    if v.shape != (2,) or nrm == 0:
        raise WulffError(f"direction {xi!r} is not a nonzero 2-vector")
    return v / nrm


def _golden(fn, a, b, tol):
    x1, x2 = b - GOLD * (b - a), a + GOLD * (b - a)
    f1, f2 = fn(x1), fn(x2)
    while b - a > tol:
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLD * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLD * (b - a)
            f2 = fn(x2)
    return (x1, f1) if f1 < f2 else (x2, f2)


def spreading_speed(table: DirectionalSpeedTable, xi) -> tuple[float, np.ndarray]:
    """``w(xi)`` and the minimising direction ``e``.

    The discrete minimum over the table is refined by golden-section search on
    the angle of ``e`` within the two neighbouring table cells, with ``c*``
    linearly interpolated, to angular tolerance ``1e-4``. The smaller of the
    refined and discrete values is returned.
    """
    u = _unit(xi, table.dim)
    dirs = table.directions()
    dots = dirs @ u
    ok = dots > DOT_EPS
    if not ok.any():
        raise WulffError("no table direction has positive projection on xi (corrupted table)")
    ratios = np.full(len(dots), np.inf)
    ratios[ok] = table.speeds[ok] / dots[ok]
    j = int(ratios.argmin())
    w_disc, e_disc = float(ratios[j]), dirs[j]
    if table.dim == 1:
        return w_disc, e_disc

    phi = math.atan2(u[1], u[0])
    m = len(table.angles)
    lo = table.angles[j] - (table.angles[j] - table.angles[j - 1]) % TWO_PI
    hi = table.angles[j] + (table.angles[(j + 1) % m] - table.angles[j]) % TWO_PI

    def g(t):
        d = math.cos(t - phi)
        return float(table.interp(t)) / d if d > DOT_EPS else math.inf

    t_best, w_ref = _golden(g, lo, hi, ANGLE_TOL)
    if w_ref < w_disc:
        return w_ref, np.array([math.cos(t_best), math.sin(t_best)])
    return w_disc, e_disc


def _chunk(args):
    table, angles = args
    return [spreading_speed(table, float(t)) for t in angles]


def build_wulff(table: DirectionalSpeedTable, n_xi: int = 720, workers: int = 1) -> WulffShape:
    """Sample ``w`` on ``n_xi`` equally spaced directions and build the polygon.

    The vertex list runs counter-clockwise and is implicitly closed. A 1D table
    yields the interval ``[-w(-1), w(+1)]``.
    """
    meta = {"n_xi": n_xi, "interpolation": INTERPOLATION_NOTE, "source": table.source,
            "n_table": len(table.speeds)}
    if table.dim == 1:
        wp, ep = spreading_speed(table, 1.0)
        wm, em = spreading_speed(table, -1.0)
        return WulffShape(1, np.array([0.0, math.pi]), np.array([wp, wm]),
                          np.array([ep, em]), np.array([[wp], [-wm]]), meta)
    angles = TWO_PI * np.arange(n_xi) / n_xi
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        parts = np.array_split(angles, workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            res = [r for part in pool.map(_chunk, [(table, p) for p in parts]) for r in part]
    else:
        res = _chunk((table, angles))
    radii = np.array([r[0] for r in res])
    mins = np.array([r[1] for r in res])
    verts = radii[:, None] * np.column_stack([np.cos(angles), np.sin(angles)])
    return WulffShape(2, angles, radii, mins, verts, meta)


@dataclass
class NormalPropertyReport:
    max_violation: float
    worst_xi: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance


def _speed_along(table, e):
    if table.dim == 1:
        return float(table.speeds[0] if e[0] > 0 else table.speeds[1])
    return float(table.interp(math.atan2(e[1], e[0])))


def check_normal_property(shape: WulffShape, table: DirectionalSpeedTable,
                          tol: float = 1e-6) -> NormalPropertyReport:
    """Supporting half-plane check ``w(xi') (xi' . e_xi) <= c*(e_xi)``.

    ``e_xi`` is the minimiser recorded for each sampled ``xi``; the violation is
    reported relative to ``c*(e_xi)`` and compared with ``tol``.
    """
    if shape.dim == 1:
        pts = shape.vertices[:, 0]
        worst, where = 0.0, 0.0
        for k, e in enumerate(shape.minimizers):
            c = _speed_along(table, e)
            v = max(0.0, float((pts * e[0]).max() - c) / c)
            if v > worst:
                worst, where = v, float(shape.xi_angles[k])
        return NormalPropertyReport(worst, where, tol)
    c = np.array([_speed_along(table, e) for e in shape.minimizers])
    proj = shape.minimizers @ shape.vertices.T
    viol = (proj.max(axis=1) - c) / c
    k = int(viol.argmax())
    return NormalPropertyReport(max(0.0, float(viol[k])), float(shape.xi_angles[k]), tol)


def point_classification(shape: WulffShape, x, margin: float) -> str:
    """``inside``, ``outside`` or ``boundary-band`` by radial comparison."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    r = float(np.linalg.norm(x))
    if r == 0.0:
        return "inside"
    rad = shape.radius_toward(x)
    if r < (1 - margin) * rad:
        return "inside"
    if r > (1 + margin) * rad:
        return "outside"
    return "boundary-band"


@dataclass
class LipschitzWitness:
    observed: float
    constant: float
    max_excess: float

    @property
    def passed(self) -> bool:
        return self.max_excess <= 1e-6


def lipschitz_constant(table: DirectionalSpeedTable, form: str = "proof") -> float:
    """Continuity modulus of ``w`` from the positivity/upper-bound argument.

    ``proof`` gives ``2 (cbar sqrt(N) + 1)^3 / (inf c)^2``, with ``cbar`` the
    largest axis-direction speed. ``ratio`` gives the variant
    ``2 (cbar sqrt(N) + 1)^2 max c / (inf c)^2``.
    """
    cbar = table.axis_max() * math.sqrt(table.dim) + 1.0
    lo = float(table.speeds.min())
    if form == "proof":
        return 2.0 * cbar ** 3 / lo ** 2
    if form == "ratio":
        return 2.0 * cbar ** 2 * float(table.speeds.max()) / lo ** 2
    raise WulffError(f"unknown constant form {form!r}")


def lipschitz_witness(shape: WulffShape, table: DirectionalSpeedTable,
                      form: str = "proof") -> LipschitzWitness:
    """Check ``|w(xi) - w(xi')| <= C |xi - xi'| + 1e-6`` on adjacent samples."""
    const = lipschitz_constant(table, form)
    if shape.dim == 1:
        return LipschitzWitness(0.0, const, 0.0)
    dirs = np.column_stack([np.cos(shape.xi_angles), np.sin(shape.xi_angles)])
    dw = np.abs(shape.radii - np.roll(shape.radii, -1))
    dx = np.linalg.norm(dirs - np.roll(dirs, -1, axis=0), axis=1)
    excess = float((dw - const * dx).max())
    return LipschitzWitness(float((dw / dx).max()), const, max(0.0, excess))


def write_polygon_csv(shape: WulffShape, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["angle", "radius", "x", "y"])
        for t, r, v in zip(shape.xi_angles, shape.radii, shape.vertices):
            y = v[1] if shape.dim == 2 else 0.0
            wr.writerow([f"{t:.12g}", f"{r:.12g}", f"{v[0]:.12g}", f"{y:.12g}"])
    return path


def write_polygon_svg(shape: WulffShape, path, size: int = 400) -> Path:
    """Minimal SVG with the closed polygon (y axis flipped so it reads counter-clockwise)."""
    path = Path(path)
    verts = shape.vertices if shape.dim == 2 else np.column_stack(
        [shape.vertices[:, 0], np.zeros(len(shape.vertices))])
    extent = float(np.abs(verts).max()) * 1.1 or 1.0
    scale = size / (2 * extent)
    pts = [(size / 2 + x * scale, size / 2 - y * scale) for x, y in verts]
    d = "M " + " L ".join(f"{x:.3f} {y:.3f}" for x, y in pts) + " Z"
    path.write_text(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">\n'
        f'  <path d="{d}" fill="none" stroke="black" stroke-width="1"/>\n'
        f'  <circle cx="{size / 2}" cy="{size / 2}" r="2" fill="red"/>\n'
        "</svg>\n"
    )
    return path
