"""Coefficient fields, reaction terms, grids and the built-in model catalog.

All coefficient fields live on the unit periodicity cell ``[0, 1)^dim`` and are
stored as samples on a uniform cell grid. Values at arbitrary points (needed by
the simulator, whose grid is not tied to the cell grid) are obtained by
trigonometric interpolation of those samples, which is exact for the
band-limited fields of the catalog.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

SQRT2 = math.sqrt(2.0)

DIV_TOL = 1e-8
SYM_TOL = 1e-12


class ModelError(ValueError):
    """Raised for malformed grids, coefficients or catalog requests."""


@dataclass(frozen=True)
class GridSpec:
    """Discretisation parameters shared by the cell problem and the simulator.

    Attributes:
        dim: spatial dimension, 1 or 2.
        cells_per_period: points per unit period on the cell grid (even, >= 8).
        domain_half_width: the simulation box is ``[-L, L]^dim``.
        spacing: simulation grid spacing.
        dt: explicit time step; ``None`` means derive it from the monotonicity
            condition (see :func:`wulffspread.pdesim.stable_time_step`).
    """

    dim: int = 1
    cells_per_period: int = 64
    domain_half_width: float = 20.0
    spacing: float = 0.05
    dt: float | None = None

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ModelError(f"dim must be 1 or 2, got {self.dim}")
        if self.cells_per_period < 8 or self.cells_per_period % 2:
            raise ModelError(
                f"cells_per_period must be even and >= 8, got {self.cells_per_period}"
            )
        if not self.spacing > 0:
            raise ModelError("spacing must be positive")
        if not self.domain_half_width > 0:
            raise ModelError("domain_half_width must be positive")
        if self.dt is not None and not self.dt > 0:
            raise ModelError("dt must be positive")

    @property
    def cell_spacing(self) -> float:
        return 1.0 / self.cells_per_period

    @property
    def points(self) -> int:
        """Number of simulation nodes per axis."""
        return int(round(2.0 * self.domain_half_width / self.spacing)) + 1

    def axis(self) -> np.ndarray:
        n = self.points
        return -self.domain_half_width + self.spacing * np.arange(n)


def cell_axis(n: int) -> np.ndarray:
    return np.arange(n) / n


def periodic_interp_matrix(n: int, x) -> np.ndarray:
    """Matrix ``M`` with ``f(x) = M @ samples`` for the trigonometric interpolant.

    ``samples`` are values of a 1-periodic function at ``j / n``; ``n`` is even
    and the Nyquist mode enters as a cosine so that real data stay real.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x[:, None] - cell_axis(n)[None, :]
    k = np.arange(n // 2 + 1)
    weights = np.full(k.shape, 2.0)
    weights[0] = 1.0
    weights[-1] = 1.0
    m = np.cos(2.0 * np.pi * d[:, :, None] * k[None, None, :]) @ weights
    m /= n
    # exact reproduction at the nodes (removes round-off from the cosine sum)
    hit = np.isclose(np.mod(d + 0.5, 1.0) - 0.5, 0.0, atol=1e-14)
    rows = hit.any(axis=1)
    m[rows] = hit[rows].astype(float)
    return m


def interpolate_field(samples: np.ndarray, axes) -> np.ndarray:
    """Evaluate a sampled periodic scalar field on the tensor grid ``axes``."""
    samples = np.asarray(samples, dtype=float)
    out = samples
    for ax, coords in enumerate(axes):
        m = periodic_interp_matrix(samples.shape[ax], coords)
        out = np.moveaxis(np.tensordot(m, np.moveaxis(out, ax, 0), axes=(1, 0)), 0, ax)
    return out


def central_diff(field_: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(field_, -1, axis=axis) - np.roll(field_, 1, axis=axis)) / (2.0 * h)


@dataclass(frozen=True)
class PeriodicCoefficients:
    """Diffusion ``a``, advection ``qvec`` and linearised reaction ``lin`` on the cell.

    Shapes: ``a`` is ``(dim, dim, n, ..., n)``, ``qvec`` is ``(dim, n, ..., n)``
    and ``lin`` is ``(n, ..., n)``.
    """

    dim: int
    a: np.ndarray
    qvec: np.ndarray
    lin: np.ndarray

    def __post_init__(self):
        for name in ("a", "qvec", "lin"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.lin.shape[0]
        cell = (n,) * self.dim
        if self.lin.shape != cell:
            raise ModelError(f"lin has shape {self.lin.shape}, expected {cell}")
        if self.a.shape != (self.dim, self.dim) + cell:
            raise ModelError(f"a has shape {self.a.shape}")
        if self.qvec.shape != (self.dim,) + cell:
            raise ModelError(f"qvec has shape {self.qvec.shape}")

    @property
    def n(self) -> int:
        return self.lin.shape[0]

    @property
    def h(self) -> float:
        return 1.0 / self.n

    def cell_points(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([cell_axis(self.n)] * self.dim), indexing="ij"))

    def sample_on(self, axes) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Coefficients interpolated onto the tensor grid spanned by ``axes``."""
        if len(axes) != self.dim:
            raise ModelError("axes do not match the coefficient dimension")
        a = np.empty((self.dim, self.dim) + tuple(len(c) for c in axes))
        for i in range(self.dim):
            for j in range(self.dim):
                a[i, j] = interpolate_field(self.a[i, j], axes)
        q = np.stack([interpolate_field(self.qvec[i], axes) for i in range(self.dim)])
        return a, q, interpolate_field(self.lin, axes)

    def resampled(self, n: int) -> "PeriodicCoefficients":
        """Same fields on a cell grid with ``n`` points per axis."""
        if n == self.n:
            return self
        axes = [cell_axis(n)] * self.dim
        a, q, lin = self.sample_on(axes)
        return PeriodicCoefficients(self.dim, a, q, lin)

    def with_lin(self, lin) -> "PeriodicCoefficients":
        return PeriodicCoefficients(self.dim, self.a, self.qvec, np.broadcast_to(lin, self.lin.shape))

    def is_independent_of(self, axis: int, tol: float = 1e-12) -> bool:
        fields = [self.lin, *self.qvec, *self.a.reshape((-1,) + self.lin.shape)]
        return all(np.ptp(f, axis=axis).max() <= tol for f in fields)


@dataclass
class ValidationReport:
    a_min: float
    a_max: float
    max_divergence: float
    mean_advection: np.ndarray
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def validate_coefficients(c: PeriodicCoefficients) -> ValidationReport:
    """Check symmetry, uniform ellipticity, and that ``qvec`` is divergence-free with zero mean."""
    failures = []
    a = np.moveaxis(c.a.reshape(c.dim, c.dim, -1), -1, 0)
    asym = np.abs(a - np.swapaxes(a, 1, 2)).max(axis=(1, 2))
    if asym.max() > SYM_TOL:
        k = int(asym.argmax())
        failures.append(
            f"a not symmetric: |a-a^T|={asym[k]:.3e} at {np.unravel_index(k, c.lin.shape)}"
        )
    eig = np.linalg.eigvalsh(0.5 * (a + np.swapaxes(a, 1, 2)))
    a_min, a_max = float(eig.min()), float(eig.max())
    if not a_min > 0:
        k = int(eig.min(axis=1).argmin())
        failures.append(
            f"a not uniformly elliptic: eigenvalue {a_min:.3e} at {np.unravel_index(k, c.lin.shape)}"
        )

    div = sum(central_diff(c.qvec[i], i, c.h) for i in range(c.dim))
    qmax = float(np.sqrt((c.qvec ** 2).sum(axis=0)).max()) if c.qvec.size else 0.0
    max_div = float(np.abs(div).max())
    if max_div > DIV_TOL * qmax:
        k = int(np.abs(div).argmax())
        failures.append(
            f"q not divergence-free: |div q|={max_div:.3e} at {np.unravel_index(k, c.lin.shape)}"
        )
    mean = c.qvec.reshape(c.dim, -1).mean(axis=1)
    if np.linalg.norm(mean) > DIV_TOL * max(1.0, qmax):
        failures.append(f"q has nonzero cell average {mean.tolist()}")
    for name in ("a", "qvec", "lin"):
        if not np.isfinite(getattr(c, name)).all():
            failures.append(f"{name} has non-finite samples")
    return ValidationReport(a_min, a_max, max_div, mean, failures)


# --------------------------------------------------------------------------- reactions

REACTION_KINDS = ("kpp", "monostable", "combustion", "bistable", "multistable", "ap_time")


def _poly_from_roots(roots, scale):
    # scale * prod (u - r_i) * (1 - u) with the last factor written as -(u - 1)
    return -scale * np.poly(list(roots) + [1.0])


@dataclass(frozen=True)
class ReactionTerm:
    """A nonlinearity ``f(x, t, u) = r(x) f0(u)`` or ``u(1-u)(u-theta(t))``.

    ``f0`` is extended by 0 for ``u`` outside ``[0, 1]``. ``modulation`` holds
    the cell samples of ``r`` (``None`` means ``r = 1``).
    """

    kind: str
    params: dict = field(default_factory=dict)
    modulation: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in REACTION_KINDS:
            raise ModelError(f"unknown reaction kind {self.kind!r}")
        p = self.params
        if self.kind == "combustion" and not 0 < p.get("theta", -1) < 1:
            raise ModelError("combustion needs theta in (0,1)")
        if self.kind == "bistable" and not 0 < p.get("theta", -1) < 0.5:
            raise ModelError("bistable needs theta in (0,1/2)")
        if self.kind == "multistable":
            zeros = list(p.get("zeros", ()))
            if zeros != sorted(zeros) or zeros[0] != 0.0 or zeros[-1] != 1.0:
                raise ModelError("multistable zeros must ascend from 0 to 1")
        if self.modulation is not None:
            m = np.array(self.modulation, dtype=float)
            m.setflags(write=False)
            object.__setattr__(self, "modulation", m)

    # -- autonomous profile f0 -------------------------------------------------
    def _coeffs(self):
        p = self.params
        if self.kind == "kpp":
            return p.get("rate", 1.0) * np.array([-1.0, 1.0, 0.0])
        if self.kind == "monostable":
            return p.get("rate", 1.0) * np.array([-1.0, 1.0, 0.0, 0.0])
        if self.kind == "bistable":
            return _poly_from_roots([0.0, p["theta"]], p.get("rate", 1.0))
        if self.kind == "multistable":
            return _poly_from_roots(p["zeros"][:-1], p.get("rate", 1.0))
        return None

    def _factored(self):
        """``(scale, roots)`` with ``f0 = scale * prod(u - root)``; exact at every root."""
        p = self.params
        rate = p.get("rate", 1.0)
        if self.kind == "kpp":
            return -rate, (0.0, 1.0)
        if self.kind == "monostable":
            return -rate, (0.0, 0.0, 1.0)
        if self.kind == "bistable":
            return -rate, (0.0, p["theta"], 1.0)
        if self.kind == "multistable":
            return -rate, tuple(p["zeros"])
        return None

    def theta_at(self, t: float) -> float:
        p = self.params
        amp = p.get("amp", 0.0)
        return p["theta_bar"] + amp * math.sin(t) + amp * math.sin(SQRT2 * t)

    def f0(self, u, t: float = 0.0):
        u = np.asarray(u, dtype=float)
        inside = (u >= 0.0) & (u <= 1.0)
        if self.kind == "combustion":
            th = self.params["theta"]
            v = self.params.get("rate", 2.0) * np.maximum(u - th, 0.0) * (1.0 - u)
        elif self.kind == "ap_time":
            v = u * (1.0 - u) * (u - self.theta_at(t))
        else:
            scale, roots = self._factored()
            v = np.full_like(u, scale)
            for z in roots:
                v = v * (u - z)
        return np.where(inside, v, 0.0)

    def df0(self, u, t: float = 0.0):
        u = np.asarray(u, dtype=float)
        if self.kind == "combustion":
            th = self.params["theta"]
            rate = self.params.get("rate", 2.0)
            v = np.where(u > th, rate * (1.0 + th - 2.0 * u), 0.0)
        elif self.kind == "ap_time":
            th = self.theta_at(t)
            v = -3.0 * u ** 2 + 2.0 * (1.0 + th) * u - th
        else:
            v = np.polyval(np.polyder(self._coeffs()), u)
        return v

    def eval(self, u, r=None, t: float = 0.0):
        """Reaction rate; ``r`` is the modulation already sampled at the points of ``u``."""
        v = self.f0(u, t)
        return v if r is None else r * v

    def deriv_u(self, u, r=None, t: float = 0.0):
        v = self.df0(u, t)
        return v if r is None else r * v

    def modulation_on(self, axes) -> np.ndarray | None:
        if self.modulation is None:
            return None
        return interpolate_field(self.modulation, axes)

    def lipschitz(self) -> float:
        """Upper bound of ``|d f / d u|`` over ``[0, 1]`` (and over time for ``ap_time``)."""
        u = np.linspace(0.0, 1.0, 4001)
        if self.kind == "ap_time":
            amp = abs(self.params.get("amp", 0.0))
            ths = self.params["theta_bar"] + np.linspace(-2 * amp, 2 * amp, 41)
            lip = max(float(np.abs(-3 * u ** 2 + 2 * (1 + th) * u - th).max()) for th in ths)
        else:
            lip = float(np.abs(self.df0(u)).max())
            if self.kind == "combustion":
                lip = max(lip, self.params.get("rate", 2.0) * (1.0 - self.params["theta"]))
        rmax = 1.0 if self.modulation is None else float(np.abs(self.modulation).max())
        return lip * rmax * (1.0 + 1e-12)

    @property
    def autonomous(self) -> bool:
        return self.kind != "ap_time"

    @property
    def is_kpp(self) -> bool:
        return self.kind == "kpp"

    def scalar(self) -> Callable[[float], float]:
        """The autonomous profile ``f0`` as a plain float function (for ODE work)."""
        if not self.autonomous:
            raise ModelError("time-dependent reaction has no autonomous profile")
        fac = self._factored()
        if fac is not None:
            scale, roots = fac

            def f(u):
                if not 0.0 <= u <= 1.0:
                    return 0.0
                v = scale
                for z in roots:
                    v *= u - z
                return v
        else:
            def f(u):
                return float(self.f0(u))
        return f


# --------------------------------------------------------------------------- catalog


@dataclass(frozen=True)
class Model:
    name: str
    coeffs: PeriodicCoefficients
    reaction: ReactionTerm
    expected: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.coeffs.dim

    def axis_model(self, axis: int, reverse: bool = False) -> "Model":
        """The 1D model seen along a coordinate axis.

        Only valid when every field is independent of the other coordinates;
        ``reverse`` reflects ``x -> -x`` (front moving in the negative direction).
        """
        c = self.coeffs
        if self.dim == 1:
            a, q, lin = c.a[0, 0], c.qvec[0], c.lin
            mod = self.reaction.modulation
        else:
            other = 1 - axis
            if not c.is_independent_of(other) or (
                self.reaction.modulation is not None
                and np.ptp(self.reaction.modulation, axis=other).max() > 1e-12
            ):
                raise ModelError(f"model {self.name} is not reducible along axis {axis}")
            take = (slice(None), 0) if axis == 0 else (0, slice(None))
            a, q, lin = c.a[axis, axis][take], c.qvec[axis][take], c.lin[take]
            mod = None if self.reaction.modulation is None else self.reaction.modulation[take]
        if reverse:
            idx = (-np.arange(c.n)) % c.n
            a, q, lin = a[idx], -q[idx], lin[idx]
            mod = None if mod is None else mod[idx]
        coeffs = PeriodicCoefficients(1, a[None, None], q[None], lin)
        reaction = ReactionTerm(self.reaction.kind, dict(self.reaction.params), mod)
        return Model(f"{self.name}[axis{axis}{'-' if reverse else '+'}]", coeffs, reaction, {})


def constant_coefficients(dim: int, n: int, a=1.0, q=None, lin=1.0) -> PeriodicCoefficients:
    cell = (n,) * dim
    amat = np.zeros((dim, dim) + cell)
    a = np.atleast_2d(a) if np.ndim(a) == 2 else a * np.eye(dim)
    for i in range(dim):
        for j in range(dim):
            amat[i, j] = a[i, j]
    qv = np.zeros((dim,) + cell)
    if q is not None:
        for i in range(dim):
            qv[i] = q[i]
    return PeriodicCoefficients(dim, amat, qv, np.full(cell, float(lin)))


# Reference values. Tags: TRIVIAL (closed form), DERIVED (independent oracle run,
# see tests/oracles.py), PAPER (taken from the source text).
QUINTIC_ZEROS = (0.0, 0.1, 0.45, 0.72, 1.0)
QUINTIC_RATE = 10.0

CATALOG = (
    "homogeneous_kpp",
    "sinusoidal_kpp",
    "cubic_bistable",
    "combustion",
    "quintic_multistable",
    "ap_time_bistable",
)


def builtin_model(name: str, *, dim: int | None = None, cells: int | None = None, **overrides: Any) -> Model:
    """Build a catalog model.

    ``overrides`` accepts ``theta`` (bistable / combustion), ``theta_bar`` and
    ``amp`` (time-almost-periodic bistable), ``amplitude`` (sinusoidal_kpp).
    """
    if name not in CATALOG:
        raise ModelError(f"unknown model {name!r}; choose from {', '.join(CATALOG)}")
    default_dim = 2 if name == "sinusoidal_kpp" else 1
    dim = default_dim if dim is None else int(dim)
    n = cells or (64 if dim == 1 else 48)
    unknown = set(overrides) - {"theta", "theta_bar", "amp", "amplitude"}
    if unknown:
        raise ModelError(f"unknown override(s) {sorted(unknown)} for {name}")

    if name == "homogeneous_kpp":
        coeffs = constant_coefficients(dim, n, lin=1.0)
        reaction = ReactionTerm("kpp")
        expected = {"c_star": (2.0, "TRIVIAL"), "lambda_star": (1.0, "TRIVIAL")}
    elif name == "sinusoidal_kpp":
        amp = float(overrides.get("amplitude", 0.5))
        x1 = cell_axis(n)
        r1 = 1.0 + amp * np.sin(2 * np.pi * x1)
        r = r1 if dim == 1 else np.broadcast_to(r1[:, None], (n, n)).copy()
        coeffs = constant_coefficients(dim, n, lin=0.0).with_lin(r)
        reaction = ReactionTerm("kpp", {"rate": 1.0}, r)
        # frozen outputs of tests/oracles.py on the 64-point cell grid
        expected = {
            "k0": (1.0031686087, "DERIVED"),
            "k0_continuum": (1.0031660648, "DERIVED"),
            "c_star_e1": (2.0028746781, "DERIVED"),
            "c_star_e2": (2.0031661027, "DERIVED"),
        } if amp == 0.5 else {}
    elif name == "cubic_bistable":
        theta = float(overrides.get("theta", 0.3))
        coeffs = constant_coefficients(dim, n, lin=-theta)
        reaction = ReactionTerm("bistable", {"theta": theta})
        expected = {"c_star": ((1 - 2 * theta) / SQRT2, "TRIVIAL")}
    elif name == "combustion":
        theta = float(overrides.get("theta", 0.3))
        coeffs = constant_coefficients(dim, n, lin=0.0)
        reaction = ReactionTerm("combustion", {"theta": theta, "rate": 2.0})
        # phase-plane oracle in tests/oracles.py
        expected = {"c_star": (0.7005592655, "DERIVED")} if theta == 0.3 else {}
    elif name == "quintic_multistable":
        coeffs = constant_coefficients(dim, n, lin=-QUINTIC_RATE * 0.1 * 0.45 * 0.72)
        reaction = ReactionTerm("multistable", {"zeros": QUINTIC_ZEROS, "rate": QUINTIC_RATE})
        expected = {"theta_1": (QUINTIC_ZEROS[2], "TRIVIAL"),
                    "c_1": (0.2982125626, "DERIVED"), "c_2": (0.1502983329, "DERIVED")}
    else:  # ap_time_bistable
        theta_bar = float(overrides.get("theta_bar", 0.25))
        amp = float(overrides.get("amp", 0.05))
        coeffs = constant_coefficients(dim, n, lin=-theta_bar)
        reaction = ReactionTerm("ap_time", {"theta_bar": theta_bar, "amp": amp})
        # the cubic profile 1/(1+exp(x/sqrt2)) moves with X' = (1-2 theta(t))/sqrt2
        expected = {"c_star": ((1 - 2 * theta_bar) / SQRT2, "TRIVIAL")}
    return Model(name, coeffs, reaction, expected)
