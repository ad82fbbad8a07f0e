"""Periodic principal eigenvalue of the tilted operator and the KPP critical speed.

For a frequency vector ``z`` the cell operator is

    L_z phi = div(A grad phi) - 2 z.A grad phi + q.grad phi
              + (z.Az - div(Az) - q.z + lin) phi

on 1-periodic functions, discretised with second-order central differences
(flux form with half-node averages for the diagonal diffusion terms). Its
principal eigenvalue ``k(z)`` gives the minimal pulsating front speed in
direction ``e`` through ``c*(e) = min_{lam > 0} k(lam e) / lam``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .model import GridSpec, ModelError, PeriodicCoefficients, central_diff

MAX_ITER = 50_000
RQ_TOL = 1e-12
RES_TOL = 1e-10
NEG_TOL = 1e-12
MAX_RETRIES = 3


class EigenError(RuntimeError):
    pass


@dataclass(frozen=True)
class CellOperator:
    matrix: sp.csr_matrix
    z: np.ndarray
    shape: tuple[int, ...]
    zeroth_order: np.ndarray

    @property
    def h(self) -> float:
        return 1.0 / self.shape[0]


@dataclass
class PrincipalEigenpair:
    z: np.ndarray
    k: float
    phi: np.ndarray
    residual: float
    iterations: int = 0


@dataclass
class CriticalSpeed:
    e: np.ndarray
    c_star: float
    lambda_star: float
    bracket: tuple[float, float]
    trace: list[tuple[float, float]] = field(default_factory=list)


def _neighbor(shape, axis, step):
    idx = np.arange(int(np.prod(shape))).reshape(shape)
    return np.roll(idx, -step, axis=axis).ravel()


def assemble_cell_operator(coeffs: PeriodicCoefficients, z, grid: GridSpec | None = None) -> CellOperator:
    """Sparse matrix of ``L_z`` on the periodic cell grid."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.shape != (coeffs.dim,):
        raise ModelError(f"z has shape {z.shape}, expected ({coeffs.dim},)")
    if grid is not None:
        if grid.dim != coeffs.dim:
            raise ModelError("grid and coefficient dimensions differ")
        coeffs = coeffs.resampled(grid.cells_per_period)
    for name in ("a", "qvec", "lin"):
        if not np.isfinite(getattr(coeffs, name)).all():
            raise ModelError(f"non-finite samples in {name}")

    dim, n, h = coeffs.dim, coeffs.n, coeffs.h
    shape = (n,) * dim
    size = n ** dim
    rows, cols, vals = [], [], []
    me = np.arange(size)

    def add(c, v):
        rows.append(me)
        cols.append(c)
        vals.append(np.broadcast_to(v, (size,)).ravel())

    a = coeffs.a
    for i in range(dim):
        aii = a[i, i]
        a_plus = 0.5 * (aii + np.roll(aii, -1, axis=i)).ravel()
        a_minus = 0.5 * (aii + np.roll(aii, 1, axis=i)).ravel()
        add(_neighbor(shape, i, 1), a_plus / h ** 2)
        add(_neighbor(shape, i, -1), a_minus / h ** 2)
        add(me, -(a_plus + a_minus) / h ** 2)
        for j in range(dim):
            if j == i:
                continue
            # d_i (a_ij d_j phi), both derivatives centred
            for si in (1, -1):
                aij = np.roll(a[i, j], -si, axis=i).ravel()
                base = _neighbor(shape, i, si)
                for sj in (1, -1):
                    nb = base.reshape(shape)
                    nb = np.roll(nb, -sj, axis=j).ravel()
                    add(nb, si * sj * aij / (4 * h * h))

    # b = A z (A symmetric, so z.A grad = b.grad)
    b = np.tensordot(z, a, axes=(0, 0)) if dim else a
    drift = -2.0 * b + coeffs.qvec
    for j in range(dim):
        add(_neighbor(shape, j, 1), drift[j].ravel() / (2 * h))
        add(_neighbor(shape, j, -1), -drift[j].ravel() / (2 * h))

    div_az = sum(central_diff(b[j], j, h) for j in range(dim))
    zaz = np.einsum("i,ij...,j->...", z, a, z)
    qz = np.tensordot(z, coeffs.qvec, axes=(0, 0))
    c0 = zaz - div_az - qz + coeffs.lin
    add(me, c0.ravel())

    m = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size)
    )
    m.sum_duplicates()
    return CellOperator(m, z, shape, c0)


def spec_tau(op) -> float:
    """The conservative resolvent step ``0.1 / (1 + max |diag|)``."""
    m = op.matrix if isinstance(op, CellOperator) else op
    return 0.1 / (1.0 + float(np.abs(m.diagonal()).max()))


def perron_shift(op) -> float:
    """A shift above the principal eigenvalue: max row sum plus one.

    When the off-diagonal entries are nonnegative, the Perron root is bounded by
    the largest row sum, so ``shift - L`` is a nonsingular M-matrix and its
    inverse is entrywise positive.
    """
    m = op.matrix if isinstance(op, CellOperator) else op
    return float(np.asarray(m.sum(axis=1)).max()) + 1.0


def principal_eigenvalue(op, *, tau: float | None = None, start=None, tol: float = RQ_TOL,
                         max_iter: int = MAX_ITER) -> PrincipalEigenpair:
    """Principal eigenpair by resolvent power iteration.

    Iterates ``v <- (I - tau L)^{-1} v`` with max-normalisation until successive
    eigenvalue estimates differ by less than ``tol * (1 + |k|)`` and the residual
    is below ``1e-10 * (1 + |k|)``. The default
    ``tau = 1 / perron_shift(op)`` keeps the resolvent positive while making the
    principal mode dominate by a wide margin; pass ``tau=spec_tau(op)`` for the
    small conservative step. Negative eigenvector entries trigger a retry with
    ``tau / 10`` (at most three times).
    """
    m = (op.matrix if isinstance(op, CellOperator) else sp.csr_matrix(op)).tocsc()
    size = m.shape[0]
    z = op.z if isinstance(op, CellOperator) else np.zeros(0)
    shape = op.shape if isinstance(op, CellOperator) else (size,)
    if tau is None:
        shift = perron_shift(m)
        tau = 1.0 / shift if shift > 0 else spec_tau(m)
    eye = sp.identity(size, format="csc")

    for attempt in range(MAX_RETRIES + 1):
        lu = spla.splu((eye - tau * m).tocsc())
        v = np.ones(size) if start is None else np.array(start, dtype=float).ravel()
        v /= np.abs(v).max()
        k_prev = math.nan
        for it in range(1, max_iter + 1):
            w = lu.solve(v)
            mu = float(v @ w) / float(v @ v)
            k = (1.0 - 1.0 / mu) / tau
            v = w / np.abs(w).max()
            if abs(k - k_prev) < tol * (1.0 + abs(k)):
                # the quotient can settle before the vector does (symmetric case)
                if np.abs(m @ v - k * v).max() <= RES_TOL * (1.0 + abs(k)):
                    break
            k_prev = k
        else:
            raise EigenError(f"power iteration did not converge in {max_iter} iterations")
        if v.max() < 0:
            v = -v
        v /= v.max()
        if v.min() >= -NEG_TOL:
            phi = v.reshape(shape)
            residual = float(np.abs(m @ v - k * v).max())
            return PrincipalEigenpair(z, k, phi, residual, it)
        tau /= 10.0
    raise EigenError(f"eigenfunction not positive (min {v.min():.3e}) after {MAX_RETRIES} retries")


def k_of(coeffs: PeriodicCoefficients, z, grid: GridSpec | None = None, **kw) -> float:
    return principal_eigenvalue(assemble_cell_operator(coeffs, z, grid), **kw).k


GOLD = (math.sqrt(5.0) - 1.0) / 2.0


def critical_speed(coeffs: PeriodicCoefficients, e, grid: GridSpec | None = None,
                   rtol: float = 1e-6) -> CriticalSpeed:
    """Minimise ``g(lam) = k(lam e) / lam`` over ``lam > 0``.

    The eigenvalue formula is only meaningful for KPP nonlinearities; callers
    are responsible for that check. The bracket starts at ``[1e-2, 1e2]`` and
    slides by halving/doubling until an interior probe beats both endpoints,
    then golden-section search on ``log lam`` runs to relative width ``rtol``.
    """
    e = np.atleast_1d(np.asarray(e, dtype=float))
    e = e / np.linalg.norm(e)
    trace: list[tuple[float, float]] = []
    cache: dict[float, float] = {}

    def g(lam):
        if lam not in cache:
            cache[lam] = k_of(coeffs, lam * e, grid) / lam
            trace.append((lam, cache[lam]))
        return cache[lam]

    lo, hi = 1e-2, 1e2
    mid = math.sqrt(lo * hi)
    while True:
        if lo < 1e-6 or hi > 1e6:
            raise EigenError(f"bracket expansion left [1e-6, 1e6] (lo={lo:g}, hi={hi:g}); "
                             "g is not coercive for this model")
        glo, gmid, ghi = g(lo), g(mid), g(hi)
        if glo > gmid < ghi:
            break
        if glo <= gmid:
            lo, mid, hi = lo / 2.0, lo, mid
        else:
            lo, mid, hi = mid, hi, hi * 2.0

    a, b = math.log(lo), math.log(hi)
    x1 = b - GOLD * (b - a)
    x2 = a + GOLD * (b - a)
    f1, f2 = g(math.exp(x1)), g(math.exp(x2))
    while b - a > rtol:
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLD * (b - a)
            f1 = g(math.exp(x1))
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLD * (b - a)
            f2 = g(math.exp(x2))
    lam_star, c_star = min(trace, key=lambda p: p[1])
    return CriticalSpeed(e, c_star, lam_star, (math.exp(a), math.exp(b)), trace)


def _speed_job(args):
    coeffs, angle, grid = args
    return critical_speed(coeffs, (math.cos(angle), math.sin(angle)), grid).c_star


def speed_table(coeffs: PeriodicCoefficients, n_angles: int = 256, grid: GridSpec | None = None,
                workers: int = 1):
    """Eigen-route speeds on ``n_angles`` equally spaced directions (2D) or ``+-1`` (1D)."""
    from .wulff import DirectionalSpeedTable

    if coeffs.dim == 1:
        speeds = [critical_speed(coeffs, [s], grid).c_star for s in (1.0, -1.0)]
        return DirectionalSpeedTable(1, np.array([0.0, math.pi]), np.array(speeds), "eigenvalue")
    angles = 2 * math.pi * np.arange(n_angles) / n_angles
    jobs = [(coeffs, float(t), grid) for t in angles]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            speeds = list(pool.map(_speed_job, jobs))
    else:
        speeds = [_speed_job(j) for j in jobs]
    return DirectionalSpeedTable(2, angles, np.array(speeds), "eigenvalue")
