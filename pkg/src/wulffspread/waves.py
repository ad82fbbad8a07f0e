"""One-dimensional travelling waves and the stationary bump subsolution.

Travelling profiles solve ``phi'' + c phi' + f(phi) = 0`` and connect an upper
zero ``hi`` of ``f`` (as ``x -> -inf``) to a lower zero ``lo`` (``x -> +inf``).
They are found by shooting from ``hi`` along its unstable direction and
bisecting on ``c`` between overshoot (``phi`` drops below ``lo``) and
undershoot (``phi'`` returns to zero above ``lo``).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

LAUNCH = 1e-8
LEVEL_TOL = 1e-6
SLOPE_TOL = 1e-9
C_TOL = 1e-8
C_MAX = 1e3
SPAN = 2000.0
RTOL = 1e-10
ATOL = 1e-12
SAMPLE_DX = 0.005

Reaction = Callable[[float], float]


class WaveError(RuntimeError):
    pass


# --------------------------------------------------------------------------- zeros of f

@dataclass
class StabilityReport:
    """Zeros of ``f`` on ``[0, 1]`` and their classification.

    ``kinds`` maps each isolated zero to ``stable``, ``unstable`` or
    ``degenerate``; ``flats`` lists intervals where ``f`` vanishes identically;
    ``S`` maps every zero that is stable from below to the largest ``S`` with
    ``f > 0`` on ``(S, theta)``.
    """

    zeros: list
    kinds: dict
    S: dict
    flats: list = field(default_factory=list)
    degenerate: list = field(default_factory=list)

    def stable_levels(self) -> list:
        return [z for z in self.zeros if self.kinds[z] == "stable"]


def _derivative(f, x, eps=1e-5, side=0):
    """Second-order difference quotient (one-sided when ``side`` is +-1)."""
    if side:
        h = side * eps
        return (-3.0 * f(x) + 4.0 * f(x + h) - f(x + 2 * h)) / (2 * h)
    return (f(x + eps) - f(x - eps)) / (2 * eps)


def stability_intervals(f: Reaction, n_scan: int = 10_000, tol: float = 1e-10,
                        zero_tol: float = 1e-13) -> StabilityReport:
    """Locate and classify the zeros of ``f`` on ``[0, 1]``.

    A ``n_scan``-point scan finds exact zeros and sign changes; each sign
    change is refined by bracketing root search to ``tol``.
    """
    xs = np.linspace(0.0, 1.0, n_scan + 1)
    vals = np.array([f(float(x)) for x in xs])
    sgn = np.where(np.abs(vals) <= zero_tol, 0, np.sign(vals)).astype(int)

    zeros, flats = [], []
    i = 0
    while i <= n_scan:
        if sgn[i] == 0:
            j = i
            while j + 1 <= n_scan and sgn[j + 1] == 0:
                j += 1
            if j > i:
                flats.append((float(xs[i]), float(xs[j])))
            else:
                zeros.append(float(xs[i]))
            i = j + 1
            continue
        if i < n_scan and sgn[i + 1] != 0 and sgn[i + 1] != sgn[i]:
            zeros.append(float(brentq(f, xs[i], xs[i + 1], xtol=tol, rtol=4 * np.finfo(float).eps)))
        i += 1

    def sign_near(x, side):
        for d in (1e-6, 1e-5, 1e-4):
            y = x + side * d
            if 0.0 <= y <= 1.0:
                v = f(y)
                if v != 0:
                    return int(np.sign(v))
        return 0

    kinds, degenerate = {}, []
    for z in zeros:
        below = sign_near(z, -1) if z > 0 else None
        above = sign_near(z, +1) if z < 1 else None
        if below is None:
            kinds[z] = "stable" if above < 0 else "unstable"
        elif above is None:
            kinds[z] = "stable" if below > 0 else "unstable"
        elif below > 0 and above < 0:
            kinds[z] = "stable"
        elif below < 0 and above > 0:
            kinds[z] = "unstable"
        else:
            kinds[z] = "degenerate"
            degenerate.append(z)
    for a, b in flats:
        kinds[(a, b)] = "flat"

    # boundaries of sign regions, in increasing order
    marks = sorted(zeros + [b for _, b in flats])
    S = {}
    for z in zeros:
        if z > 0 and sign_near(z, -1) > 0:
            S[z] = max([m for m in marks if m < z], default=0.0)
    return StabilityReport(sorted(zeros), kinds, S, flats, degenerate)


# --------------------------------------------------------------------------- shooting

@dataclass
class Shot:
    outcome: str  # "over", "under" or "connect"
    c: float
    turn_level: float | None = None
    limit: float | None = None
    sol: object = None


class _Shooter:
    """Trajectories of ``(phi, psi)`` from ``hi - 1e-8`` for trial speeds ``c``."""

    def __init__(self, f: Reaction, lo: float, hi: float, flat_top: float | None = None,
                 rtol: float = RTOL, atol: float = ATOL, span: float = SPAN,
                 strict_cross: bool = False):
        self.f, self.lo, self.hi = f, lo, hi
        # strict_cross: overshoot means crossing lo itself with slope below -1e-9
        self.strict_cross = strict_cross
        self.flat_top = flat_top
        self.rtol, self.atol, self.span = rtol, atol, span
        self.dfhi = _derivative(f, hi, side=-1)
        if self.dfhi >= 0:
            raise WaveError(f"upper level {hi} is not stable from below (f'={self.dfhi:g})")

    def launch(self, c):
        mu = 0.5 * (-c + math.sqrt(c * c - 4.0 * self.dfhi))
        return np.array([self.hi - LAUNCH, -mu * LAUNCH])

    def shoot(self, c: float, dense: bool = False, stop_at: float | None = None) -> Shot:
        f, lo = self.f, self.lo

        def rhs(x, y):
            return [y[1], -c * y[1] - f(y[0])]

        over_level = lo if self.strict_cross else lo - LEVEL_TOL

        def over(x, y):
            return y[0] - over_level
        over.terminal, over.direction = True, -1

        def turn(x, y):
            return y[1]
        turn.terminal, turn.direction = True, 1

        events = [over, turn]
        if self.flat_top is not None and stop_at is None:
            def flat(x, y):
                return y[0] - self.flat_top
            flat.terminal, flat.direction = True, -1
            events.append(flat)
        if stop_at is not None:
            def stop(x, y):
                return y[0] - stop_at
            stop.terminal, stop.direction = True, -1
            events.append(stop)

        sol = solve_ivp(rhs, (0.0, self.span), self.launch(c), method="RK45", rtol=self.rtol,
                        atol=self.atol, events=events, dense_output=dense)
        if sol.status == -1:
            raise WaveError(f"integration failed at c={c:g}: {sol.message}")
        if stop_at is not None and sol.t_events[-1].size:
            return Shot("stop", c, sol=sol)
        if sol.t_events[0].size:
            if self.strict_cross and sol.y_events[0][0][1] > -SLOPE_TOL:
                return Shot("connect", c, turn_level=lo, sol=sol)
            return Shot("over", c, sol=sol)
        if sol.t_events[1].size:
            level = float(sol.y_events[1][0][0])
            if level > lo + LEVEL_TOL:
                return Shot("under", c, turn_level=level, sol=sol)
            return Shot("connect", c, turn_level=level, sol=sol)
        if self.flat_top is not None and stop_at is None and sol.t_events[2].size:
            phi, psi = sol.y_events[2][0]
            limit = phi + psi / c if c > 0 else -math.inf
            outcome = "over" if limit < lo else ("under" if limit > lo else "connect")
            return Shot(outcome, c, turn_level=limit, limit=limit, sol=sol)
        # no event: the trajectory settled on a rest point (a node at an
        # unstable zero of f counts as undershoot)
        end = float(sol.y[0, -1])
        if end > lo + LEVEL_TOL:
            return Shot("under", c, turn_level=end, sol=sol)
        return Shot("connect", c, turn_level=end, sol=sol)


@dataclass
class Connection:
    c: float
    bracket: tuple
    upper_shot: Shot
    stall_level: float | None = None


def shoot_speed(f: Reaction, lo: float, hi: float, *, flat_top: float | None = None,
                stall_candidates=(), c_tol: float = C_TOL, rtol: float = RTOL,
                atol: float = ATOL) -> Connection:
    """Bisection on ``c`` between overshoot and undershoot.

    When the undershooting trajectory at the converged speed turns back next to
    one of ``stall_candidates`` (intermediate stable zeros) rather than next to
    ``lo``, the connection is reported as stalled at that level.
    """
    sh = _Shooter(f, lo, hi, flat_top, rtol, atol)
    c_lo = 1e-3 if flat_top is not None else -1.0
    s_lo = sh.shoot(c_lo)
    while s_lo.outcome != "over":
        if s_lo.outcome == "connect":
            return Connection(c_lo, (c_lo, c_lo), s_lo)
        c_lo = c_lo / 2.0 if flat_top is not None else 2.0 * c_lo
        if abs(c_lo) > C_MAX or abs(c_lo) < 1e-12:
            raise WaveError("lower speed bracket could not be found")
        s_lo = sh.shoot(c_lo)
    c_hi = 1.0
    s_hi = sh.shoot(c_hi)
    while s_hi.outcome != "under":
        if s_hi.outcome == "connect":
            return Connection(c_hi, (c_hi, c_hi), s_hi)
        c_lo, s_lo = c_hi, s_hi
        c_hi *= 2.0
        if c_hi > C_MAX:
            raise WaveError(f"upper speed bracket exceeded {C_MAX:g}")
        s_hi = sh.shoot(c_hi)
    while c_hi - c_lo > c_tol:
        mid = 0.5 * (c_lo + c_hi)
        s = sh.shoot(mid)
        if s.outcome == "over":
            c_lo, s_lo = mid, s
        elif s.outcome == "under":
            c_hi, s_hi = mid, s
        else:
            return Connection(mid, (mid, mid), s)
    stall = None
    if stall_candidates and s_hi.turn_level is not None:
        cands = [z for z in stall_candidates if lo < z < hi]
        dist = {z: abs(s_hi.turn_level - z) for z in cands}
        if cands and min(dist.values()) < abs(s_hi.turn_level - lo):
            stall = min(dist, key=dist.get)
    return Connection(0.5 * (c_lo + c_hi), (c_lo, c_hi), s_hi, stall)


# --------------------------------------------------------------------------- profiles

@dataclass
class WaveProfile:
    theta_hi: float
    theta_lo: float
    c: float
    x: np.ndarray
    phi: np.ndarray
    slope: np.ndarray
    kind: str = "bistable"
    glue_jump: float = 0.0
    pieces: list = field(default_factory=list)

    def residual(self, f: Reaction) -> float:
        """Max of ``|phi'' + c phi' + f(phi)|`` with ``phi''`` from centred differences of ``phi'``.

        Differences are taken within each integration piece (never across the
        glue point).
        """
        worst = 0.0
        for a, b in self.pieces or [(0, len(self.x))]:
            x, s, p = self.x[a:b], self.slope[a:b], self.phi[a:b]
            if len(x) < 3:
                continue
            d2 = (s[2:] - s[:-2]) / (x[2:] - x[:-2])
            r = d2 + self.c * s[1:-1] + np.array([self.f_eval(f, v) for v in p[1:-1]])
            worst = max(worst, float(np.abs(r).max()))
        return worst

    @staticmethod
    def f_eval(f, v):
        return f(float(v))

    def spline(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.x, self.phi, self.slope)

    def position_of(self, level: float) -> float:
        if not min(self.phi[0], self.phi[-1]) < level < max(self.phi[0], self.phi[-1]):
            raise WaveError(f"level {level} outside the profile range")
        sp = self.spline()
        j = int(np.searchsorted(-self.phi, -level))
        return float(brentq(lambda x: sp(x) - level, self.x[max(j - 1, 0)], self.x[min(j, len(self.x) - 1)]))

    def translated(self, level: float) -> "WaveProfile":
        """Shift so that ``phi(0) = level``."""
        x0 = self.position_of(level)
        return WaveProfile(self.theta_hi, self.theta_lo, self.c, self.x - x0, self.phi, self.slope,
                           self.kind, self.glue_jump, list(self.pieces))

    def slope_at(self, x0: float) -> float:
        return float(self.spline().derivative()(x0))

    def write_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["x", "phi", "dphi"])
            for row in zip(self.x, self.phi, self.slope):
                wr.writerow([f"{v:.12g}" for v in row])
        return path


def _sample(sol, x_end, x_start=0.0, dx=SAMPLE_DX):
    n = max(3, int(math.ceil(abs(x_end - x_start) / dx)) + 1)
    xs = np.linspace(x_start, x_end, n)
    y = sol.sol(xs)
    return xs, y[0], y[1]


def _assemble(f, lo, hi, c, kind, flat_top=None, rtol=RTOL, atol=ATOL) -> WaveProfile:
    """Forward piece from ``hi`` down to a mid level, then the tail to ``lo``."""
    sh = _Shooter(f, lo, hi, flat_top, rtol, atol)
    if kind == "monostable":
        mid = lo + 1e-7
    elif kind == "combustion":
        mid = flat_top
    else:
        mid = 0.5 * (lo + hi)
    s = sh.shoot(c, dense=True, stop_at=mid)
    if s.outcome != "stop":
        raise WaveError(f"profile integration at c={c:g} did not reach level {mid:g} ({s.outcome})")
    x_mid = float(s.sol.t_events[-1][0])
    xa, pa, sa = _sample(s.sol, x_mid)
    psi_mid = float(s.sol.y_events[-1][0][1])

    if kind == "monostable":
        return WaveProfile(hi, lo, c, xa, pa, sa, kind, 0.0, [(0, len(xa))])
    if kind == "combustion":
        # f = 0 below the ignition level: phi = lo - (psi/c) e^{-c (x - x_mid)} + const
        span = math.log(max(abs(psi_mid) / c, 1e-300) / 1e-9) / c
        xb = np.linspace(x_mid, x_mid + max(span, 1.0), max(3, int(span / SAMPLE_DX) + 1))
        decay = np.exp(-c * (xb - x_mid))
        pb = mid + (psi_mid / c) * (1.0 - decay)
        sb = psi_mid * decay
        x = np.concatenate([xa, xb[1:]])
        return WaveProfile(hi, lo, c, x, np.concatenate([pa, pb[1:]]), np.concatenate([sa, sb[1:]]),
                           kind, abs(pb[-1] - lo), [(0, len(xa)), (len(xa), len(x))])

    dflo = _derivative(f, lo, side=1)
    disc = c * c - 4.0 * dflo
    if dflo >= 0 or disc < 0:
        raise WaveError(f"lower level {lo} is not a saddle for c={c:g}")
    mu = 0.5 * (-c - math.sqrt(disc))

    def rhs(x, y):
        return [y[1], -c * y[1] - f(y[0])]

    def reach(x, y):
        return y[0] - mid
    reach.terminal = True

    back = solve_ivp(rhs, (0.0, -SPAN), [lo + LAUNCH, mu * LAUNCH], method="RK45", rtol=rtol, atol=atol,
                     events=[reach], dense_output=True)
    if not back.t_events[0].size:
        raise WaveError("backward tail did not reach the glue level")
    xb0 = float(back.t_events[0][0])
    psi_b = float(back.y_events[0][0][1])
    xb, pb, sb = _sample(back, 0.0, xb0)
    xb = xb - xb0 + x_mid
    x = np.concatenate([xa, xb[1:]])
    return WaveProfile(hi, lo, c, x, np.concatenate([pa, pb[1:]]), np.concatenate([sa, sb[1:]]),
                       kind, abs(psi_b - psi_mid), [(0, len(xa)), (len(xa) - 1, len(x))])


def _sign_pattern(f, lo, hi, n=2000):
    xs = np.linspace(lo, hi, n + 1)[1:-1]
    return np.array([f(float(x)) for x in xs]), xs


def bistable_wave(f: Reaction, theta_lo: float, theta_hi: float, **kw) -> WaveProfile:
    """Unique-speed connection for ``f`` bistable on ``(theta_lo, theta_hi)``."""
    vals, xs = _sign_pattern(f, theta_lo, theta_hi)
    s = np.sign(vals)
    changes = np.nonzero(np.diff(s[s != 0]))[0]
    nz = s[s != 0]
    if len(changes) != 1 or nz[0] >= 0 or nz[-1] <= 0:
        raise WaveError("f is not bistable (-/+) on the interval")
    con = shoot_speed(f, theta_lo, theta_hi, **kw)
    return _assemble(f, theta_lo, theta_hi, con.c, "bistable",
                     rtol=kw.get("rtol", RTOL), atol=kw.get("atol", ATOL))


def combustion_wave(f: Reaction, theta_ignition: float, theta_lo: float = 0.0,
                    theta_hi: float = 1.0, **kw) -> WaveProfile:
    """Unique positive-speed connection for an ignition-type ``f``."""
    probe = np.linspace(theta_lo, theta_ignition, 201)
    if any(f(float(u)) != 0.0 for u in probe):
        raise WaveError("f must vanish on [theta_lo, theta_ignition]")
    vals, _ = _sign_pattern(f, theta_ignition, theta_hi)
    if (vals <= 0).any():
        raise WaveError("f must be positive on (theta_ignition, theta_hi)")
    con = shoot_speed(f, theta_lo, theta_hi, flat_top=theta_ignition, **kw)
    if con.c <= 0:
        raise WaveError("combustion speed is not positive")
    return _assemble(f, theta_lo, theta_hi, con.c, "combustion", flat_top=theta_ignition,
                     rtol=kw.get("rtol", RTOL), atol=kw.get("atol", ATOL))


def monostable_min_speed(f: Reaction, theta_lo: float = 0.0, theta_hi: float = 1.0,
                         c_tol: float = C_TOL, rtol: float = RTOL, atol: float = ATOL) -> float:
    """Smallest ``c`` whose trajectory from ``theta_hi`` stays above ``theta_lo``."""
    vals, _ = _sign_pattern(f, theta_lo, theta_hi)
    if (vals <= 0).any():
        raise WaveError("f must be positive on (theta_lo, theta_hi)")
    sh = _Shooter(f, theta_lo, theta_hi, None, rtol, atol, strict_cross=True)
    c0 = 2.0 * math.sqrt(max(0.0, _derivative(f, theta_lo, side=1)))
    if sh.shoot(c0).outcome != "over":
        return c0
    lo, hi = c0, max(2.0 * c0, 1.0)
    while sh.shoot(hi).outcome == "over":
        lo, hi = hi, 2.0 * hi
        if hi > C_MAX:
            raise WaveError("no monotone connection below the speed cap")
    while hi - lo > c_tol:
        mid = 0.5 * (lo + hi)
        if sh.shoot(mid).outcome == "over":
            lo = mid
        else:
            hi = mid
    return hi


def monostable_wave(f: Reaction, theta_lo: float = 0.0, theta_hi: float = 1.0, **kw) -> WaveProfile:
    c = monostable_min_speed(f, theta_lo, theta_hi, **kw)
    return _assemble(f, theta_lo, theta_hi, c, "monostable")


# --------------------------------------------------------------------------- phase plane

@dataclass
class PhasePlaneReport:
    phi0: float
    slope0: float
    x1: float | None
    sup_left: float
    x2: float | None
    inf_right: float
    right_turn: float | None
    lemma_right: bool | None = None
    lemma_left: bool | None = None
    inconclusive: bool = False
    left_sol: object = None
    right_sol: object = None


def antiderivative(f: Reaction):
    def F(u):
        return quad(f, 0.0, u, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    return F


def phase_plane_bump(f: Reaction, phi0: float, slope0: float, wave: WaveProfile | None = None,
                     span: float = 1e3, rtol: float = 1e-11, atol: float = 1e-13) -> PhasePlaneReport:
    """Integrate ``q'' + f(q) = 0`` both ways from ``q(0) = phi0``, ``q'(0) = slope0 < 0``.

    Right of 0: first local minimum (``right_turn``) or first zero ``x2``.
    Left of 0: first stationary point ``x1`` (a local maximum). ``f`` is
    extended by 0 outside ``[0, 1]``, so a trajectory leaving the interval
    runs off linearly; that is reported as ``inf_right = -inf`` or
    ``sup_left = +inf``.
    """
    if not slope0 < 0:
        raise WaveError("slope0 must be negative")

    def fe(u):
        return f(u) if 0.0 <= u <= 1.0 else 0.0

    def rhs(x, y):
        return [y[1], -fe(y[0])]

    def stat(x, y):
        return y[1]
    stat.terminal = True

    def zero(x, y):
        return y[0]
    zero.terminal, zero.direction = True, -1

    def top(x, y):
        return y[0] - 1.0
    top.terminal, top.direction = True, 1

    y0 = [phi0, slope0]
    right = solve_ivp(rhs, (0.0, span), y0, method="RK45", rtol=rtol, atol=atol,
                      events=[stat, zero], dense_output=True)
    left = solve_ivp(rhs, (0.0, -span), y0, method="RK45", rtol=rtol, atol=atol,
                     events=[stat, top], dense_output=True)
    inconclusive = False
    x2 = right_turn = None
    if right.t_events[1].size:
        x2 = float(right.t_events[1][0])
        inf_right = -math.inf
    elif right.t_events[0].size:
        right_turn = float(right.t_events[0][0])
        inf_right = float(right.y_events[0][0][0])
    else:
        inf_right = float(right.y[0].min())
        inconclusive = True
    if left.t_events[0].size:
        x1 = float(left.t_events[0][0])
        sup_left = float(left.y_events[0][0][0])
    elif left.t_events[1].size:
        x1, sup_left = None, math.inf
    else:
        x1, sup_left = None, float(left.y[0].max())
        inconclusive = True
    rep = PhasePlaneReport(phi0, slope0, x1, sup_left, x2, inf_right, right_turn,
                           inconclusive=inconclusive, left_sol=left, right_sol=right)
    if wave is not None:
        w = wave.translated(phi0)
        s_wave = w.slope_at(0.0)
        if slope0 <= s_wave:
            rep.lemma_right = inf_right < wave.theta_lo
        if s_wave <= slope0 < 0:
            rep.lemma_left = sup_left < wave.theta_hi
    return rep


# --------------------------------------------------------------------------- bump subsolution

@dataclass
class BumpProfile:
    x: np.ndarray
    profile: np.ndarray
    support: tuple
    target_level: float
    x1: float
    x2: float
    descent: list = field(default_factory=list)

    @property
    def peak(self) -> float:
        return float(self.profile.max())

    def evaluate(self, x) -> np.ndarray:
        """Continuous bump (even about ``x1``) at the points ``x``, zero off the support."""
        x = np.asarray(x, dtype=float)
        return np.interp(x, self.x, self.profile, left=0.0, right=0.0)

    def on_grid(self, f: Reaction, h: float, centre_index: int, n: int) -> np.ndarray:
        """Discrete bump on ``n`` nodes of spacing ``h``, peak at ``centre_index``.

        Built from the discrete stationary recurrence
        ``q[i+1] = 2 q[i] - q[i-1] - h^2 f(q[i])`` started at the peak value and
        cut at its first nonpositive value, so it is an exact subsolution of the
        semi-discrete equation with the standard 3-point Laplacian.
        """
        q = [self.peak]
        prev = self.peak - 0.5 * h * h * f(self.peak)
        q.append(prev)
        while True:
            nxt = 2.0 * q[-1] - q[-2] - h * h * f(q[-1])
            if nxt <= 0.0 or len(q) > n:
                break
            q.append(nxt)
        half = np.array(q)
        out = np.zeros(n)
        for k, v in enumerate(half):
            for j in (centre_index - k, centre_index + k):
                if 0 <= j < n:
                    out[j] = v
        if centre_index - len(half) < 0 or centre_index + len(half) >= n:
            raise WaveError("box too small for the discrete bump")
        return out


def build_bump_subsolution(f: Reaction, m: int, terrace, dx: float = SAMPLE_DX) -> BumpProfile:
    """Compactly supported subsolution below ``theta_m`` following the wave-comparison construction.

    The wave entering level ``theta_m`` from below (connecting ``theta_m`` to
    the next lower raw terrace level) is translated so that ``phi(0)`` is the
    midpoint of ``(S_m, theta_m)``; the stationary trajectory with the same
    value and slope is then cut at its first zero ``x2`` and reflected about
    its stationary point ``x1``.
    """
    theta_m = terrace.levels[m]
    rep = stability_intervals(f)
    S = rep.S.get(_nearest(rep.S, theta_m))
    if S is None or abs(_nearest(rep.S, theta_m) - theta_m) > 1e-6:
        raise WaveError(f"level {theta_m} has no interval (S, theta) with f > 0 below it")
    raw_levels = terrace.pre_merge_levels
    j = int(np.argmin(np.abs(np.asarray(raw_levels) - theta_m)))
    if j == 0:
        raise WaveError("level index must be at least 1")
    wave = terrace.pre_merge_waves[j - 1]
    low = max(S, wave.theta_lo)
    level = 0.5 * (low + theta_m)
    w = wave.translated(level)
    slope = w.slope_at(0.0)
    pp = phase_plane_bump(f, level, slope, wave)
    if pp.x1 is None:
        raise WaveError("no stationary point to the left: cut-off construction failed")
    if pp.x2 is None:
        raise WaveError(f"trajectory does not vanish to the right (turns at {pp.inf_right:.4g})")
    descent = [z for z in raw_levels[:j - 1][::-1] if z > 0]
    if len(descent) > len(raw_levels):
        raise WaveError("descent across intermediate levels exceeded the number of terrace levels")
    x1, x2 = pp.x1, pp.x2
    n = max(3, int(math.ceil((x2 - x1) / dx)) + 1)
    xr = np.linspace(x1, x2, n)
    qr = np.concatenate([pp.left_sol.sol(xr[xr <= 0])[0], pp.right_sol.sol(xr[xr > 0])[0]])
    qr[-1] = 0.0
    xl = 2 * x1 - xr[::-1][:-1]
    ql = qr[::-1][:-1]
    x = np.concatenate([xl, xr])
    prof = np.maximum(np.concatenate([ql, qr]), 0.0)
    return BumpProfile(x, prof, (2 * x1 - x2, x2), theta_m, x1, x2, descent)


def _nearest(d, v):
    return min(d, key=lambda z: abs(z - v)) if d else math.nan


@dataclass
class BumpValidation:
    min_increment: float
    centre_value: float
    target: float
    passed: bool


def validate_bump(model, bump: BumpProfile, grid, T: float, tol: float = 0.01) -> BumpValidation:
    """Evolve the discrete bump; check it is nondecreasing in time and nears its target at the centre."""
    from .pdesim import Simulator

    f = model.reaction.scalar()
    x = grid.axis()
    n = len(x)
    centre = int(np.argmin(np.abs(x)))
    u0 = bump.on_grid(f, grid.spacing, centre, n)
    sim = Simulator(model, [x], u0, dt=grid.dt)
    steps, dt = sim.schedule(T)
    sim.state.dt = dt
    worst = math.inf
    prev = sim.state.u.copy()
    for _ in range(steps):
        sim.step(dt)
        worst = min(worst, float((sim.state.u - prev).min()))
        prev = sim.state.u.copy()
    centre_value = float(sim.state.u[centre])
    ok = worst >= -1e-10 and centre_value >= bump.target_level - tol
    return BumpValidation(worst, centre_value, bump.target_level, ok)
