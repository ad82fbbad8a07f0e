"""Brute-force reference computations used to freeze expected values.

Run ``python tests/oracles.py`` to regenerate the numbers quoted in the tests.
Nothing here goes through the production solvers' iterative paths: eigenvalues
come from dense LAPACK decompositions or a Fourier (Hill) truncation, and the
speed minimum from an exhaustive parameter scan.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp

from wulffspread.eigensolver import assemble_cell_operator
from wulffspread.model import builtin_model


def dense_k(coeffs, z) -> float:
    m = assemble_cell_operator(coeffs, z).matrix.toarray()
    return float(np.linalg.eigvals(m).real.max())


def sinusoidal_1d(n, amplitude=0.5):
    return builtin_model("sinusoidal_kpp", dim=1, cells=n, amplitude=amplitude).coeffs


def k0_richardson(amplitude=0.5):
    ks = [dense_k(sinusoidal_1d(n, amplitude), [0.0]) for n in (64, 128, 256)]
    r1 = (4 * ks[1] - ks[0]) / 3
    r2 = (4 * ks[2] - ks[1]) / 3
    return ks, r1, r2


def k0_hill(amplitude=0.5, modes=40, lam=0.0):
    """Continuum k(lam e1) for phi'' - 2 lam phi' + (lam^2 + 1 + a sin 2 pi x) phi, Fourier basis."""
    ks = np.arange(-modes, modes + 1)
    size = len(ks)
    h = np.zeros((size, size), dtype=complex)
    for i, k in enumerate(ks):
        h[i, i] = -(2 * np.pi * k) ** 2 - 2 * lam * (2j * np.pi * k) + lam ** 2 + 1.0
        # a sin(2 pi x) = a/(2i) (e^{2 pi i x} - e^{-2 pi i x})
        if i + 1 < size:
            h[i + 1, i] += amplitude / 2j
        if i - 1 >= 0:
            h[i - 1, i] -= amplitude / 2j
    return float(np.linalg.eigvals(h).real.max())


def lambda_scan(coeffs, e, n_lam=10_000, lo=1e-2, hi=1e2):
    """Tabulate g(lam) = k(lam e)/lam densely, then refine with a local quadratic fit."""
    lams = np.geomspace(lo, hi, n_lam)
    e = np.asarray(e, dtype=float)
    g = np.array([dense_k(coeffs, lam * e) / lam for lam in lams])
    i = int(g.argmin())
    x = np.log(lams[i - 2:i + 3])
    p = np.polyfit(x - x[2], g[i - 2:i + 3], 2)
    xs = -p[1] / (2 * p[0])
    return float(np.polyval(p, xs)), float(math.exp(x[2] + xs)), float(g[i])


def ellipse_bruteforce(xi_angles, n_dirs=1_000_000, a=2.0, b=1.0, chunk=40):
    """w(xi) = min_e h(e)/(e.xi) for h(e) = sqrt(a^2 e1^2 + b^2 e2^2), over n_dirs directions."""
    th = 2 * np.pi * np.arange(n_dirs) / n_dirs
    c, s = np.cos(th), np.sin(th)
    h = np.sqrt((a * c) ** 2 + (b * s) ** 2)
    out = np.empty(len(xi_angles))
    for k0 in range(0, len(xi_angles), chunk):
        phi = np.asarray(xi_angles[k0:k0 + chunk])[:, None]
        dots = np.cos(phi) * c + np.sin(phi) * s
        ratio = np.where(dots > 1e-9, h / np.where(dots > 1e-9, dots, 1.0), np.inf)
        out[k0:k0 + chunk] = ratio.min(axis=1)
    return out


def ap_front_speed_oracle(theta_bar=0.25, amp=0.05, T=2000.0, h=0.025, half=30.0):
    """Average front speed for u_t = u_xx + u(1-u)(u-theta(t)) by method of lines + BDF.

    The window is re-centred on the front every unit of time so a long horizon
    fits in a small box; the accumulated shift gives the absolute position.
    """
    x = np.arange(-half, half + h / 2, h)
    n = len(x)
    u = 0.5 * (1 - np.tanh(x / (2 * math.sqrt(2))))

    def theta(t):
        return theta_bar + amp * math.sin(t) + amp * math.sin(math.sqrt(2) * t)

    def rhs(t, v):
        w = np.empty(n + 2)
        w[1:-1] = v
        w[0], w[-1] = 1.0, 0.0
        return (w[2:] - 2 * v + w[:-2]) / h ** 2 + v * (1 - v) * (v - theta(t))

    import scipy.sparse as sp

    sparsity = sp.diags([1, 1, 1], [-1, 0, 1], shape=(n, n))
    offset = 0.0
    times, pos = [], []
    t = 0.0
    while t < T - 1e-9:
        sol = solve_ivp(rhs, (t, t + 1.0), u, method="BDF", jac_sparsity=sparsity,
                        rtol=1e-8, atol=1e-10)
        u = sol.y[:, -1]
        t += 1.0
        j = int(np.nonzero(u >= 0.5)[0].max())
        xf = x[j] + h * (u[j] - 0.5) / (u[j] - u[j + 1])
        times.append(t)
        pos.append(offset + xf)
        shift = int(round(xf / h))
        if shift > 0:
            u = np.concatenate([u[shift:], np.zeros(shift)])
            offset += shift * h
    times, pos = np.array(times), np.array(pos)
    tail = times >= T / 2
    return float(np.polyfit(times[tail], pos[tail], 1)[0])


def combustion_oracle(theta=0.3, rate=2.0, rtol=1e-12):
    """Combustion speed from the phase-plane ODE in the state variable.

    With ``p = phi'`` as a function of ``u = phi``, ``dp/du = -c - f(u)/p``. The
    connection leaves ``u = 1`` along the unstable eigendirection and must meet
    the exact tail ``p = -c u`` of the flat region at ``u = theta``.
    """
    from scipy.optimize import brentq

    f = lambda u: rate * max(0.0, u - theta) * (1 - u)
    fp1 = -rate * (1 - theta)

    def mismatch(c):
        mu = (-c + math.sqrt(c * c - 4 * fp1)) / 2
        d = 1e-7
        sol = solve_ivp(lambda u, p: [-c - f(u) / p[0]], (1 - d, theta), [-mu * d],
                        method="DOP853", rtol=rtol, atol=1e-14)
        return sol.y[0, -1] + c * theta

    return brentq(mismatch, 0.05, 3.0, xtol=1e-14, rtol=1e-14)


def bistable_piece_oracle(f, fprime, lo, hi, bracket, d=1e-6, rtol=1e-12):
    """Speed of the decreasing connection ``hi -> lo`` (both levels stable).

    Integrates ``dp/du = -c - f(u)/p`` from the unstable direction at ``hi``
    down to ``lo + d`` and matches the stable direction at ``lo``.
    """
    from scipy.optimize import brentq

    def mismatch(c):
        mu = (-c + math.sqrt(c * c - 4 * fprime(hi))) / 2
        nu = (c + math.sqrt(c * c - 4 * fprime(lo))) / 2
        sol = solve_ivp(lambda u, p: [-c - f(u) / p[0]], (hi - d, lo + d), [-mu * d],
                        method="DOP853", rtol=rtol, atol=1e-15)
        return sol.y[0, -1] + nu * d

    return brentq(mismatch, *bracket, xtol=1e-13, rtol=1e-13)


def quintic_oracle():
    from wulffspread.model import QUINTIC_RATE, QUINTIC_ZEROS

    roots = np.array(QUINTIC_ZEROS)
    f = lambda u: -QUINTIC_RATE * float(np.prod(u - roots))
    fp = lambda u: (f(u + 1e-7) - f(u - 1e-7)) / 2e-7
    c1 = bistable_piece_oracle(f, fp, 0.0, 0.45, (0.05, 1.0))
    c2 = bistable_piece_oracle(f, fp, 0.45, 1.0, (0.02, 1.0))
    return c1, c2


if __name__ == "__main__":
    ks, r1, r2 = k0_richardson()
    print("dense k0 at 64/128/256:", ks)
    print("Richardson k0:", r1, r2)
    print("Hill k0 (continuum):", k0_hill())
    c1 = lambda_scan(sinusoidal_1d(64), [1.0])
    print("lambda-scan c*(e1), grid 64:", c1)
    print("1D reduction c*(e2) = 2 sqrt(k0), grid 64:", 2 * math.sqrt(ks[0]))
    print("ap front speed (theta_bar=.25, amp=.05):", ap_front_speed_oracle())
    print("combustion c (theta 0.3, rate 2):", repr(combustion_oracle()))
    print("quintic tier speeds c1, c2:", quintic_oracle())
