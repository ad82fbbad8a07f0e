"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL`` line with the measured
values, the tolerance and the runtime against its budget.
"""

import dataclasses
import math
import time
import warnings

import numpy as np
import pytest

from wulffspread.eigensolver import critical_speed, k_of, speed_table
from wulffspread.model import CATALOG, GridSpec, ReactionTerm, builtin_model, constant_coefficients
from wulffspread.pdesim import (
    BoundaryContaminationWarning,
    Simulator,
    ap_average_speed,
    bump_datum,
    comparison_check,
    front_like_speed,
    smoothed_step,
    verify_spreading_set,
)
from wulffspread.terrace import compute_terrace, remove_equal_speeds, terrace_from_run, verify_multitier
from wulffspread.waves import antiderivative, bistable_wave, combustion_wave, phase_plane_bump
from wulffspread.wulff import (
    DirectionalSpeedTable,
    build_wulff,
    check_normal_property,
    spreading_speed,
)

SQRT2 = math.sqrt(2.0)
# frozen oracle outputs (tests/oracles.py)
C_E1_SCAN_64 = 2.0028746781
ELLIPSE_ANGLES = np.arange(8) * math.pi / 8 + 0.1
ELLIPSE_BRUTE = [1.9707540989, 1.5470893067, 1.1956548517, 1.0327627547,
                 1.0037586016, 1.0961912825, 1.3477884565, 1.7890248708]
QUINTIC_C1 = 0.2982125626
QUINTIC_C2 = 0.1502983329
AP_FRONT_T2000 = 0.35355176


@pytest.fixture
def report(capsys):
    t0 = time.perf_counter()

    def emit(n, ok, detail, budget):
        elapsed = time.perf_counter() - t0
        ok = ok and elapsed <= budget
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}  [{elapsed:.1f} s / {budget:g} s]")
        return ok

    return emit


def test_criterion_01_constant_coefficient_eigenvalue(report):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for dim, n in ((1, 64), (2, 48)):
        coeffs = constant_coefficients(dim, n)
        for z in rng.normal(scale=1.5, size=(10, dim)):
            exact = float(z @ z) + 1.0
            worst = max(worst, abs(k_of(coeffs, z) - exact) / exact)
    assert report(1, worst <= 1e-8, f"max rel err {worst:.2e} (tol 1e-8, 20 z)", 5)


def test_criterion_02_homogeneous_kpp_speed(report):
    model = builtin_model("homogeneous_kpp", dim=1)
    c_eig = critical_speed(model.coeffs, [1.0]).c_star
    c_front = front_like_speed(model, [1.0], GridSpec(dim=1, spacing=0.05), 40.0)
    ok = abs(c_eig - 2.0) <= 1e-4 and abs(c_front - 2.0) <= 0.02 * 2.0
    assert report(2, ok, f"eigen {c_eig:.7f} (2 +- 1e-4), front {c_front:.5f} (2 +- 2%)", 60)


def test_criterion_03_cubic_bistable(report):
    base = builtin_model("cubic_bistable", dim=1)
    grid = GridSpec(dim=1, spacing=0.05)
    parts, ok = [], True
    for theta in (0.3, 0.4, 0.5):
        exact = (1 - 2 * theta) / SQRT2
        c = bistable_wave(lambda u, t=theta: u * (1 - u) * (u - t) if 0 <= u <= 1 else 0.0, 0.0, 1.0).c
        # the catalog bistable type stops below 1/2; the balanced case uses the same cubic
        reaction = ReactionTerm("multistable", {"zeros": (0.0, theta, 1.0), "rate": 1.0})
        c_sim = front_like_speed(dataclasses.replace(base, reaction=reaction), [1.0], grid, 40.0)
        # relative 2% is void at zero speed; the balanced case is held to 1e-3 absolute
        sim_ok = abs(c_sim - c) <= (0.02 * abs(c) if abs(c) > 1e-6 else 1e-3)
        ok &= abs(c - exact) <= 1e-5 and sim_ok
        parts.append(f"theta={theta}: shoot {c:.7f} sim {c_sim:.5f}")
    assert report(3, ok, "; ".join(parts), 120)


def test_criterion_04_periodic_cross_validation(report):
    model = builtin_model("sinusoidal_kpp", dim=2)
    c_eig = critical_speed(model.coeffs, [1.0, 0.0]).c_star
    c_front = front_like_speed(model, [1.0, 0.0], GridSpec(dim=2, spacing=0.05), 40.0)
    rel = abs(c_eig - c_front) / c_eig
    ok = rel <= 0.03 and abs(c_eig - C_E1_SCAN_64) <= 1e-4
    assert report(4, ok, f"eigen {c_eig:.7f} (oracle {C_E1_SCAN_64}), front {c_front:.5f}, "
                         f"rel gap {rel:.2e} (tol 3%)", 300)


def test_criterion_05_wulff_geometry(report):
    table = DirectionalSpeedTable.from_function(lambda t: math.hypot(2 * math.cos(t), math.sin(t)), 256)
    shape = build_wulff(table, 720)
    t = shape.xi_angles
    exact = 1 / np.sqrt(np.cos(t) ** 2 / 4 + np.sin(t) ** 2)
    err_closed = float(np.abs(shape.radii / exact - 1).max())
    err_brute = max(abs(spreading_speed(table, a)[0] / r - 1) for a, r in zip(ELLIPSE_ANGLES, ELLIPSE_BRUTE))
    normal = check_normal_property(shape, table, tol=1e-3)
    ok = len(t) == 720 and err_closed <= 1e-3 and err_brute <= 1e-3 and normal.passed
    assert report(5, ok, f"radial err {err_closed:.2e} (720 angles), vs brute force {err_brute:.2e}, "
                         f"normal violation {normal.max_violation:.2e} (tol 1e-3)", 30)


@pytest.mark.slow
def test_criterion_06_freidlin_gartner_2d(report):
    model = builtin_model("sinusoidal_kpp", dim=2)
    shape = build_wulff(speed_table(model.coeffs, n_angles=256), 720)
    ax = np.linspace(-60.0, 60.0, 1024)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryContaminationWarning)
        state = Simulator(model, [ax, ax], bump_datum([ax, ax]), contamination="warn").integrate(30.0)
    rep = verify_spreading_set(state, shape, 0.2, 0.9, 0.05, 30.0, require_box=False)
    flags = "; ".join(state.warnings) or "none"
    assert report(6, rep.passed, f"min u in 0.8WT {rep.min_inside:.4f} (>= 0.9), max u outside 1.2WT "
                                 f"{rep.max_outside:.2e} (<= 0.05), boundary flags: {flags}", 1800)


def test_criterion_07_comparison_principle(report):
    grid = GridSpec(dim=1, spacing=0.1, domain_half_width=10.0)
    x = grid.axis()
    rng = np.random.default_rng(7)
    worst = -math.inf
    for name in CATALOG:
        model = builtin_model(name, dim=1)
        for k in range(50):
            low = rng.uniform(0, 1, x.size) * smoothed_step(np.abs(x) - rng.uniform(2, 8))
            gap = rng.uniform(0, 0.3, x.size) * (rng.uniform(size=x.size) < 0.7 if k % 2 else 1.0)
            high = np.minimum(1.0, low + gap)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", BoundaryContaminationWarning)
                worst = max(worst, comparison_check(model, grid, low, high, 2.0, contamination="warn"))
    assert report(7, worst <= 1e-10, f"max ordering violation {worst:.2e} over {50 * len(CATALOG)} pairs "
                                     f"(tol 1e-10)", 300)


def test_criterion_08_terrace(report):
    model = builtin_model("quintic_multistable", dim=1)
    f = model.reaction.scalar()
    terr = compute_terrace(f)
    c1, c2 = terr.speeds
    T = 400.0
    rep = verify_multitier(model, terr, GridSpec(dim=1, spacing=0.1, domain_half_width=150.0), T)
    emp = terrace_from_run(rep.recorder, f)
    ok1 = ((c1 - c2) * T >= 20 and len(emp.levels) == 3 and abs(emp.plateau_values[1] - terr.levels[1]) <= 0.02
           and all(abs(a - b) <= 0.05 * b for a, b in zip(emp.speeds, terr.speeds))
           and emp.speeds[0] > emp.speeds[1]
           and abs(c1 - QUINTIC_C1) <= 1e-7 and abs(c2 - QUINTIC_C2) <= 1e-7)
    # 2D radial version: plateau probes between the tiers
    model2 = builtin_model("quintic_multistable", dim=2, cells=8)
    T2 = 150.0
    rep2 = verify_multitier(model2, terr, GridSpec(dim=2, spacing=0.25, domain_half_width=70.0), T2, tol=0.07)
    plateau = [c for c in rep2.checks if c.name.startswith("plateau")]
    ok2 = (c1 - c2) * T2 >= 20 and bool(plateau) and all(c.passed for c in plateau)
    dev2 = max(abs(c.value - c.target) for c in plateau)
    assert report(8, ok1 and ok2,
                  f"1D T={T:g}: plateau {emp.plateau_values[1]:.4f} (theta_1 {terr.levels[1]:.2f} +- 0.02), "
                  f"speeds {emp.speeds[0]:.4f}/{emp.speeds[1]:.4f} vs {c1:.4f}/{c2:.4f} (+- 5%); "
                  f"2D T={T2:g}: max plateau deviation {dev2:.4f} (+- 0.07)", 900)


def test_criterion_09_almost_periodic(report):
    auto = ap_average_speed(builtin_model("ap_time_bistable", dim=1, amp=0.0), T=200.0)
    exact = (1 - 2 * 0.25) / SQRT2
    ok0 = auto.invaded and all(abs(c - exact) <= 0.02 * exact for c in (auto.front_speed, auto.bump_speed))
    mod = ap_average_speed(builtin_model("ap_time_bistable", dim=1, amp=0.05), T=200.0)
    ok1 = (mod.invaded and abs(mod.bump_speed - AP_FRONT_T2000) <= 0.05 * AP_FRONT_T2000
           and abs(mod.bump_speed - mod.front_speed) <= 0.05 * mod.front_speed)
    assert report(9, ok0 and ok1,
                  f"amp=0: front {auto.front_speed:.5f} bump {auto.bump_speed:.5f} ({exact:.5f} +- 2%); "
                  f"amp=0.05: bump {mod.bump_speed:.5f} front {mod.front_speed:.5f} "
                  f"(oracle {AP_FRONT_T2000} +- 5%)", 600)


def test_criterion_10_invariant_properties(report):
    checks = {}
    # parabolic scaling: 4f doubles the wave speed
    comb = lambda s: (lambda u: s * 2.0 * max(0.0, u - 0.3) * (1 - u) if 0 <= u <= 1 else 0.0)
    checks["scaling"] = abs(combustion_wave(comb(4.0), 0.3).c / combustion_wave(comb(1.0), 0.3).c - 2) <= 1e-6
    # Hamiltonian conservation along the stationary trajectory
    f = lambda u: u * (1 - u) * (u - 0.3) if 0 <= u <= 1 else 0.0
    wave = bistable_wave(f, 0.0, 1.0)
    F = antiderivative(f)
    rep = phase_plane_bump(f, 0.8, wave.translated(0.8).slope_at(0.0), wave)
    q, dq = rep.right_sol.y
    keep = (q >= 0) & (q <= 1)
    checks["hamiltonian"] = np.ptp(0.5 * dq[keep] ** 2 + np.array([F(v) for v in q[keep]])) <= 1e-8
    # monotonicity in the potential: k shifts exactly with a constant potential
    coeffs = builtin_model("sinusoidal_kpp", dim=1, cells=32).coeffs
    shift = k_of(coeffs.with_lin(coeffs.lin + 0.3), [0.7]) - k_of(coeffs, [0.7])
    checks["potential"] = abs(shift - 0.3) <= 1e-10
    # monotonicity of the spreading speed in the directional table
    tab = DirectionalSpeedTable.from_function(lambda t: math.hypot(2 * math.cos(t), math.sin(t)), 64)
    xs = np.linspace(0, 2 * math.pi, 19)[:-1]
    base = np.array([spreading_speed(tab, a)[0] for a in xs])
    up = np.array([spreading_speed(tab.with_speed(5, 1.5 * tab.speeds[5]), a)[0] for a in xs])
    checks["table monotone"] = bool(np.all(up >= base - 1e-12))
    # second-order convergence of the cell eigenvalue
    ks = [k_of(builtin_model("sinusoidal_kpp", dim=1, cells=n).coeffs, [0.7]) for n in (32, 64, 128)]
    checks["grid convergence"] = abs(ks[0] - ks[1]) / abs(ks[1] - ks[2]) >= 3.0
    # equal-speed removal is idempotent
    once = remove_equal_speeds([0.2, 0.5, 0.8, 1.0], [0.4, 0.2, 0.2, 0.1])
    twice = remove_equal_speeds(once[0], once[1])
    checks["idempotence"] = once[:2] == twice[:2]
    failed = [k for k, v in checks.items() if not v]
    detail = f"{len(checks) - len(failed)}/{len(checks)} properties hold" + (f", failed: {failed}" if failed else "")
    assert report(10, not failed, detail + " (full suites in the module tests)", 120)
