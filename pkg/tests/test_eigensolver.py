import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wulffspread.eigensolver import (
    assemble_cell_operator,
    critical_speed,
    k_of,
    principal_eigenvalue,
    spec_tau,
    speed_table,
)
from wulffspread.model import builtin_model, constant_coefficients

# frozen outputs of tests/oracles.py (dense LAPACK / lambda scan / Hill truncation)
K0_DENSE_64 = 1.0031686087
K0_CONTINUUM = 1.0031660648
C_E1_SCAN_64 = 2.0028746781
C_E2_REDUCTION = 2.0031661027


def sinusoidal(dim=1, cells=None):
    return builtin_model("sinusoidal_kpp", dim=dim, cells=cells).coeffs


@pytest.mark.parametrize("dim", [1, 2])
def test_constant_coefficients_exact(dim):
    rng = np.random.default_rng(3)
    a, mu = 1.7, -0.4
    v = rng.normal(size=dim)
    coeffs = constant_coefficients(dim, 8, a=a, q=v, lin=mu)
    for z in rng.normal(scale=2.0, size=(20, dim)):
        op = assemble_cell_operator(coeffs, z)
        ones = np.ones(op.matrix.shape[0])
        exact = (op.matrix @ ones)[0]
        assert np.ptp(op.matrix @ ones) < 1e-12 * (1 + abs(exact))
        k = principal_eigenvalue(op).k
        assert k == pytest.approx(exact, rel=1e-10, abs=1e-12)
        assert exact == pytest.approx(a * z @ z - v @ z + mu, rel=1e-12, abs=1e-12)


def test_symmetry_in_z():
    coeffs = sinusoidal(2, 16)
    rng = np.random.default_rng(4)
    for z in rng.normal(size=(20, 2)):
        assert k_of(coeffs, z) == pytest.approx(k_of(coeffs, -z), rel=1e-8)


@pytest.mark.parametrize("z", [[0.0], [0.7], [-1.3]])
def test_second_order_grid_convergence(z):
    ks = [k_of(sinusoidal(1, n), z) for n in (32, 64, 128)]
    assert abs(ks[0] - ks[1]) / abs(ks[1] - ks[2]) >= 3.0


@settings(max_examples=15, deadline=None)
@given(delta=st.floats(-2, 2), z=st.floats(-2, 2))
def test_potential_shift_identity(delta, z):
    coeffs = sinusoidal(1, 32)
    shifted = coeffs.with_lin(coeffs.lin + delta)
    assert k_of(shifted, [z]) - k_of(coeffs, [z]) == pytest.approx(delta, abs=1e-10)


def test_conservative_step_agrees():
    op = assemble_cell_operator(sinusoidal(1, 32), [0.4])
    fast = principal_eigenvalue(op)
    slow = principal_eigenvalue(op, tau=spec_tau(op))
    assert fast.k == pytest.approx(slow.k, abs=1e-9)
    assert fast.phi.min() > 0 and fast.residual < 1e-9


def test_principal_eigenvalue_matches_dense():
    op = assemble_cell_operator(sinusoidal(1, 64), [0.0])
    assert principal_eigenvalue(op).k == pytest.approx(K0_DENSE_64, abs=1e-9)
    assert principal_eigenvalue(op).k == pytest.approx(K0_CONTINUUM, abs=1e-5)


def test_critical_speed_homogeneous():
    res = critical_speed(builtin_model("homogeneous_kpp", dim=1).coeffs, [1.0])
    assert res.c_star == pytest.approx(2.0, abs=1e-4)
    assert res.lambda_star == pytest.approx(1.0, rel=1e-2)


def test_search_soundness():
    res = critical_speed(sinusoidal(1), [1.0])
    assert res.c_star <= min(g for _, g in res.trace) + 1e-9
    assert res.bracket[0] <= res.lambda_star <= res.bracket[1]


def test_sinusoidal_speeds_match_oracles():
    assert critical_speed(sinusoidal(1), [1.0]).c_star == pytest.approx(C_E1_SCAN_64, abs=1e-4)
    c_e2 = critical_speed(sinusoidal(2), [0.0, 1.0]).c_star
    assert c_e2 == pytest.approx(C_E2_REDUCTION, abs=1e-4)


def test_one_dimensional_table_is_reflection_symmetric():
    tab = speed_table(sinusoidal(1))
    assert tab.speeds[0] == pytest.approx(tab.speeds[1], rel=1e-8)


def test_speed_table_angles():
    tab = speed_table(builtin_model("homogeneous_kpp", dim=2, cells=8).coeffs, n_angles=64)
    assert len(tab.angles) == 64
    np.testing.assert_allclose(tab.speeds, 2.0, atol=1e-4)
    assert tab.angles[1] == pytest.approx(2 * math.pi / 64)
