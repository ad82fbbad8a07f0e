import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wulffspread.model import (
    CATALOG,
    GridSpec,
    ModelError,
    PeriodicCoefficients,
    ReactionTerm,
    builtin_model,
    constant_coefficients,
    validate_coefficients,
)


@pytest.mark.parametrize("name", CATALOG)
def test_reaction_vanishes_at_zero_and_one(name):
    model = builtin_model(name, dim=1)
    rng = np.random.default_rng(0)
    n = 10**6
    r = rng.uniform(0.5, 1.5, n)
    for t in rng.uniform(0, 100, 5):
        for level in (0.0, 1.0):
            assert np.all(model.reaction.eval(np.full(n, level), r, t) == 0.0)


@pytest.mark.parametrize("name", CATALOG)
@pytest.mark.parametrize("dim", [1, 2])
def test_coefficients_are_periodic(name, dim):
    model = builtin_model(name, dim=dim, cells=16)
    rng = np.random.default_rng(1)
    axes = [rng.uniform(-3, 3, 7) for _ in range(dim)]
    base = model.coeffs.sample_on(axes)
    for k in range(dim):
        shifted = [a + (1.0 if i == k else 0.0) for i, a in enumerate(axes)]
        for x, y in zip(base, model.coeffs.sample_on(shifted)):
            np.testing.assert_allclose(x, y, rtol=0, atol=1e-13)


@pytest.mark.parametrize("name", CATALOG)
def test_catalog_coefficients_validate(name):
    assert validate_coefficients(builtin_model(name, dim=2, cells=16).coeffs).ok


def test_validation_reports_bad_fields():
    n = 8
    good = constant_coefficients(2, n)
    a = np.array(good.a)
    a[0, 1, 2, 3] = 0.3  # asymmetric entry
    rep = validate_coefficients(PeriodicCoefficients(2, a, good.qvec, good.lin))
    assert any("symmetric" in f for f in rep.failures)

    q = np.zeros((2, n, n))
    q[0] = np.linspace(0, 1, n)[:, None]  # d q1 / d x1 != 0
    rep = validate_coefficients(PeriodicCoefficients(2, good.a, q, good.lin))
    assert any("divergence" in f for f in rep.failures)

    rep = validate_coefficients(PeriodicCoefficients(2, good.a, np.ones((2, n, n)), good.lin))
    assert any("average" in f for f in rep.failures)

    rep = validate_coefficients(PeriodicCoefficients(2, -np.array(good.a), good.qvec, good.lin))
    assert any("elliptic" in f for f in rep.failures)


def test_grid_spec_rejects_bad_input():
    with pytest.raises(ModelError):
        GridSpec(dim=3)
    with pytest.raises(ModelError):
        GridSpec(cells_per_period=7)
    with pytest.raises(ModelError):
        GridSpec(spacing=0.0)
    assert GridSpec(domain_half_width=1.0, spacing=0.5).axis().tolist() == [-1.0, -0.5, 0.0, 0.5, 1.0]


def test_catalog_rejects_unknown_names_and_overrides():
    with pytest.raises(ModelError):
        builtin_model("nope")
    with pytest.raises(ModelError):
        builtin_model("homogeneous_kpp", colour="red")
    with pytest.raises(ModelError):
        builtin_model("cubic_bistable", theta=0.7)


def test_expected_values_carry_provenance():
    for name in CATALOG:
        for value, tag in builtin_model(name).expected.values():
            assert tag in ("TRIVIAL", "DERIVED")
            assert np.isfinite(value)


def test_reaction_kinds():
    assert builtin_model("homogeneous_kpp").reaction.is_kpp
    assert not builtin_model("cubic_bistable").reaction.is_kpp
    assert not builtin_model("ap_time_bistable").reaction.autonomous
    with pytest.raises(ModelError):
        builtin_model("ap_time_bistable").reaction.scalar()


@settings(max_examples=50, deadline=None)
@given(u=st.floats(0, 1), theta=st.floats(0.05, 0.45))
def test_bistable_reaction_closed_form(u, theta):
    f = ReactionTerm("bistable", {"theta": theta}).scalar()
    assert f(u) == pytest.approx(u * (1 - u) * (u - theta), abs=1e-15)


def test_quintic_sign_pattern():
    f = builtin_model("quintic_multistable").reaction.scalar()
    for u, sign in [(0.05, -1), (0.3, 1), (0.6, -1), (0.9, 1)]:
        assert np.sign(f(u)) == sign


def test_reaction_derivative_matches_difference():
    for name in CATALOG:
        r = builtin_model(name).reaction
        u = np.linspace(0.05, 0.95, 19)
        u = u[np.abs(u - r.params.get("theta", -1)) > 1e-3]
        num = (r.f0(u + 1e-6, 0.7) - r.f0(u - 1e-6, 0.7)) / 2e-6
        np.testing.assert_allclose(r.df0(u, 0.7), num, atol=1e-7)
        assert r.lipschitz() >= np.abs(r.df0(u, 0.7)).max() * (1 - 1e-9)


def test_axis_model_reduction():
    m = builtin_model("sinusoidal_kpp", dim=2, cells=16)
    with pytest.raises(ModelError):
        m.axis_model(1)
    m0 = m.axis_model(0, reverse=True)
    fwd = m.axis_model(0).reaction.modulation
    np.testing.assert_allclose(m0.reaction.modulation, fwd[(-np.arange(16)) % 16])
