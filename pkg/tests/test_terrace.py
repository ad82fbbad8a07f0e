import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wulffspread.model import GridSpec, ReactionTerm, builtin_model
from wulffspread.terrace import (
    TerraceError,
    compute_terrace,
    remove_equal_speeds,
    terrace_from_run,
    verify_multitier,
)

# phase-plane oracle in the state variable, tests/oracles.py
QUINTIC_C1 = 0.2982125626
QUINTIC_C2 = 0.1502983329


@pytest.fixture(scope="module")
def quintic():
    model = builtin_model("quintic_multistable", dim=1)
    return model, compute_terrace(model.reaction.scalar())


def test_quintic_decomposition(quintic):
    _, terr = quintic
    assert terr.levels == pytest.approx([0.0, 0.45, 1.0], abs=1e-9)
    assert terr.speeds[0] == pytest.approx(QUINTIC_C1, abs=1e-7)
    assert terr.speeds[1] == pytest.approx(QUINTIC_C2, abs=1e-7)
    assert terr.M == 2 and not terr.flags
    json.dumps(terr.to_dict())


def test_speeds_strictly_decreasing(quintic):
    _, terr = quintic
    assert all(a - b > 1e-6 for a, b in zip(terr.speeds, terr.speeds[1:]))
    assert terr.speeds[-1] > 0


def test_single_tier_for_cubic():
    terr = compute_terrace(builtin_model("cubic_bistable", theta=0.3).reaction.scalar())
    assert terr.levels == pytest.approx([0.0, 1.0])
    assert terr.speeds[0] == pytest.approx(0.4 / np.sqrt(2), abs=1e-7)


def test_unordered_tiers_give_one_direct_wave():
    f = ReactionTerm("multistable", {"zeros": (0.0, 0.2, 0.4, 0.45, 1.0), "rate": 10.0}).scalar()
    terr = compute_terrace(f)
    assert terr.levels == pytest.approx([0.0, 1.0])
    assert terr.speeds[0] > 0


def test_parabolic_scaling(quintic):
    model, terr = quintic
    f = model.reaction.scalar()
    scaled = compute_terrace(lambda u: 4.0 * f(u))
    assert scaled.levels == pytest.approx(terr.levels, abs=1e-9)
    for a, b in zip(scaled.speeds, terr.speeds):
        assert a / b == pytest.approx(2.0, rel=1e-3)


def test_nonpositive_slowest_tier_is_rejected():
    with pytest.raises(TerraceError):
        compute_terrace(lambda u: u * (1 - u) * (u - 0.7) if 0 <= u <= 1 else 0.0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from([0.1, 0.2, 0.3, 0.5]), min_size=1, max_size=6))
def test_equal_speed_removal_is_idempotent(speeds):
    levels = list(np.linspace(0.1, 1.0, len(speeds)))
    once = remove_equal_speeds(levels, speeds)
    twice = remove_equal_speeds(once[0], once[1])
    assert twice[0] == once[0] and twice[1] == once[1]
    assert len(set(once[1])) == len(once[1])
    assert once[0][-1] == levels[-1]


def test_equal_speed_removal_keeps_highest_level():
    lv, cs, kept = remove_equal_speeds([0.3, 0.6, 1.0], [0.4, 0.2, 0.2])
    assert lv == [0.3, 1.0] and cs == [0.4, 0.2] and kept == [0, 2]


def test_box_check(quintic):
    model, terr = quintic
    with pytest.raises(TerraceError):
        verify_multitier(model, terr, GridSpec(dim=1, spacing=0.1, domain_half_width=50.0), 400.0)


def test_decomposition_matches_simulation(quintic):
    model, terr = quintic
    grid = GridSpec(dim=1, spacing=0.1, domain_half_width=150.0)
    rep = verify_multitier(model, terr, grid, 400.0)
    assert rep.passed, [(c.name, c.value, c.margin) for c in rep.checks]
    emp = terrace_from_run(rep.recorder, model.reaction.scalar())
    assert emp.levels == pytest.approx(terr.levels, abs=0.02)
    for a, b in zip(emp.speeds, terr.speeds):
        assert a == pytest.approx(b, rel=0.05)
    assert emp.speeds[0] > emp.speeds[1]
