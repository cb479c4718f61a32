import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from gapstrand import cell_model as cm
from gapstrand.errors import SolverDivergence


@pytest.fixture(scope="module")
def rest():
    return cm.resting_state()


def test_rest_matches_independent_root_solve(rest):
    ref = oracles.rest_state()
    assert rest.v[0] == pytest.approx(ref[0], abs=1e-8)
    np.testing.assert_allclose(rest.gates[:6, 0], ref[1:7], atol=1e-10)
    assert rest.ca[0] == pytest.approx(ref[7], rel=1e-8)


def test_rest_potential_range_and_zero_current(rest):
    assert -85.0 <= rest.v[0] <= -84.0
    assert abs(cm.ionic_current(rest)[0]) < 1e-6


def test_rest_gates_are_steady(rest):
    np.testing.assert_allclose(rest.gates[:6, 0], cm.steady_gates(rest.v)[:, 0], atol=1e-10)


def test_v_eq_exposed_on_params(rest):
    assert cm.DEFAULT_PARAMS.v_eq == pytest.approx(rest.v[0], abs=1e-10)


def test_zero_conductance_gives_zero_current(rest):
    s = rest.copy()
    s.v[:] = 10.0
    assert cm.ionic_current(s, cm.DEFAULT_PARAMS.scaled(0.0))[0] == 0.0


def test_negative_conductance_rejected():
    with pytest.raises(ValueError):
        cm.IonicCurrentParams(g_na=-1.0)


@given(
    v=st.floats(-100, 60),
    gates=st.lists(st.floats(0, 1), min_size=6, max_size=6),
    log_ca=st.floats(-18, -12),
)
@settings(max_examples=200, deadline=None)
def test_ionic_current_matches_reference_formulas(v, gates, log_ca):
    ca = math.exp(log_ca)
    s = cm.BrState(np.array([v]), np.array([[g] for g in gates] + [[ca]]))
    ref, _ = oracles.currents(v, *gates, ca)
    assert cm.ionic_current(s)[0] == pytest.approx(cm.CURRENT_SCALE * ref, rel=1e-9, abs=1e-12)


def test_sign_convention_sodium_current_inward_near_rest(rest):
    # open sodium channels at rest drive a negative (inward, depolarising) current
    s = rest.copy()
    s.gates[0:3] = 1.0
    assert cm.ionic_current(s)[0] < 0


@pytest.mark.parametrize("dt", [1e-3, 0.01, 1.0, 100.0])
def test_gates_at_steady_state_are_fixed(dt):
    v = np.array([-40.0])
    g = cm.steady_gates(v)
    s = cm.BrState(v.copy(), np.vstack([g, [[1e-7]]]))
    out = cm.step_gates(s, v, dt)
    np.testing.assert_allclose(out.gates[:6], g, atol=1e-14)


def test_large_step_saturates_to_steady_state(rest):
    v = np.array([-10.0])
    out = cm.step_gates(rest, v, 1e6)
    np.testing.assert_allclose(out.gates[:6], cm.steady_gates(v), atol=1e-12)


def test_holding_at_rest_does_not_drift(rest):
    s = rest.copy()
    for _ in range(1000):
        s = cm.step_gates(s, rest.v, 0.01)
    np.testing.assert_allclose(s.gates[:6], rest.gates[:6], atol=1e-8)
    assert abs(s.ca[0] - rest.ca[0]) < 1e-8


def test_non_finite_potential_is_divergence(rest):
    with pytest.raises(SolverDivergence):
        cm.step_gates(rest, np.array([np.nan]), 0.01)


@given(
    vs=st.lists(st.floats(-150, 150), min_size=1, max_size=40),
    dt=st.floats(1e-4, 50.0),
)
@settings(max_examples=150, deadline=None)
def test_gates_stay_in_unit_interval(vs, dt):
    s = cm.resting_state()
    for v in vs:
        s = cm.step_gates(s, np.array([v]), dt)
        assert np.all(s.gates[:6] >= 0.0) and np.all(s.gates[:6] <= 1.0)
        assert s.ca[0] > 0


@pytest.fixture(scope="module")
def clamp_reference():
    return oracles.space_clamp(50.0, 10.0, 5.0, 10.0)


def test_space_clamp_matches_ode_oracle(clamp_reference):
    t, v = cm.space_clamp(50.0, 0.01, lambda t: 0.1 if 5.0 <= t < 10.0 else 0.0)
    err = np.max(np.abs(v - clamp_reference(t)))
    assert err < 0.5


def test_space_clamp_peak_range(clamp_reference):
    peak = clamp_reference(np.linspace(5, 50, 4501)).max()
    assert 25.0 <= peak <= 45.0
    _, v = cm.space_clamp(50.0, 0.01, lambda t: 0.1 if 5.0 <= t < 10.0 else 0.0)
    assert 25.0 <= v.max() <= 45.0


def test_unstimulated_space_clamp_stays_at_rest(rest):
    _, v = cm.space_clamp(50.0, 0.01)
    assert np.max(np.abs(v - rest.v[0])) < 0.1


def test_resting_state_bad_bracket_raises():
    from gapstrand.errors import ConvergenceError

    with pytest.raises(ConvergenceError):
        cm.resting_state(bracket=(-20.0, 0.0))
