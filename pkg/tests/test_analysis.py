import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gapstrand import analysis as an
from gapstrand.geometry import SubunitGeometry
from gapstrand.records import SimulationRecord

STATIONS = np.round(np.arange(0.0, 10.0 + 1e-9, 0.5), 10)


def _wave(speed, t=np.arange(0, 50.0001, 0.01), width=0.5, lag=2.0):
    """Sharp sigmoid front travelling at ``speed`` from rest -85 to +20 mV."""
    arg = (t[:, None] - lag - STATIONS[None, :] / speed) / width
    traces = -85.0 + 105.0 / (1.0 + np.exp(-arg))
    return SimulationRecord(t, STATIONS.copy(), traces)


@given(speed=st.floats(0.1, 2.0), threshold=st.floats(-80.0, 15.0))
@settings(max_examples=60, deadline=None)
def test_speed_of_synthetic_wave(speed, threshold):
    rec = _wave(speed, t=np.arange(0, 120.0001, 0.01))
    est = an.conduction_velocity(rec, threshold=threshold)
    assert est.propagated
    assert est.cv == pytest.approx(speed, rel=1e-3)


def test_default_stations_are_quartiles():
    est = an.conduction_velocity(_wave(0.5))
    assert (est.x_a, est.x_b) == (2.5, 7.5)
    assert est.cv == pytest.approx(0.5, rel=1e-4)


def test_rest_traces_not_propagating():
    t = np.arange(0, 50.0001, 0.01)
    rec = SimulationRecord(t, STATIONS.copy(), np.full((t.size, STATIONS.size), -84.57))
    est = an.conduction_velocity(rec)
    assert not est.propagated and math.isnan(est.cv)


def test_station_order_validated():
    with pytest.raises(ValueError):
        an.conduction_velocity(_wave(0.5), x_a=5.0, x_b=2.0)


def test_upward_crossing_interpolates():
    t = np.array([0.0, 1.0, 2.0])
    v = np.array([-80.0, -30.0, 20.0])
    assert an.upward_crossing(t, v, -20.0) == pytest.approx(1.2)
    assert an.upward_crossing(t, v, 50.0) is None


def test_wavefront_position():
    x = np.linspace(0, 10, 101)
    v = np.where(x < 4.05, 20.0, -85.0)
    assert an.wavefront_position({"x": x, "v": v}) == pytest.approx(4.0 + 40 / 105 * 0.1)
    assert math.isnan(an.wavefront_position({"x": x, "v": np.full_like(x, -85.0)}))
    assert an.wavefront_position({"x": x, "v": np.full_like(x, 10.0)}) == 10.0


def test_linear_ramp_has_equal_steepness():
    g = SubunitGeometry(n_cells_x=5)
    x = np.sort(np.concatenate([np.linspace(0, g.length, 201), np.arange(5) * g.L + g.delta / 2]))
    s = an.steepness_profile({"x": x, "v": 3.0 * x - 80}, g)
    assert s.gap == pytest.approx(3.0) and s.cell == pytest.approx(3.0)
    assert s.ratio == pytest.approx(1.0)


def test_continuum_profile_single_class():
    x = np.linspace(0, 10, 101)
    s = an.steepness_profile({"x": x, "v": 2.0 * x})
    assert s.gap is None and s.ratio is None and s.cell == pytest.approx(2.0)


def test_stepped_profile_detected():
    g = SubunitGeometry(n_cells_x=5)
    local = g.subunit_x_nodes()
    x = np.concatenate([k * g.L + local[:-1] for k in range(5)] + [[g.length]])
    # cells rise 0.1 mV each, gap slabs jump 10 mV
    knots_x, knots_v = [], []
    for k in range(5):
        knots_x += [k * g.L, k * g.L + g.delta]
        knots_v += [10.0 * k + 0.1 * (k - 1) if k else 0.0, 10.0 * (k + 1) + 0.1 * k]
    v = np.interp(x, knots_x + [g.length], knots_v + [knots_v[-1] + 0.1])
    assert an.steepness_profile({"x": x, "v": v}, g).ratio > 5


def test_periodic_power_fraction():
    x = np.linspace(0, 10, 1001)
    assert an.periodic_power_fraction(x, np.sin(2 * np.pi * x / 0.1), 0.1) > 0.99
    front = -85 + 105 / (1 + np.exp((x - 5) / 0.3))
    assert an.periodic_power_fraction(x, front, 0.1) < 1e-3
    with pytest.raises(ValueError):
        an.periodic_power_fraction(x, front, 0.3)


def _row(model, solver, cv):
    return an.ComparisonRow(model, solver, True, 1.0, cv, 1.0, 2.0, None, None)


def test_orderings_and_csv():
    rows = [_row("1", "continuum", 0.30), _row("2", "continuum", 0.29), _row("3", "continuum", 0.31),
            _row("5", "continuum", 0.3101), _row("1", "discrete", 0.29)]
    got = {o.description: o.holds for o in an.orderings(rows)}
    assert got["continuum: cv(2) < cv(1)"]
    assert not got["continuum: cv(3) < cv(1)"]
    assert got["continuum: |cv(5) - cv(3)| < 0.01 cv(3)"]
    assert got["model 1: discrete cv < continuum cv"]
    text = an.comparison_csv(rows)
    assert text.splitlines()[0] == ",".join(an.COMPARISON_COLUMNS)
    assert len(text.splitlines()) == 6


def test_orderings_invariant_to_station_choice():
    recs = {m: _wave(s) for m, s in (("1", 0.30), ("2", 0.29), ("3", 0.28))}
    outcomes = []
    for xa, xb in ((2.5, 7.5), (3.0, 7.0), (2.0, 8.0)):
        rows = [_row(m, "continuum", an.conduction_velocity(r, x_a=xa, x_b=xb).cv) for m, r in recs.items()]
        outcomes.append([o.holds for o in an.orderings(rows)])
    assert outcomes[0] == outcomes[1] == outcomes[2]
