import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pfmpc.dynamics import ControlInput, VehicleParams, VehicleState
from pfmpc.potential import ObstacleDescriptor
from pfmpc.reference import (
    CatmullRomSpline,
    GateThresholds,
    PlannerOutput,
    ReferenceBuildError,
    build_reference,
    gate_controls,
    gated_target_speed,
    to_ego,
    to_global,
)

finite = dict(allow_nan=False, allow_infinity=False)


def planner(**kw):
    kw.setdefault("waypoints", [[1.0, 0.0], [2.0, 0.5]])
    return PlannerOutput(**kw)


def test_probabilities_validated():
    with pytest.raises(ValueError):
        planner(p_on_road=1.5)


def test_to_global_identity():
    out = planner(obstacles=[ObstacleDescriptor("vehicle", 3.0, 1.0, 0.2, 4.0, 2.0, 1.0, 0.0)], p_red_light=0.3)
    g = to_global(out, (0.0, 0.0, 0.0))
    np.testing.assert_array_equal(g.waypoints, out.waypoints)
    assert g.obstacles == out.obstacles and g.p_red_light == 0.3


def test_to_global_translation():
    assert to_global(planner(waypoints=[[1, 0], [2, 0]]), (10.0, 0.0, 0.0)).waypoints[0].tolist() == [11.0, 0.0]


def test_to_global_rotation():
    g = to_global(planner(waypoints=[[1, 0], [2, 0]],
                          obstacles=[ObstacleDescriptor("vehicle", 1.0, 0.0, 0.0, 4.0, 2.0, 2.0, 0.0)]),
                  (0.0, 0.0, math.pi / 2))
    np.testing.assert_allclose(g.waypoints[0], [0.0, 1.0], atol=1e-15)
    o = g.obstacles[0]
    assert (o.cx, o.cy, o.theta) == pytest.approx((0.0, 1.0, math.pi / 2), abs=1e-15)
    assert (o.speed_x, o.speed_y) == pytest.approx((0.0, 2.0), abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(px=st.floats(-1e3, 1e3, **finite), py=st.floats(-1e3, 1e3, **finite), phi=st.floats(-3.2, 3.2, **finite))
def test_round_trip_identity(px, py, phi):
    out = planner(waypoints=[[1.0, -2.0], [5.0, 3.0], [-4.0, 0.5]],
                  obstacles=[ObstacleDescriptor("pedestrian", 2.0, -1.0, 0.4, 1.0, 1.0, 0.5, -0.2)])
    back = to_ego(to_global(out, (px, py, phi)), (px, py, phi))
    np.testing.assert_allclose(back.waypoints, out.waypoints, atol=1e-12)
    o, b = out.obstacles[0], back.obstacles[0]
    assert (b.cx, b.cy, b.speed_x, b.speed_y) == pytest.approx((o.cx, o.cy, o.speed_x, o.speed_y), abs=1e-12)
    assert math.remainder(b.theta - o.theta, 2 * math.pi) == pytest.approx(0.0, abs=1e-12)


def test_spline_interpolates_waypoints(rng):
    for _ in range(50):
        pts = np.cumsum(rng.uniform(0.5, 3.0, (8, 2)) * rng.choice([-1, 1], (8, 2)), axis=0)
        sp = CatmullRomSpline(pts)
        np.testing.assert_allclose(sp(sp.knots), pts, atol=1e-9)


def test_spline_is_c1(rng):
    pts = np.cumsum(rng.uniform(0.5, 3.0, (6, 2)), axis=0)
    sp = CatmullRomSpline(pts)
    for t in sp.knots[1:-1]:
        np.testing.assert_allclose(sp.evaluate(np.array([t - 1e-9]), 1), sp.evaluate(np.array([t + 1e-9]), 1),
                                   atol=1e-6)


def test_spline_duplicates_collapsed():
    sp = CatmullRomSpline([[0, 0], [0, 0], [1, 0], [1, 0], [2, 0]])
    assert len(sp.points) == 3
    with pytest.raises(ReferenceBuildError):
        CatmullRomSpline([[1, 1], [1, 1]])


def test_straight_reference():
    wp = np.c_[np.arange(0.0, 40.0), np.zeros(40)]
    ref = build_reference(wp, VehicleState(), 10.0, 20, 0.1)
    np.testing.assert_allclose(ref.x[:, 0], np.arange(21.0), atol=1e-9)
    np.testing.assert_allclose(ref.x[:, 1:3], 0.0, atol=1e-12)
    assert np.all(ref.x[:, 3] == 10.0) and np.all(ref.x[:, 4] == 0.0)


def test_zero_speed_reference_stays_at_projection():
    wp = np.c_[np.arange(0.0, 10.0), np.zeros(10)]
    ref = build_reference(wp, VehicleState(px=3.2, py=0.7), 0.0, 20, 0.1)
    np.testing.assert_allclose(ref.positions, np.tile([3.2, 0.0], (21, 1)), atol=1e-6)


def test_quarter_circle_yaw_rate():
    a = np.linspace(0.0, math.pi / 2, 12)
    wp = np.c_[10 * np.sin(a), 10 - 10 * np.cos(a)]
    ref = build_reference(wp, VehicleState(), 5.0, 20, 0.1)
    np.testing.assert_allclose(ref.x[:, 5], 5.0 / 10.0, rtol=0.05)


def test_extrapolates_past_last_waypoint():
    wp = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]
    ref = build_reference(wp, VehicleState(), 10.0, 10, 0.1)
    np.testing.assert_allclose(ref.x[:, 2], math.pi / 4, atol=1e-9)
    d = np.hypot(*np.diff(ref.positions, axis=0).T)
    np.testing.assert_allclose(d, 1.0, atol=1e-3)


def test_reference_errors():
    with pytest.raises(ReferenceBuildError):
        build_reference([[0, 0]], VehicleState(), 1.0, 5, 0.1)
    with pytest.raises(ReferenceBuildError):
        build_reference([[0, 0], [1, 0]], VehicleState(), -1.0, 5, 0.1)


@settings(max_examples=100, deadline=None)
@given(r=st.floats(5, 50, **finite), v=st.floats(1, 15, **finite), sign=st.sampled_from([-1, 1]))
def test_heading_steps_bounded_by_curvature(r, v, sign):
    # a full circle is longer than the 2 s horizon, so every sample lies on the spline
    a = np.linspace(0.0, 2 * math.pi, 60)
    wp = np.c_[r * np.sin(a), sign * (r - r * np.cos(a))]
    ref = build_reference(wp, VehicleState(), v, 20, 0.1)
    dh = np.abs([math.remainder(d, 2 * math.pi) for d in np.diff(ref.x[:, 2])])
    kappa = np.maximum(np.abs(ref.x[:-1, 5]), np.abs(ref.x[1:, 5])) / v
    assert np.all(dh <= kappa * v * 0.1 * 1.05 + 1e-3)
    # headings follow the chord direction between consecutive samples
    chord = np.arctan2(*np.diff(ref.positions, axis=0)[:, ::-1].T)
    mid = ref.x[:-1, 2] + np.array([math.remainder(d, 2 * math.pi) for d in np.diff(ref.x[:, 2])]) / 2
    assert np.all(np.abs([math.remainder(c - m, 2 * math.pi) for c, m in zip(chord, mid)]) < 1e-3)


P = VehicleParams()
T = GateThresholds()


def test_red_light_gate():
    u = ControlInput(1.0, 0.2)
    assert gate_controls(u, planner(p_red_light=0.9), T, P) == ControlInput(P.u_min[0], 0.2)
    assert gate_controls(u, planner(p_red_light=0.1), T, P) == u


def test_junction_slowdown():
    assert gated_target_speed(8.0, planner(p_stop_junction=0.8), T) == 4.0
    assert gated_target_speed(8.0, planner(p_stop_junction=0.2), T) == 8.0
    assert gated_target_speed(8.0, planner(p_stop_junction=0.8), GateThresholds(junction_slow_factor=0.25)) == 2.0
