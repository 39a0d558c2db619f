import math

import numpy as np
import pytest

from pfmpc.baseline import TrackingPID, baseline_tracking_controller
from pfmpc.config import default_config
from pfmpc.dynamics import VehicleState
from pfmpc.mpc import SafetyController
from pfmpc.potential import ObstacleDescriptor
from pfmpc.reference import PlannerOutput
from pfmpc.sim import load_scenario, run

CFG = default_config()


def straight(**kw):
    return PlannerOutput(waypoints=np.c_[np.arange(0.0, 25.0, 2.5), np.zeros(10)], target_speed=8.0, **kw)


def test_on_reference_at_target_speed_is_quiet():
    u = baseline_tracking_controller(VehicleState(vx=8.0), straight(), CFG)
    assert abs(u.accel) < 1e-9 and abs(u.steer) < 1e-9


def test_close_front_obstacle_full_brake():
    ob = ObstacleDescriptor("vehicle", 1.0, 0.0, 0.0, 9.6, 2.5)
    u = baseline_tracking_controller(VehicleState(vx=8.0), straight(obstacles=[ob]), CFG)
    assert u.accel == CFG.vehicle.u_min[0]


def test_integrator_state_kept_by_instance():
    ctl = TrackingPID(CFG)
    a1 = ctl(VehicleState(vx=6.0), straight()).accel
    a2 = ctl(VehicleState(vx=6.0), straight()).accel
    assert a2 > a1


def lateral_error(log):
    return max(abs(math.hypot(r["px"], r["py"] - 10.0) - 10.0) for r in log)


@pytest.mark.slow
def test_circle_tracking_mpc_beats_baseline(scenario_dir):
    sc = load_scenario(scenario_dir / "curve.yaml")
    zeroed = CFG.with_pf_zeroed()
    mpc = run(sc, SafetyController(zeroed), config=zeroed)
    pid = run(sc, TrackingPID(CFG), config=CFG)
    e_mpc = lateral_error([r for r in mpc.log if r["t"] <= 30.0])
    e_pid = lateral_error([r for r in pid.log if r["t"] <= 30.0])
    assert e_mpc < 0.3
    assert e_pid >= e_mpc
