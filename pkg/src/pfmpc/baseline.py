"""Rule-based tracking controller used as the ablation baseline.

Longitudinal PID on speed error, lateral pure pursuit on the planner path, and a hard
stop whenever an obstacle sits in the front corridor closer than ``stop_distance``.
"""

import math

import numpy as np

from .dynamics import ControlInput, VehicleState
from .mpc import current_potential
from .potential import select_front_obstacle
from .reference import (
    CatmullRomSpline,
    PlannerOutput,
    ReferenceBuildError,
    build_reference,
    gate_controls,
    gated_target_speed,
    to_global,
)


class TrackingPID:
    name = "tracking-pid"

    def __init__(self, config):
        self.config = config
        self.reset()

    def reset(self):
        self.integral = 0.0
        self.prev_error = None
        self.info: dict = {}

    def __call__(self, ego: VehicleState, planner: PlannerOutput) -> ControlInput:
        cfg = self.config
        params = cfg.vehicle
        bc = cfg.baseline
        dt = params.dt
        world = to_global(planner, (ego.px, ego.py, ego.phi))
        try:
            spline = CatmullRomSpline(world.waypoints)
        except ReferenceBuildError:
            self.info = {"emergency": True}
            return ControlInput(params.u_min[0], 0.0)
        target = gated_target_speed(planner.target_speed, world, cfg.gates)

        # corridor check on the same resampled path the MPC would use
        ref = build_reference(world.waypoints, ego, max(target, 1.0), cfg.mpc.horizon, dt)
        corridor = params.width / 2.0 + cfg.pf.corridor_margin
        d_safety = select_front_obstacle(ego, ref, world.obstacles, corridor)

        error = target - ego.vx
        self.integral = float(np.clip(self.integral + error * dt, -5.0, 5.0))
        deriv = 0.0 if self.prev_error is None else (error - self.prev_error) / dt
        self.prev_error = error
        accel = bc.kp * error + bc.ki * self.integral + bc.kd * deriv
        if d_safety is not None and d_safety < bc.stop_distance:
            accel = params.u_min[0]
            self.integral = 0.0

        lookahead = max(bc.lookahead_min, bc.lookahead_gain * ego.vx)
        s_goal = spline.project((ego.px, ego.py)) + lookahead
        if s_goal <= spline.length:
            goal = spline(spline.param_at_arclength(s_goal))
        else:
            end = spline.points[-1]
            tangent = spline.evaluate(np.array([spline.knots[-1]]), 1)[0]
            goal = end + (s_goal - spline.length) * tangent / np.linalg.norm(tangent)
        dx, dy = goal[0] - ego.px, goal[1] - ego.py
        c, s = math.cos(ego.phi), math.sin(ego.phi)
        lx, ly = c * dx + s * dy, -s * dx + c * dy
        dist = max(math.hypot(lx, ly), 1e-6)
        alpha = math.atan2(ly, lx)
        steer = math.atan2(2.0 * params.wheelbase * math.sin(alpha), dist)

        control = params.clip_control(ControlInput(accel, steer))
        control = gate_controls(control, world, cfg.gates, params)
        self.info = {
            "d_safety": d_safety,
            "f_o": current_potential(ego, planner, cfg),
            "emergency": False,
        }
        return control


def baseline_tracking_controller(ego: VehicleState, planner: PlannerOutput, config,
                                 controller: TrackingPID = None) -> ControlInput:
    """Functional entry point; pass a TrackingPID to keep integrator state across calls."""
    controller = controller or TrackingPID(config)
    return controller(ego, planner)
