"""Receding-horizon controller: tracking + smoothness + effort + obstacle potential + ACC cost.

The optimizer is a projected spectral-gradient method over the control sequence
(single shooting). Gradients come from an adjoint sweep through the analytic model
Jacobians, every trial point is projected onto the control box, and a backtracking
Armijo search keeps the cost monotone.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from . import _kernels as K
from .dynamics import ControlInput, VehicleParams, VehicleState
from .potential import (
    ObstacleDescriptor,
    PFGains,
    effective_obstacle_gain,
    obstacle_array,
    select_front_obstacle,
)
from .reference import (
    PlannerOutput,
    ReferenceBuildError,
    ReferenceTrajectory,
    build_reference,
    gate_controls,
    gated_target_speed,
    to_global,
)

log = logging.getLogger(__name__)

TERM_NAMES = ("tracking", "smoothness", "effort", "obstacle", "front", "bounds")


@dataclass(frozen=True)
class MPCConfig:
    horizon: int = 20
    w_x: tuple = (15.0, 15.0, 10.0, 5.0, 1.0, 1.0)
    w_du: tuple = (1.0, 10.0)
    w_u: tuple = (0.5, 0.5)
    max_iters: int = 60
    step_tolerance: float = 1e-4
    cost_tolerance: float = 1e-7
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 30
    state_bound_weight: float = 1e3
    propagate_obstacles: bool = True

    def __post_init__(self):
        if self.horizon < 2:
            raise ValueError("horizon must be >= 2")
        for name in ("w_x", "w_du", "w_u"):
            vals = tuple(float(v) for v in getattr(self, name))
            if any(v < 0 for v in vals):
                raise ValueError(f"{name} must be non-negative")
            object.__setattr__(self, name, vals)
        if len(self.w_x) != 6 or len(self.w_du) != 2 or len(self.w_u) != 2:
            raise ValueError("w_x needs 6 entries, w_du and w_u need 2")
        if self.step_tolerance <= 0 or self.cost_tolerance <= 0:
            raise ValueError("tolerances must be positive")


def tracking_weights(w_x, p_on_road: float) -> np.ndarray:
    """Position and yaw weights scaled by (p_on_road + 0.5); velocity weights untouched."""
    w = np.array(w_x, dtype=float)
    w[:3] *= p_on_road + 0.5
    return w


@dataclass
class MPCSolution:
    controls: np.ndarray
    predicted_states: np.ndarray
    total_cost: float
    cost_breakdown: dict
    iterations: int
    converged: bool
    status: str = ""
    start_cost: float = float("nan")
    weights: Optional[np.ndarray] = None
    k_o_effective: float = 0.0
    d_safety: Optional[float] = None
    emergency: bool = False

    @property
    def first_control(self) -> ControlInput:
        return ControlInput.from_array(self.controls[0])


class MPCProblem:
    """One cycle's optimal-control problem with everything packed for the compiled kernel."""

    def __init__(self, state0: VehicleState, reference: ReferenceTrajectory,
                 obstacles: Sequence[ObstacleDescriptor], gains: PFGains, config: MPCConfig,
                 params: VehicleParams, u_prev: Optional[ControlInput] = None,
                 p_on_road: float = 1.0, d_safety: Optional[float] = None):
        n = config.horizon
        if len(reference) != n + 1:
            raise ValueError(f"reference has {len(reference)} states, horizon needs {n + 1}")
        self.state0 = state0
        self.reference = reference
        self.obstacles = tuple(obstacles)
        self.gains = gains
        self.config = config
        self.params = params
        self.p_on_road = p_on_road
        self.d_safety = d_safety
        self.u_prev = u_prev if u_prev is not None else ControlInput()
        self.k_o_effective = effective_obstacle_gain(gains.k_base, p_on_road)

        self._x0 = state0.as_array()
        self._xref = np.ascontiguousarray(reference.x, dtype=float)
        self._w = tracking_weights(config.w_x, p_on_road)
        self._wdu = np.array(config.w_du)
        self._wu = np.array(config.w_u)
        self._uprev = self.u_prev.as_array()
        self._obs = obstacle_array(self.obstacles, gains, self.k_o_effective)
        self._obs_dt = params.dt if config.propagate_obstacles else 0.0
        self._dsafe = -1.0 if d_safety is None else float(d_safety)
        self._xmin = np.array(params.x_min)
        self._xmax = np.array(params.x_max)
        self._p = params.as_array()
        self.u_lo = np.array(params.u_min)
        self.u_hi = np.array(params.u_max)
        # scratch
        self._X = np.empty((n + 1, 6))
        self._A = np.empty((6, 6))
        self._B = np.empty((6, 2))
        self._flags = np.empty(n, dtype=np.int64)
        self._terms = np.empty(K.N_TERMS)
        self.evaluations = 0

    @property
    def horizon(self) -> int:
        return self.config.horizon

    @property
    def weights(self) -> np.ndarray:
        return self._w.copy()

    def _run(self, U, want_grad):
        U = np.ascontiguousarray(U, dtype=float)
        grad = np.zeros_like(U)
        self.evaluations += 1
        total = K.horizon_cost(
            self._x0, U, self._xref, self._w, self._wdu, self._wu, self._uprev, self._obs,
            self._obs_dt, self.gains.k_c, self._dsafe,
            self.gains.front_speed_mode, self._xmin, self._xmax,
            self.config.state_bound_weight, self.gains.rotation_mode, self.gains.q_cap,
            self._p, self._X, self._A, self._B, self._flags, grad, self._terms, want_grad,
        )
        return total, grad

    def cost(self, U) -> float:
        return self._run(U, False)[0]

    def cost_and_grad(self, U):
        return self._run(U, True)

    def breakdown(self, U) -> dict:
        self._run(U, False)
        return dict(zip(TERM_NAMES, (float(v) for v in self._terms)))

    def predict(self, U) -> np.ndarray:
        self._run(U, False)
        return self._X.copy()

    def project(self, U) -> np.ndarray:
        return np.clip(U, self.u_lo, self.u_hi)


def evaluate_cost(state0: VehicleState, controls, reference: ReferenceTrajectory,
                  obstacles: Sequence[ObstacleDescriptor], gains: PFGains, config: MPCConfig,
                  u_prev: Optional[ControlInput] = None, params: Optional[VehicleParams] = None,
                  p_on_road: float = 1.0, d_safety: Optional[float] = None):
    """Total cost of a control sequence and its per-term breakdown."""
    params = params or VehicleParams()
    U = _as_control_array(controls)
    prob = MPCProblem(state0, reference, obstacles, gains, replace(config, horizon=len(U)), params,
                      u_prev, p_on_road, d_safety)
    bd = prob.breakdown(U)
    return sum(bd.values()), bd


def _as_control_array(controls) -> np.ndarray:
    if isinstance(controls, np.ndarray):
        return np.asarray(controls, dtype=float).reshape(-1, 2)
    return np.array([[c.accel, c.steer] for c in controls], dtype=float).reshape(-1, 2)


def shift_controls(U: np.ndarray) -> np.ndarray:
    """Advance a plan by one step, repeating the last control."""
    out = np.empty_like(U)
    out[:-1] = U[1:]
    out[-1] = U[-1]
    return out


def solve(problem: MPCProblem, warm_start: Optional[MPCSolution] = None) -> MPCSolution:
    cfg = problem.config
    n = problem.horizon
    if warm_start is not None and len(warm_start.controls) == n:
        U = problem.project(shift_controls(np.asarray(warm_start.controls, dtype=float)))
    else:
        U = np.zeros((n, 2))
    scale = problem.u_hi - problem.u_lo
    scale = np.where(scale > 0, scale, 1.0)

    f, g = problem.cost_and_grad(U)
    f_start = f
    alpha = None
    status = "max_iters"
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        gz = g * scale
        # projected-gradient stationarity in scaled coordinates
        pg = problem.project(U - g * scale * scale) - U
        if np.max(np.abs(pg / scale)) < cfg.step_tolerance:
            status, converged = "stationary", True
            break
        if alpha is None:
            alpha = 0.1 / max(np.max(np.abs(gz)), 1e-12)
        step = alpha
        accepted = False
        for _ in range(cfg.max_backtracks):
            trial = problem.project(U - step * gz * scale)
            d = trial - U
            if not np.any(d):
                break
            ft, gt = problem.cost_and_grad(trial)
            if ft <= f + cfg.armijo * float(np.sum(g * d)):
                accepted = True
                break
            step *= cfg.backtrack
        if not accepted:
            status = "no_progress" if it == 1 else "line_search"
            break
        s = d / scale
        y = (gt - g) * scale
        sy = float(np.sum(s * y))
        alpha = min(max(float(np.sum(s * s)) / sy, 1e-10), 1e10) if sy > 0 else step * 4.0
        small_step = np.max(np.abs(d)) < cfg.step_tolerance
        small_drop = (f - ft) <= cfg.cost_tolerance * max(1.0, abs(f))
        U, f, g = trial, ft, gt
        if small_step or small_drop:
            status, converged = "converged", True
            break

    X = problem.predict(U)
    bd = problem.breakdown(U)
    total = sum(bd.values())
    return MPCSolution(
        controls=U, predicted_states=X, total_cost=total, cost_breakdown=bd, iterations=it,
        converged=converged, status=status, start_cost=f_start, weights=problem.weights,
        k_o_effective=problem.k_o_effective, d_safety=problem.d_safety,
    )


def emergency_solution(problem_horizon: int, params: VehicleParams, state0: VehicleState) -> MPCSolution:
    U = np.zeros((problem_horizon, 2))
    U[:, 0] = params.u_min[0]
    from .dynamics import rollout_array

    X = rollout_array(state0.as_array(), U, params)
    return MPCSolution(U, X, float("nan"), {k: float("nan") for k in TERM_NAMES}, 0, False,
                       status="emergency", emergency=True)


def control_cycle(ego: VehicleState, planner: PlannerOutput, config, previous: Optional[MPCSolution] = None,
                  u_prev: Optional[ControlInput] = None):
    """One controller tick: planner output (ego frame) -> gated first control and the full solution.

    ``config`` is a ``pfmpc.config.Config``.
    """
    params = config.vehicle
    mpc_cfg = config.mpc
    if len(planner.waypoints) < 2:
        return ControlInput(params.u_min[0], 0.0), emergency_solution(mpc_cfg.horizon, params, ego)

    world = to_global(planner, (ego.px, ego.py, ego.phi))
    target = gated_target_speed(planner.target_speed, world, config.gates)
    try:
        ref = build_reference(world.waypoints, ego, target, mpc_cfg.horizon, params.dt)
    except ReferenceBuildError:
        log.warning("degenerate waypoints, emergency stop")
        return ControlInput(params.u_min[0], 0.0), emergency_solution(mpc_cfg.horizon, params, ego)

    corridor = params.width / 2.0 + config.pf.corridor_margin
    d_safety = select_front_obstacle(ego, ref, world.obstacles, corridor)
    problem = MPCProblem(ego, ref, world.obstacles, config.pf, mpc_cfg, params, u_prev,
                         planner.p_on_road, d_safety)
    sol = solve(problem, previous if previous is not None and not previous.emergency else None)
    control = gate_controls(sol.first_control, world, config.gates, params)
    return control, sol


class SafetyController:
    """Stateful wrapper: keeps the warm start and the last applied control between ticks."""

    def __init__(self, config, name: str = "mpc"):
        self.config = config
        self.name = name
        self.reset()

    def reset(self):
        self.previous: Optional[MPCSolution] = None
        self.u_prev = ControlInput()
        self.info: dict = {}

    def __call__(self, ego: VehicleState, planner: PlannerOutput) -> ControlInput:
        control, sol = control_cycle(ego, planner, self.config, self.previous, self.u_prev)
        self.previous = None if sol.emergency else sol
        self.u_prev = control
        self.info = {
            "cost_total": sol.total_cost,
            **{f"cost_{k}": v for k, v in sol.cost_breakdown.items()},
            "f_o": current_potential(ego, planner, self.config),
            "d_safety": sol.d_safety,
            "iterations": sol.iterations,
            "emergency": sol.emergency,
            "k_o": sol.k_o_effective,
        }
        return control


def current_potential(ego: VehicleState, planner: PlannerOutput, config) -> float:
    """Obstacle potential at the ego's current position (for logging)."""
    world = to_global(planner, (ego.px, ego.py, ego.phi))
    k_o = effective_obstacle_gain(config.pf.k_base, planner.p_on_road)
    obs = obstacle_array(world.obstacles, config.pf, k_o)
    f, _, _ = K.obstacle_field(ego.px, ego.py, obs, 0.0, config.pf.rotation_mode, config.pf.q_cap)
    return float(f)
