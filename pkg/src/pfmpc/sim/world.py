"""Closed-loop simulation: scripted agents, the planner surrogate, and the run loop."""

import csv
import io
import json
import logging
import math
import time
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from ..config import Config
from ..dynamics import VehicleState, step
from ..potential import ObstacleDescriptor
from ..reference import PlannerOutput, to_ego
from .geometry import box_corners, box_distance, boxes_overlap
from .metrics import Event, RouteProgress, SimMetrics, infraction_score
from .scenario import AgentSpec, ScenarioSpec

log = logging.getLogger(__name__)

LOG_COLUMNS = (
    "t", "px", "py", "phi", "vx", "vy", "omega", "accel", "steer",
    "cost_total", "cost_tracking", "cost_smoothness", "cost_effort", "cost_obstacle",
    "cost_front", "cost_bounds", "f_o", "d_safety", "gate_red", "gate_junction",
    "p_on_road", "emergency", "progress",
)


@dataclass(frozen=True)
class AgentPose:
    name: str
    cls: str
    x: float
    y: float
    theta: float
    vx: float
    vy: float
    length: float
    width: float

    @property
    def corners(self) -> np.ndarray:
        return box_corners(self.x, self.y, self.theta, self.length, self.width)


def agent_pose(agent: AgentSpec, t: float) -> AgentPose:
    if agent.schedule is not None:
        rows = np.asarray(agent.schedule)
        ts = rows[:, 0]
        x, y, th = (float(np.interp(t, ts, rows[:, i])) for i in (1, 2, 3))
        i = int(np.searchsorted(ts, t, side="right")) - 1
        if 0 <= i < len(ts) - 1:
            h = ts[i + 1] - ts[i]
            vx = (rows[i + 1, 1] - rows[i, 1]) / h
            vy = (rows[i + 1, 2] - rows[i, 2]) / h
        else:
            vx = vy = 0.0
    else:
        c, s = math.cos(agent.theta), math.sin(agent.theta)
        vx, vy = agent.speed * c, agent.speed * s
        x, y, th = agent.x + vx * t, agent.y + vy * t, agent.theta
    return AgentPose(agent.name, agent.cls, x, y, th, float(vx), float(vy), agent.length, agent.width)


def _point_along(pts: np.ndarray, cum: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Points at arc lengths s on a polyline, extrapolated straight past either end."""
    out = np.empty((len(s), 2))
    for j, sj in enumerate(s):
        if sj >= cum[-1]:
            d = pts[-1] - pts[-2]
            out[j] = pts[-1] + (sj - cum[-1]) * d / np.linalg.norm(d)
        elif sj <= 0:
            d = pts[1] - pts[0]
            out[j] = pts[0] + sj * d / np.linalg.norm(d)
        else:
            i = int(np.searchsorted(cum, sj, side="right")) - 1
            u = (sj - cum[i]) / (cum[i + 1] - cum[i])
            out[j] = pts[i] + u * (pts[i + 1] - pts[i])
    return out


class PlannerSurrogate:
    """Scripted stand-in for the perception/planning network.

    Emits waypoints sampled along the scenario's planned path (including any injected flaw),
    every agent inside perception range as an obstacle ellipse, and the scripted traffic
    probabilities, all in the ego frame.
    """

    def __init__(self, scenario: ScenarioSpec, config: Config, seed: int = 0):
        self.scenario = scenario
        self.script = scenario.surrogate
        self.config = config
        self.rng = np.random.default_rng(seed)
        path = scenario.planned_path
        keep = np.concatenate([[True], np.hypot(*np.diff(path, axis=0).T) > 1e-9])
        self.path = path[keep]
        self.tracker = RouteProgress(self.path, back=5.0, ahead=10.0)

    def __call__(self, t: float, ego: VehicleState, agents: List[AgentPose], route_progress: float) -> PlannerOutput:
        sc = self.script
        s0 = self.tracker.update((ego.px, ego.py))
        s = s0 + sc.first_offset + sc.spacing * np.arange(sc.num_waypoints)
        wp = _point_along(self.path, self.tracker.cum, s)
        if sc.noise_std > 0:
            wp = wp + self.rng.normal(0.0, sc.noise_std, wp.shape)

        pf = self.config.pf
        rng = self.config.sim.perception_range
        obstacles = []
        for a in agents:
            if math.hypot(a.x - ego.px, a.y - ego.py) > rng:
                continue
            obstacles.append(ObstacleDescriptor.from_footprint(
                a.cls, a.x, a.y, a.theta, a.length, a.width, a.vx, a.vy,
                pf.axis_len_scale, pf.axis_wid_scale))
        world = PlannerOutput(
            waypoints=wp,
            obstacles=tuple(obstacles),
            p_red_light=sc.p_red_light(t, route_progress),
            p_stop_junction=sc.p_stop_junction(t, route_progress),
            p_on_road=sc.p_on_road(t, route_progress),
            target_speed=sc.target_speed,
        )
        return to_ego(world, (ego.px, ego.py, ego.phi))


def _collision_kind(cls: str) -> str:
    if cls == "pedestrian":
        return "collision_pedestrian"
    if cls == "static":
        return "collision_static"
    return "collision_vehicle"


@dataclass
class RunResult:
    scenario: str
    controller: str
    seed: int
    metrics: SimMetrics
    log: List[dict]
    wall_time: float


def run(scenario: ScenarioSpec, controller: Callable, seed: int = 0, config: Optional[Config] = None,
        controller_name: Optional[str] = None) -> RunResult:
    """Simulate one scenario in closed loop.

    ``controller(ego, planner_output) -> ControlInput``; an optional ``info`` dict attribute on
    the controller is copied into the trajectory log each tick.
    """
    config = config or Config()
    params = config.vehicle
    dt = params.dt
    start = time.perf_counter()
    name = controller_name or getattr(controller, "name", type(controller).__name__)
    if hasattr(controller, "reset"):
        controller.reset()

    surrogate = PlannerSurrogate(scenario, config, seed)
    route = RouteProgress(scenario.route_array)
    route_end = scenario.route_array[-1]
    metrics = SimMetrics()
    rows: List[dict] = []
    ego = scenario.ego_start
    in_contact = {a.name: False for a in scenario.agents}
    stall_time = 0.0
    t = 0.0
    n_steps = int(round(scenario.duration_max / dt))

    def check(ego: VehicleState, t: float, agents: List[AgentPose]):
        ego_box = box_corners(ego.px, ego.py, ego.phi, params.length, params.width)
        for a in agents:
            box = a.corners
            hit = boxes_overlap(ego_box, box)
            if hit and not in_contact[a.name]:
                metrics.events.append(Event(_collision_kind(a.cls), t, ego.px, ego.py, a.name))
            in_contact[a.name] = hit
            d = 0.0 if hit else box_distance(ego_box, box)
            metrics.min_distance_by_agent[a.name] = min(metrics.min_distance_by_agent.get(a.name, math.inf), d)
            metrics.min_obstacle_distance = min(metrics.min_obstacle_distance, d)

    agents = [agent_pose(a, 0.0) for a in scenario.agents]
    check(ego, 0.0, agents)
    progress = route.update((ego.px, ego.py))

    for k in range(n_steps):
        t = k * dt
        planner = surrogate(t, ego, agents, progress)
        try:
            control = controller(ego, planner)
        except Exception as exc:  # noqa: BLE001 - any controller failure invalidates the run
            log.error("controller failed at t=%.1f: %s", t, exc)
            metrics.valid = False
            metrics.error = f"{type(exc).__name__}: {exc}"
            break
        control = params.clip_control(control)
        info = getattr(controller, "info", {}) or {}
        rows.append(_log_row(t, ego, control, info, planner, config, progress))

        prev_progress = progress
        ego = step(ego, control, params)
        t_next = (k + 1) * dt
        agents = [agent_pose(a, t_next) for a in scenario.agents]
        check(ego, t_next, agents)
        progress = route.update((ego.px, ego.py))

        for line in scenario.stop_lines:
            if prev_progress < line.s <= progress and any(t0 <= t_next <= t1 for t0, t1 in line.red):
                metrics.events.append(Event("red_light", t_next, ego.px, ego.py, f"stop@{line.s:g}"))

        metrics.sim_time = t_next
        near_end = math.hypot(ego.px - route_end[0], ego.py - route_end[1]) <= scenario.success_radius
        # progress guard: a looping route passes its own end point before finishing
        if near_end and progress >= route.length - 2.0 * scenario.success_radius:
            metrics.completed = True
            break
        if math.hypot(ego.vx, ego.vy) < config.sim.deadlock_speed:
            stall_time += dt
            if stall_time >= config.sim.deadlock_time - 1e-9:
                metrics.deadlock = True
                break
        else:
            stall_time = 0.0

    metrics.route_completion = 1.0 if metrics.completed else min(route.fraction, 1.0)
    metrics.infraction_score = infraction_score(metrics.events, config.infractions)
    return RunResult(scenario.name, name, seed, metrics, rows, time.perf_counter() - start)


def _log_row(t, ego, control, info, planner, config, progress) -> dict:
    g = config.gates
    row = {
        "t": t, "px": ego.px, "py": ego.py, "phi": ego.phi, "vx": ego.vx, "vy": ego.vy,
        "omega": ego.omega, "accel": control.accel, "steer": control.steer,
        "gate_red": planner.p_red_light > g.red_threshold,
        "gate_junction": planner.p_stop_junction > g.junction_threshold,
        "p_on_road": planner.p_on_road, "progress": progress,
    }
    for col in LOG_COLUMNS:
        if col not in row:
            row[col] = info.get(col)
    return row


def format_log(rows: List[dict], precision: int = 6) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LOG_COLUMNS)
    for r in rows:
        out = []
        for col in LOG_COLUMNS:
            v = r.get(col)
            if v is None:
                out.append("")
            elif isinstance(v, (bool, np.bool_)):
                out.append(str(int(v)))
            elif isinstance(v, (int, np.integer)):
                out.append(str(int(v)))
            else:
                v = float(v)
                out.append("nan" if math.isnan(v) else f"{v:.{precision}f}")
        w.writerow(out)
    return buf.getvalue()


def metrics_record(result: RunResult, timestamps: bool = True) -> dict:
    m = result.metrics
    rec = {
        "name": result.scenario,
        "controller": result.controller,
        "seed": result.seed,
        "route_completion": m.route_completion,
        "infraction_score": m.infraction_score,
        "driving_score": m.driving_score,
        "events": [e.as_dict() for e in m.events],
        "collisions": len(m.collision_events),
        "min_obstacle_distance": None if math.isinf(m.min_obstacle_distance) else round(m.min_obstacle_distance, 6),
        "min_distance_by_agent": {k: round(v, 6) for k, v in sorted(m.min_distance_by_agent.items())},
        "deadlock": m.deadlock,
        "completed": m.completed,
        "valid": m.valid,
        "sim_time": round(m.sim_time, 6),
    }
    if m.error:
        rec["error"] = m.error
    if timestamps:
        rec["wall_time"] = round(result.wall_time, 3)
    return rec


def dumps_record(rec: dict) -> str:
    return json.dumps(rec, indent=2, sort_keys=True) + "\n"
