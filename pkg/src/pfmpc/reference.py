"""Planner output handling: frame transforms, spline reference generation, traffic gates."""

import math
from dataclasses import dataclass, replace
from typing import List

import numpy as np

from .dynamics import ControlInput, VehicleParams, VehicleState, wrap_angle


class ReferenceBuildError(ValueError):
    pass


@dataclass(frozen=True)
class PlannerOutput:
    """What the upstream planner hands the controller each cycle.

    ``target_speed`` is the cruise speed the planner asks for; the remaining fields mirror
    the network head (waypoints, detected obstacles, traffic probabilities).
    """

    waypoints: np.ndarray
    obstacles: tuple = ()
    p_red_light: float = 0.0
    p_stop_junction: float = 0.0
    p_on_road: float = 1.0
    target_speed: float = 0.0

    def __post_init__(self):
        wp = np.asarray(self.waypoints, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "waypoints", wp)
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        for name in ("p_red_light", "p_stop_junction", "p_on_road"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")


@dataclass
class ReferenceTrajectory:
    """N+1 reference states (global frame) as an (N+1, 6) array."""

    x: np.ndarray
    target_speed: float

    @property
    def positions(self) -> np.ndarray:
        return self.x[:, :2]

    @property
    def states(self) -> List[VehicleState]:
        return [VehicleState.from_array(row) for row in self.x]

    def __len__(self):
        return len(self.x)


def _transform(output: PlannerOutput, px, py, phi) -> PlannerOutput:
    c, s = math.cos(phi), math.sin(phi)
    R = np.array([[c, -s], [s, c]])
    wp = output.waypoints @ R.T + np.array([px, py])
    obs = []
    for ob in output.obstacles:
        cx, cy = R @ (ob.cx, ob.cy) + (px, py)
        vx, vy = R @ (ob.speed_x, ob.speed_y)
        obs.append(replace(ob, cx=float(cx), cy=float(cy), theta=wrap_angle(ob.theta + phi),
                           speed_x=float(vx), speed_y=float(vy)))
    return replace(output, waypoints=wp, obstacles=tuple(obs))


def to_global(output: PlannerOutput, ego_pose) -> PlannerOutput:
    """Ego-frame planner output -> global frame, given ego pose (px, py, phi)."""
    px, py, phi = ego_pose
    return _transform(output, px, py, phi)


def to_ego(output: PlannerOutput, ego_pose) -> PlannerOutput:
    """Inverse of to_global."""
    px, py, phi = ego_pose
    c, s = math.cos(phi), math.sin(phi)
    # translation expressed in the rotated frame: -R(-phi) p
    tx = -(c * px + s * py)
    ty = -(-s * px + c * py)
    return _transform(output, tx, ty, -phi)


class CatmullRomSpline:
    """C1 cubic Hermite curve through points, parameterized by cumulative chord length.

    Tangents are the chord-normalized central differences, reflected about the end chords at
    the two ends.
    """

    def __init__(self, points, samples_per_segment: int = 32):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        keep = [0]
        for i in range(1, len(pts)):
            if np.hypot(*(pts[i] - pts[keep[-1]])) > 1e-9:
                keep.append(i)
        pts = pts[keep]
        if len(pts) < 2:
            raise ReferenceBuildError("need at least 2 distinct waypoints")
        self.points = pts
        chords = np.hypot(*np.diff(pts, axis=0).T)
        self.knots = np.concatenate([[0.0], np.cumsum(chords)])

        n = len(pts)
        tang = np.empty_like(pts)
        tang[0] = (pts[1] - pts[0]) / chords[0]
        tang[-1] = (pts[-1] - pts[-2]) / chords[-1]
        if n > 2:
            tang[1:-1] = (pts[2:] - pts[:-2]) / (self.knots[2:] - self.knots[:-2])[:, None]
            # end tangents reflected about the end chord (parabolic end condition); the one-sided
            # chord flips the sign of curvature on the first and last segments of a bend
            tang[0] = 2.0 * tang[0] - tang[1]
            tang[-1] = 2.0 * tang[-1] - tang[-2]
        self.tangents = tang

        # dense table for arc length and projection
        u = np.linspace(0.0, 1.0, samples_per_segment, endpoint=False)
        t_dense = (self.knots[:-1, None] + chords[:, None] * u[None, :]).ravel()
        self.t_dense = np.concatenate([t_dense, [self.knots[-1]]])
        self.p_dense = self.evaluate(self.t_dense)
        seg = np.hypot(*np.diff(self.p_dense, axis=0).T)
        self.s_dense = np.concatenate([[0.0], np.cumsum(seg)])

    @property
    def length(self) -> float:
        return float(self.s_dense[-1])

    def _locate(self, t):
        t = np.clip(np.asarray(t, dtype=float), self.knots[0], self.knots[-1])
        i = np.clip(np.searchsorted(self.knots, t, side="right") - 1, 0, len(self.knots) - 2)
        h = self.knots[i + 1] - self.knots[i]
        return i, (t - self.knots[i]) / h, h

    def evaluate(self, t, order: int = 0):
        """Position (order 0) or its first/second derivative w.r.t. the chord parameter."""
        i, u, h = self._locate(t)
        u = u[..., None]
        h_ = h[..., None]
        p0, p1 = self.points[i], self.points[i + 1]
        m0, m1 = self.tangents[i] * h_, self.tangents[i + 1] * h_
        if order == 0:
            u2, u3 = u * u, u * u * u
            return ((2 * u3 - 3 * u2 + 1) * p0 + (u3 - 2 * u2 + u) * m0
                    + (-2 * u3 + 3 * u2) * p1 + (u3 - u2) * m1)
        if order == 1:
            u2 = u * u
            return ((6 * u2 - 6 * u) * p0 + (3 * u2 - 4 * u + 1) * m0
                    + (-6 * u2 + 6 * u) * p1 + (3 * u2 - 2 * u) * m1) / h_
        if order == 2:
            return ((12 * u - 6) * p0 + (6 * u - 4) * m0 + (-12 * u + 6) * p1 + (6 * u - 2) * m1) / (h_ * h_)
        raise ValueError("order must be 0, 1 or 2")

    def __call__(self, t):
        return self.evaluate(t)

    def param_at_arclength(self, s):
        return np.interp(s, self.s_dense, self.t_dense)

    def project(self, point) -> float:
        """Arc length of the dense-polyline point closest to ``point``."""
        from .potential import point_to_polyline

        _, s = point_to_polyline(point, self.p_dense)
        return s


def build_reference(waypoints_global, ego: VehicleState, target_speed: float, horizon: int,
                    dt: float) -> ReferenceTrajectory:
    """Resample the waypoint spline into N+1 reference states spaced target_speed*dt apart.

    Sampling starts at the ego's projection onto the spline; before the first waypoint and
    past the last one the reference continues straight along the end tangents.
    """
    if target_speed < 0:
        raise ReferenceBuildError("target_speed must be non-negative")
    spline = CatmullRomSpline(waypoints_global)
    s0 = spline.project((ego.px, ego.py))
    start = spline.points[0]
    start_dir = spline.tangents[0] / np.linalg.norm(spline.tangents[0])
    if s0 == 0.0:
        # ego behind the first waypoint: start on the backward extension of the first tangent
        s0 = min(0.0, float(np.dot((ego.px - start[0], ego.py - start[1]), start_dir)))
    s = s0 + target_speed * dt * np.arange(horizon + 1)
    inside = s <= spline.length
    t = spline.param_at_arclength(np.clip(s, 0.0, spline.length))
    pos = spline.evaluate(t)
    d1 = spline.evaluate(t, 1)
    d2 = spline.evaluate(t, 2)
    speed = np.hypot(d1[:, 0], d1[:, 1])
    heading = np.arctan2(d1[:, 1], d1[:, 0])
    curv = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / np.maximum(speed, 1e-12) ** 3

    if not inside.all():
        end_dir = d1[~inside][0] / max(speed[~inside][0], 1e-12)
        over = (s - spline.length)[~inside]
        end = spline.evaluate(np.array([spline.knots[-1]]))[0]
        pos[~inside] = end + over[:, None] * end_dir
        heading[~inside] = math.atan2(end_dir[1], end_dir[0])
        curv[~inside] = 0.0

    before = s < 0.0
    if before.any():
        pos[before] = start + s[before, None] * start_dir
        heading[before] = math.atan2(start_dir[1], start_dir[0])
        curv[before] = 0.0

    x = np.zeros((horizon + 1, 6))
    x[:, :2] = pos
    x[:, 2] = [wrap_angle(h) for h in heading]
    x[:, 3] = target_speed
    x[:, 5] = curv * target_speed
    return ReferenceTrajectory(x=x, target_speed=float(target_speed))


@dataclass(frozen=True)
class GateThresholds:
    red_threshold: float = 0.5
    junction_threshold: float = 0.5
    junction_slow_factor: float = 0.5


def gate_controls(control: ControlInput, output: PlannerOutput, thresholds: GateThresholds,
                  params: VehicleParams) -> ControlInput:
    """Full brake (and no throttle) when a red light is likely."""
    if output.p_red_light > thresholds.red_threshold:
        return ControlInput(params.u_min[0], control.steer)
    return control


def gated_target_speed(target_speed: float, output: PlannerOutput, thresholds: GateThresholds) -> float:
    """Cruise speed after the stop-junction slowdown."""
    if output.p_stop_junction > thresholds.junction_threshold:
        return target_speed * thresholds.junction_slow_factor
    return target_speed
