"""Elliptic repulsive obstacle potentials and the front-obstacle (ACC) cost."""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from . import _kernels as K

FRONT_EPS = 0.001  # m, keeps the ACC cost finite at zero gap
FRONT_REACH = 1000.0  # m, straight extension of the reference when looking for a front obstacle


class ObstacleClass(str, Enum):
    VEHICLE = "vehicle"
    CYCLIST = "cyclist"
    PEDESTRIAN = "pedestrian"
    STATIC = "static"


@dataclass(frozen=True)
class ObstacleDescriptor:
    """One potential-field ellipse: semi-axes a (along theta) and b (across)."""

    cls: ObstacleClass
    cx: float
    cy: float
    theta: float
    half_len_a: float
    half_wid_b: float
    speed_x: float = 0.0
    speed_y: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "cls", ObstacleClass(self.cls))
        if not (self.half_len_a > 0 and self.half_wid_b > 0):
            raise ValueError("ellipse axes must be positive")
        if self.half_len_a < self.half_wid_b:
            raise ValueError("half_len_a must be >= half_wid_b")

    @classmethod
    def from_footprint(cls, obstacle_class, cx, cy, theta, length, width,
                       speed_x=0.0, speed_y=0.0, len_scale=2.0, wid_scale=1.25):
        a = length * len_scale
        b = width * wid_scale
        return cls(obstacle_class, cx, cy, theta, max(a, b), b, speed_x, speed_y)


DEFAULT_CLASS_SCALE = {
    ObstacleClass.VEHICLE: 1.0,
    ObstacleClass.CYCLIST: 2.0,
    ObstacleClass.PEDESTRIAN: 3.0,
    ObstacleClass.STATIC: 1.0,
}


FRONT_SPEED_MODES = {"predicted": K.FC_PREDICTED, "current": K.FC_CURRENT, "midpoint": K.FC_MIDPOINT,
                     "first": K.FC_FIRST}


@dataclass(frozen=True)
class PFGains:
    k_base: float = 60.0
    class_scale: dict = field(default_factory=lambda: dict(DEFAULT_CLASS_SCALE))
    k_c: float = 1000.0
    d_epsilon: float = FRONT_EPS
    # normalized squared distance at which the potential saturates (cap = gain / q_cap)
    q_cap: float = 0.1
    rotation: str = "standard"  # or "printed"
    axis_len_scale: float = 2.0
    axis_wid_scale: float = 1.25
    # front-corridor half-width is ego_width / 2 + corridor_margin
    corridor_margin: float = 0.5
    # how the front cost enters the horizon: "first" charges only the first control against the
    # measured speed; "predicted", "midpoint" and "current" charge every step's accel against the
    # step's start speed, the step's mean speed, or the measured speed
    front_speed: str = "first"

    def __post_init__(self):
        scale = {ObstacleClass(k): float(v) for k, v in self.class_scale.items()}
        for c in ObstacleClass:
            scale.setdefault(c, DEFAULT_CLASS_SCALE[c])
        object.__setattr__(self, "class_scale", scale)
        if self.k_base < 0 or self.k_c < 0 or any(v < 0 for v in scale.values()):
            raise ValueError("gains must be non-negative")
        if not (scale[ObstacleClass.PEDESTRIAN] >= scale[ObstacleClass.CYCLIST] >= scale[ObstacleClass.VEHICLE]):
            raise ValueError("class scales must satisfy pedestrian >= cyclist >= vehicle")
        if self.rotation not in ("standard", "printed"):
            raise ValueError(f"unknown ellipse rotation {self.rotation!r}")
        if self.front_speed not in FRONT_SPEED_MODES:
            raise ValueError(f"unknown front_speed {self.front_speed!r}")
        if self.q_cap <= 0:
            raise ValueError("q_cap must be positive")

    @property
    def rotation_mode(self) -> int:
        return K.ROT_PRINTED if self.rotation == "printed" else K.ROT_STANDARD

    @property
    def front_speed_mode(self) -> int:
        return FRONT_SPEED_MODES[self.front_speed]

    def zeroed(self) -> "PFGains":
        return replace(self, k_base=0.0, k_c=0.0)


def effective_obstacle_gain(k_base: float, p_on_road: float) -> float:
    """Obstacle gain amplified off-road: k_base / (p_on_road + 0.5)."""
    if not 0.0 <= p_on_road <= 1.0:
        raise ValueError(f"p_on_road must be in [0, 1], got {p_on_road}")
    return k_base / (p_on_road + 0.5)


def rotate_into_ellipse(ego_x: float, ego_y: float, obstacle: ObstacleDescriptor, rotation: str = "standard"):
    """Ego position expressed in the obstacle's ellipse axes, re-anchored at the obstacle center.

    ``standard`` rotates the offset by -theta (a rigid change of frame).
    ``printed`` multiplies diag(dx, dy) by [[cos, sin], [-sin, cos]] and sums each row,
    i.e. x_rot = cx + dx (cos + sin), y_rot = cy + dy (cos - sin).
    """
    c = math.cos(obstacle.theta)
    s = math.sin(obstacle.theta)
    dx = ego_x - obstacle.cx
    dy = ego_y - obstacle.cy
    if rotation == "printed":
        prod = np.array([[dx, 0.0], [0.0, dy]]) @ np.array([[c, s], [-s, c]])
        xr, yr = prod.sum(axis=1)
    elif rotation == "standard":
        xr = dx * c + dy * s
        yr = -dx * s + dy * c
    else:
        raise ValueError(f"unknown rotation {rotation!r}")
    return obstacle.cx + xr, obstacle.cy + yr


def obstacle_array(obstacles: Sequence[ObstacleDescriptor], gains: PFGains, k_o_effective: float) -> np.ndarray:
    """Pack obstacles into kernel rows, folding the class scale into the gain."""
    arr = np.zeros((len(obstacles), 9))
    for i, ob in enumerate(obstacles):
        arr[i] = (ob.cx, ob.cy, math.cos(ob.theta), math.sin(ob.theta), ob.half_len_a, ob.half_wid_b,
                  ob.speed_x, ob.speed_y, k_o_effective * gains.class_scale[ob.cls])
    return arr


def obstacle_potential(ego_x: float, ego_y: float, obstacles: Sequence[ObstacleDescriptor],
                       gains: PFGains, k_o_effective: float, return_flag: bool = False):
    """Sum of K_o / (normalized squared elliptic distance) over obstacles.

    Each term saturates at K_o / q_cap once the normalized distance drops below q_cap;
    with ``return_flag`` the second value tells whether any term saturated.
    """
    total = 0.0
    capped = False
    for ob in obstacles:
        xr, yr = rotate_into_ellipse(ego_x, ego_y, ob, gains.rotation)
        q = (xr - ob.cx) ** 2 / ob.half_len_a ** 2 + (yr - ob.cy) ** 2 / ob.half_wid_b ** 2
        k_o = k_o_effective * gains.class_scale[ob.cls]
        if q > gains.q_cap:
            total += k_o / q
        else:
            total += k_o / gains.q_cap
            capped = True
    if return_flag:
        return total, capped
    return total


def front_obstacle_cost(accel_cmd: float, ego_speed: float, d_safety: Optional[float], gains: PFGains) -> float:
    """K_c * accel * speed / (d_safety + eps); zero when nothing is ahead (d_safety is None)."""
    if d_safety is None:
        return 0.0
    return gains.k_c * accel_cmd * ego_speed / (d_safety + gains.d_epsilon)


def point_to_polyline(point, polyline):
    """Distance from point to a polyline and the arc length of the closest point on it."""
    pts = np.asarray(polyline, dtype=float)
    p = np.asarray(point, dtype=float)
    if len(pts) == 1:
        return float(np.hypot(*(p - pts[0]))), 0.0
    a = pts[:-1]
    seg = pts[1:] - a
    seg_len2 = np.einsum("ij,ij->i", seg, seg)
    t = np.where(seg_len2 > 0, np.einsum("ij,ij->i", p - a, seg) / np.where(seg_len2 > 0, seg_len2, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    proj = a + seg * t[:, None]
    dist = np.hypot(*(p - proj).T)
    i = int(np.argmin(dist))
    seg_len = np.sqrt(seg_len2)
    s = float(seg_len[:i].sum() + t[i] * seg_len[i])
    return float(dist[i]), s


def select_front_obstacle(ego, reference, obstacles: Sequence[ObstacleDescriptor],
                          corridor_halfwidth: float) -> Optional[float]:
    """Distance to the nearest obstacle center lying inside the corridor around the reference path ahead.

    ``reference`` is a ReferenceTrajectory (or anything with ``.positions``); returns None when
    the corridor is empty.
    """
    path = reference.positions if hasattr(reference, "positions") else np.asarray(reference)
    if len(path) == 0:
        raise ValueError("reference must be non-empty")
    heading = np.array([math.cos(ego.phi), math.sin(ego.phi)])
    ego_xy = np.array([ego.px, ego.py])
    # the path ahead continues along its final tangent, so a short horizon does not hide obstacles
    tail = path[-1] - path[-2] if len(path) > 1 else np.zeros(2)
    norm = float(np.hypot(*tail))
    tail = tail / norm if norm > 1e-9 else heading
    path = np.vstack([path, path[-1] + FRONT_REACH * tail])
    best = None
    for ob in obstacles:
        c = np.array([ob.cx, ob.cy])
        if np.dot(c - ego_xy, heading) <= 0.0:
            continue
        lateral, _ = point_to_polyline(c, path)
        if lateral <= corridor_halfwidth:
            d = float(np.hypot(*(c - ego_xy)))
            best = d if best is None else min(best, d)
    return best
