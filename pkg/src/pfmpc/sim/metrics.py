"""Leaderboard-style metrics: route completion, infraction score, driving score."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from ..config import DEFAULT_INFRACTIONS


@dataclass(frozen=True)
class Event:
    kind: str  # collision_vehicle | collision_pedestrian | collision_static | red_light
    time: float
    x: float
    y: float
    other: str = ""

    def as_dict(self) -> dict:
        return {"kind": self.kind, "time": round(self.time, 6), "x": round(self.x, 6),
                "y": round(self.y, 6), "other": self.other}


@dataclass
class SimMetrics:
    route_completion: float = 0.0
    infraction_score: float = 1.0
    events: List[Event] = field(default_factory=list)
    min_obstacle_distance: float = float("inf")
    min_distance_by_agent: Dict[str, float] = field(default_factory=dict)
    deadlock: bool = False
    completed: bool = False
    valid: bool = True
    sim_time: float = 0.0
    error: Optional[str] = None

    @property
    def driving_score(self) -> float:
        return self.route_completion * self.infraction_score

    @property
    def collision_events(self) -> List[Event]:
        return [e for e in self.events if e.kind.startswith("collision")]


def infraction_score(events, multipliers: Optional[dict] = None) -> float:
    """Product of per-event penalty multipliers (1.0 for no events)."""
    table = multipliers or DEFAULT_INFRACTIONS
    score = 1.0
    for e in events:
        kind = e.kind if isinstance(e, Event) else e
        score *= table[kind]
    return score


class RouteProgress:
    """Monotone arc-length progress of a moving point along a polyline.

    Projection is restricted to a window around the current progress so a route that
    folds back on itself cannot register a jump.
    """

    def __init__(self, route, back: float = 5.0, ahead: float = 20.0):
        self.pts = np.asarray(route, dtype=float)
        seg = np.diff(self.pts, axis=0)
        self.seg = seg
        self.seg_len = np.hypot(seg[:, 0], seg[:, 1])
        self.cum = np.concatenate([[0.0], np.cumsum(self.seg_len)])
        self.length = float(self.cum[-1])
        self.back = back
        self.ahead = ahead
        self.best = 0.0

    def project(self, point, lo: float = -np.inf, hi: float = np.inf) -> float:
        p = np.asarray(point, dtype=float)
        a = self.pts[:-1]
        l2 = np.where(self.seg_len > 0, self.seg_len ** 2, 1.0)
        t = np.clip(np.einsum("ij,ij->i", p - a, self.seg) / l2, 0.0, 1.0)
        s = self.cum[:-1] + t * self.seg_len
        # clamp candidate arc lengths into the window, then pick the closest point
        s = np.clip(s, np.maximum(lo, self.cum[:-1]), np.minimum(hi, self.cum[1:]))
        valid = (self.cum[1:] >= lo) & (self.cum[:-1] <= hi)
        t = np.where(self.seg_len > 0, (s - self.cum[:-1]) / np.where(self.seg_len > 0, self.seg_len, 1.0), 0.0)
        proj = a + self.seg * t[:, None]
        d = np.hypot(*(p - proj).T)
        d = np.where(valid, d, np.inf)
        return float(s[int(np.argmin(d))])

    def update(self, point) -> float:
        s = self.project(point, self.best - self.back, self.best + self.ahead)
        self.best = max(self.best, s)
        return self.best

    @property
    def fraction(self) -> float:
        return self.best / self.length if self.length > 0 else 1.0


def route_completion(route, ego_trace, success_radius: float = 2.0) -> float:
    """Fraction of route arc length covered by the trace; 1.0 once the end is reached."""
    tracker = RouteProgress(route)
    end = np.asarray(route, dtype=float)[-1]
    for p in ego_trace:
        s = tracker.update(p)
        near_end = np.hypot(*(np.asarray(p, dtype=float)[:2] - end)) <= success_radius
        if near_end and s >= tracker.length - 2.0 * success_radius:
            return 1.0
    return min(tracker.fraction, 1.0)
