"""Declarative scenarios: route, ego start, scripted agents and the planner surrogate script.

Scenario files are YAML documents tagged ``schema: pfmpc-scenario/1``.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np
import yaml

from ..dynamics import VehicleState

SCHEMA = "pfmpc-scenario/1"
FLAW_TYPES = ("none", "waypoint_offset", "deadlock", "corner_cut")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Schedule:
    """Piecewise-constant signal keyed by time (s) or by route progress (m)."""

    points: tuple = ((0.0, 0.0),)
    by: str = "time"

    def __post_init__(self):
        if self.by not in ("time", "progress"):
            raise ScenarioError(f"schedule key must be 'time' or 'progress', got {self.by!r}")
        pts = tuple(sorted((float(k), float(v)) for k, v in self.points))
        if not pts:
            raise ScenarioError("schedule needs at least one point")
        object.__setattr__(self, "points", pts)

    @classmethod
    def constant(cls, value: float) -> "Schedule":
        return cls(((0.0, value),))

    def __call__(self, t: float, progress: float) -> float:
        key = t if self.by == "time" else progress
        value = self.points[0][1]
        for k, v in self.points:
            if key >= k:
                value = v
        return value


@dataclass(frozen=True)
class AgentSpec:
    """A scripted traffic participant.

    Either ``schedule`` rows ``(t, x, y, theta)`` (linear interpolation, held at the ends) or a
    constant-velocity start pose with ``speed`` along ``theta``.
    """

    name: str
    cls: str = "vehicle"
    length: float = 4.8
    width: float = 2.0
    schedule: Optional[tuple] = None
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0
    speed: float = 0.0

    def __post_init__(self):
        if self.cls not in ("vehicle", "cyclist", "pedestrian", "static"):
            raise ScenarioError(f"agent {self.name}: unknown class {self.cls!r}")
        if self.schedule is not None:
            rows = np.asarray(self.schedule, dtype=float)
            if rows.ndim != 2 or rows.shape[1] != 4 or len(rows) < 1:
                raise ScenarioError(f"agent {self.name}: schedule rows must be [t, x, y, theta]")
            if np.any(np.diff(rows[:, 0]) <= 0):
                raise ScenarioError(f"agent {self.name}: schedule times must increase")
            rows[:, 3] = np.unwrap(rows[:, 3])
            object.__setattr__(self, "schedule", tuple(map(tuple, rows)))


@dataclass(frozen=True)
class SurrogateScript:
    """How the stand-in planner turns the world into PlannerOutput each tick."""

    path: Optional[tuple] = None  # planned path; defaults to the route
    num_waypoints: int = 10
    spacing: float = 2.5
    first_offset: float = 0.0
    target_speed: float = 8.0
    noise_std: float = 0.0
    p_on_road: Schedule = field(default_factory=lambda: Schedule.constant(1.0))
    p_red_light: Schedule = field(default_factory=lambda: Schedule.constant(0.0))
    p_stop_junction: Schedule = field(default_factory=lambda: Schedule.constant(0.0))
    flaw: str = "none"

    def __post_init__(self):
        if self.flaw not in FLAW_TYPES:
            raise ScenarioError(f"unknown flaw type {self.flaw!r}")
        if self.num_waypoints < 2 or self.spacing <= 0:
            raise ScenarioError("surrogate needs >= 2 waypoints and positive spacing")


@dataclass(frozen=True)
class StopLine:
    s: float  # route arc length (m)
    red: tuple = ()  # ((t_start, t_end), ...)


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    route: tuple
    ego_start: VehicleState
    agents: tuple = ()
    surrogate: SurrogateScript = field(default_factory=SurrogateScript)
    duration_max: float = 60.0
    success_radius: float = 2.0
    stop_lines: tuple = ()
    description: str = ""

    def __post_init__(self):
        route = np.asarray(self.route, dtype=float)
        if route.ndim != 2 or route.shape[1] != 2 or len(route) < 2:
            raise ScenarioError(f"{self.name}: route needs at least 2 [x, y] points")
        if self.duration_max <= 0:
            raise ScenarioError(f"{self.name}: duration_max must be positive")
        object.__setattr__(self, "route", tuple(map(tuple, route)))
        names = [a.name for a in self.agents]
        if len(set(names)) != len(names):
            raise ScenarioError(f"{self.name}: agent names must be unique")

    @property
    def route_array(self) -> np.ndarray:
        return np.asarray(self.route, dtype=float)

    @property
    def planned_path(self) -> np.ndarray:
        if self.surrogate.path is not None:
            return np.asarray(self.surrogate.path, dtype=float)
        return self.route_array


# --- YAML (de)serialization ------------------------------------------------------------


def _schedule(value, default: float) -> Schedule:
    if value is None:
        return Schedule.constant(default)
    if isinstance(value, (int, float)):
        return Schedule.constant(float(value))
    if isinstance(value, dict):
        return Schedule(tuple(map(tuple, value.get("points", []))), value.get("by", "time"))
    raise ScenarioError(f"cannot read schedule {value!r}")


def _require(doc, key, where):
    if key not in doc:
        raise ScenarioError(f"{where}: missing required field {key!r}")
    return doc[key]


def scenario_from_dict(doc: dict) -> ScenarioSpec:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping")
    if doc.get("schema") != SCHEMA:
        raise ScenarioError(f"unsupported scenario schema {doc.get('schema')!r}, expected {SCHEMA!r}")
    name = _require(doc, "name", "scenario")
    es = _require(doc, "ego_start", name)
    try:
        ego = VehicleState(**{k: float(v) for k, v in es.items()})
    except TypeError as exc:
        raise ScenarioError(f"{name}: bad ego_start: {exc}") from exc

    agents = []
    for a in doc.get("agents") or []:
        a = dict(a)
        if "class" in a:
            a["cls"] = a.pop("class")
        try:
            agents.append(AgentSpec(**a))
        except TypeError as exc:
            raise ScenarioError(f"{name}: bad agent {a.get('name')!r}: {exc}") from exc

    s = dict(doc.get("surrogate") or {})
    flaw = s.pop("flaw", None) or {"type": "none"}
    flaw_type = flaw.get("type", "none")
    if flaw_type == "waypoint_offset":
        s.setdefault("first_offset", float(_require(flaw, "offset", f"{name} flaw")))
    elif flaw_type in ("deadlock", "corner_cut"):
        s.setdefault("path", _require(flaw, "path", f"{name} flaw"))
    if s.get("path") is not None:
        s["path"] = tuple(map(tuple, s["path"]))
    for key, default in (("p_on_road", 1.0), ("p_red_light", 0.0), ("p_stop_junction", 0.0)):
        s[key] = _schedule(s.get(key), default)
    try:
        surrogate = SurrogateScript(flaw=flaw_type, **s)
    except TypeError as exc:
        raise ScenarioError(f"{name}: bad surrogate: {exc}") from exc

    stop_lines = tuple(StopLine(float(sl["s"]), tuple(map(tuple, sl.get("red", ()))))
                       for sl in doc.get("stop_lines") or [])
    return ScenarioSpec(
        name=name,
        route=_require(doc, "route", name),
        ego_start=ego,
        agents=tuple(agents),
        surrogate=surrogate,
        duration_max=float(doc.get("duration_max", 60.0)),
        success_radius=float(doc.get("success_radius", 2.0)),
        stop_lines=stop_lines,
        description=doc.get("description", ""),
    )


def load_scenario(path) -> ScenarioSpec:
    path = Path(path)
    if not path.is_file():
        raise ScenarioError(f"scenario file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ScenarioError(f"malformed scenario {path}: {exc}") from exc
    return scenario_from_dict(doc)


def load_suite(directory) -> List[ScenarioSpec]:
    directory = Path(directory)
    if not directory.is_dir():
        raise ScenarioError(f"suite directory not found: {directory}")
    files = sorted(list(directory.glob("*.yaml")) + list(directory.glob("*.yml")))
    if not files:
        raise ScenarioError(f"no scenario files in {directory}")
    return sorted((load_scenario(f) for f in files), key=lambda s: s.name)
