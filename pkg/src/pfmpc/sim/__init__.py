"""Deterministic 2D closed-loop simulator and scenario suite."""

from .metrics import Event, RouteProgress, SimMetrics, infraction_score, route_completion
from .scenario import (
    AgentSpec,
    ScenarioError,
    ScenarioSpec,
    Schedule,
    StopLine,
    SurrogateScript,
    load_scenario,
    load_suite,
    scenario_from_dict,
)
from .geometry import box_corners, box_distance, boxes_overlap
from .world import LOG_COLUMNS, PlannerSurrogate, RunResult, dumps_record, format_log, metrics_record, run

__all__ = [
    "AgentSpec", "Event", "LOG_COLUMNS", "PlannerSurrogate", "RouteProgress", "RunResult",
    "ScenarioError", "ScenarioSpec", "Schedule", "SimMetrics", "StopLine", "SurrogateScript",
    "box_corners", "box_distance", "boxes_overlap", "dumps_record", "format_log", "infraction_score", "load_scenario", "load_suite", "metrics_record",
    "route_completion", "run", "scenario_from_dict",
]
