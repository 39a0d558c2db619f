"""Potential-field augmented nonlinear MPC safety controller for trajectory-planning agents."""

from .config import Config, ConfigError, default_config, load_config
from .dynamics import ControlInput, DynamicsError, VehicleParams, VehicleState, jacobians, rollout, step
from .mpc import MPCConfig, MPCProblem, MPCSolution, SafetyController, control_cycle, evaluate_cost, solve
from .potential import (
    ObstacleClass,
    ObstacleDescriptor,
    PFGains,
    effective_obstacle_gain,
    front_obstacle_cost,
    obstacle_potential,
    rotate_into_ellipse,
    select_front_obstacle,
)
from .reference import (
    CatmullRomSpline,
    PlannerOutput,
    ReferenceBuildError,
    ReferenceTrajectory,
    build_reference,
    to_ego,
    to_global,
)

__version__ = "0.1.0"

__all__ = [
    "CatmullRomSpline", "Config", "ConfigError", "ControlInput", "DynamicsError", "MPCConfig",
    "MPCProblem", "MPCSolution", "ObstacleClass", "ObstacleDescriptor", "PFGains", "PlannerOutput",
    "ReferenceBuildError", "ReferenceTrajectory", "SafetyController", "VehicleParams", "VehicleState",
    "build_reference", "control_cycle", "default_config", "effective_obstacle_gain", "evaluate_cost",
    "front_obstacle_cost", "jacobians", "load_config", "obstacle_potential", "rollout",
    "rotate_into_ellipse", "select_front_obstacle", "solve", "step", "to_ego", "to_global",
]
