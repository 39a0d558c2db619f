"""Configuration document: one YAML file with [vehicle], [pf], [mpc], [gates], [sim],
[infractions] and [baseline] sections. Missing keys fall back to the dataclass defaults."""

import dataclasses
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import yaml

from .dynamics import VehicleParams
from .mpc import MPCConfig
from .potential import PFGains
from .reference import GateThresholds

DEFAULT_INFRACTIONS = {
    "collision_pedestrian": 0.50,
    "collision_vehicle": 0.60,
    "collision_static": 0.65,
    "red_light": 0.70,
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    deadlock_speed: float = 0.1  # m/s
    deadlock_time: float = 30.0  # s
    perception_range: float = 50.0  # m, surrogate only reports agents inside this radius
    log_precision: int = 6


@dataclass(frozen=True)
class BaselineConfig:
    kp: float = 1.0
    ki: float = 0.1
    kd: float = 0.0
    stop_distance: float = 8.0  # m, full brake when the front obstacle is closer
    lookahead_min: float = 3.0  # m
    lookahead_gain: float = 0.8  # s, lookahead = max(min, gain * speed)


@dataclass(frozen=True)
class Config:
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    pf: PFGains = field(default_factory=PFGains)
    mpc: MPCConfig = field(default_factory=MPCConfig)
    gates: GateThresholds = field(default_factory=GateThresholds)
    sim: SimConfig = field(default_factory=SimConfig)
    infractions: dict = field(default_factory=lambda: dict(DEFAULT_INFRACTIONS))
    baseline: BaselineConfig = field(default_factory=BaselineConfig)

    def with_pf_zeroed(self) -> "Config":
        return replace(self, pf=self.pf.zeroed())


_SECTIONS = {
    "vehicle": VehicleParams,
    "pf": PFGains,
    "mpc": MPCConfig,
    "gates": GateThresholds,
    "sim": SimConfig,
    "baseline": BaselineConfig,
}


def _build(cls, values: dict, section: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - names
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {sorted(unknown)}")
    kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in values.items()}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}]: {exc}") from exc


def config_from_dict(doc: Optional[dict]) -> Config:
    doc = doc or {}
    unknown = set(doc) - set(_SECTIONS) - {"infractions"}
    if unknown:
        raise ConfigError(f"unknown section(s): {sorted(unknown)}")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        if name in doc:
            kwargs[name] = _build(cls, doc[name] or {}, name)
    if "infractions" in doc:
        table = dict(DEFAULT_INFRACTIONS)
        extra = set(doc["infractions"]) - set(table)
        if extra:
            raise ConfigError(f"unknown infraction type(s): {sorted(extra)}")
        table.update({k: float(v) for k, v in doc["infractions"].items()})
        kwargs["infractions"] = table
    return Config(**kwargs)


def load_config(path) -> Config:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    if doc is not None and not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a mapping of sections")
    return config_from_dict(doc)


def default_config() -> Config:
    """The packaged default_config.yaml (identical to the dataclass defaults)."""
    text = resources.files("pfmpc").joinpath("data/default_config.yaml").read_text()
    return config_from_dict(yaml.safe_load(text))


def config_to_dict(config: Config) -> dict:
    def plain(v):
        if isinstance(v, tuple):
            return [plain(x) for x in v]
        if isinstance(v, dict):
            return {getattr(k, "value", k): plain(x) for k, x in v.items()}
        return v

    out = {}
    for name in _SECTIONS:
        obj = getattr(config, name)
        out[name] = {f.name: plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    out["infractions"] = dict(config.infractions)
    return out
