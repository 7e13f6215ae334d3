"""Line-oriented run configuration.

Files contain ``dotted.key = value`` assignments, blank lines, and ``#``
comments. Every key has a default; unknown keys and malformed values are
rejected with the offending key named. ``--set`` style overrides reuse the
same key space.
"""

from __future__ import annotations

import hashlib
import json

from .episodic_memory import PenaltyParams
from .errors import ConfigError
from .planner import PlannerConfig, PlannerWeights
from .runner import RunnerConfig
from .voxel_map import SensorConfig


def _bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


DEFAULTS = {
    "seed": (0, int),
    "max_steps": (50, int),
    "success_radius": (1.0, float),
    "stop_radius": (0.5, float),
    "planner.alpha": (1.0, float),
    "planner.beta": (0.5, float),
    "planner.gamma": (0.5, float),
    "planner.n_replan": (3, int),
    "planner.theta_loc": (0.7, float),
    "planner.theta_feat_goal": (0.8, float),
    "planner.min_region_cells": (2, int),
    "planner.avoid_factor": (0.2, float),
    "planner.geodesic_cost": (False, _bool),
    "penalty.lambda": (0.95, float),
    "penalty.sigma": (1.0, float),
    "penalty.stride": (1, int),
    "stagnation.eps_gain": (1.0, float),
    "stagnation.n_stag": (3, int),
    "stagnation.t_cool": (10, int),
    "memory.capacity": (5, int),
    "memory.summarize": (True, _bool),
    "reflection.enabled": (True, _bool),
    "sensor.fov_deg": (120.0, float),
    "sensor.max_range": (1.7, float),
    "sensor.rays": (61, int),
    "sensor.trunc_dist": (0.6, float),
    "sensor.min_weight": (1, int),
    "sensor.detection_noise": (0.0, float),
    "assoc.r_assoc": (0.5, float),
    "assoc.theta_feat": (0.8, float),
    "scorer.kind": ("oracle", str),  # oracle | noisy | remote
    "scorer.noise": (0.0, float),
    "scorer.endpoint": ("", str),
    "scorer.deadline_ms": (10000, int),
}


def default_values() -> dict:
    return {key: default for key, (default, _parse) in DEFAULTS.items()}


def parse_value(key: str, raw: str):
    if key not in DEFAULTS:
        raise ConfigError("unknown key", key)
    _default, parse = DEFAULTS[key]
    try:
        return parse(raw.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value {raw.strip()!r}: {exc}", key)


def parse_config(text: str, overrides=()) -> dict:
    """Parse a config file body plus ``key=value`` override strings into a
    complete key -> value mapping."""
    values = default_values()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno} is not a 'key = value' assignment",
                              line)
        key, _sep, value = line.partition("=")
        key = key.strip()
        values[key] = parse_value(key, value)
    for item in overrides:
        if "=" not in item:
            raise ConfigError("override must look like key=value", item)
        key, _sep, value = item.partition("=")
        key = key.strip()
        values[key] = parse_value(key, value)
    return values


def load_config(path, overrides=()) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), overrides)


def config_hash(values: dict) -> str:
    canon = json.dumps(values, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def build_runner_config(values: dict) -> RunnerConfig:
    """Materialize the flat key mapping into the structured runner config."""
    cfg = RunnerConfig(
        planner=PlannerConfig(
            weights=PlannerWeights(
                alpha=values["planner.alpha"],
                beta=values["planner.beta"],
                gamma=values["planner.gamma"],
            ),
            n_replan=values["planner.n_replan"],
            penalty=PenaltyParams(
                lam=values["penalty.lambda"],
                sigma=values["penalty.sigma"],
                stride=values["penalty.stride"],
            ),
            theta_loc=values["planner.theta_loc"],
            theta_feat_goal=values["planner.theta_feat_goal"],
            min_region_cells=values["planner.min_region_cells"],
            avoid_factor=values["planner.avoid_factor"],
            geodesic_cost=values["planner.geodesic_cost"],
        ),
        sensor=SensorConfig(
            fov_deg=values["sensor.fov_deg"],
            max_range=values["sensor.max_range"],
            rays=values["sensor.rays"],
            trunc_dist=values["sensor.trunc_dist"],
            min_weight=values["sensor.min_weight"],
        ),
        eps_gain=values["stagnation.eps_gain"],
        n_stag=values["stagnation.n_stag"],
        t_cool=values["stagnation.t_cool"],
        memory_capacity=values["memory.capacity"],
        summarize=values["memory.summarize"],
        reflect=values["reflection.enabled"],
        max_steps=values["max_steps"],
        seed=values["seed"],
        detection_noise=values["sensor.detection_noise"],
        r_assoc=values["assoc.r_assoc"],
        theta_feat=values["assoc.theta_feat"],
        success_radius=values["success_radius"],
        stop_radius=values["stop_radius"],
    )
    try:
        cfg.validate()
    except ValueError as exc:
        raise ConfigError(str(exc), "config") from exc
    return cfg
