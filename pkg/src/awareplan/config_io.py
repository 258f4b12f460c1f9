"""Scenario loading, validation and serialization.

Configs are single JSON documents validated against the schema shipped
with the package (scenario.schema.json); unknown keys are rejected.
Built-in preset names resolve without touching the filesystem. A loaded
config echoes back with all defaults resolved, and serializing it
reproduces an equal config (exact float round-trip through JSON).
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import jsonschema

from .scenario import (
    PRESETS,
    GridSpec,
    HumanSpec,
    RobotSpec,
    ScenarioConfig,
)


class ConfigError(ValueError):
    """Configuration file rejected, with a field-level message."""


def _schema() -> dict:
    text = resources.files("awareplan").joinpath("scenario.schema.json").read_text()
    return json.loads(text)


def _pair(v) -> tuple:
    return (float(v[0]), float(v[1]))


def _mat(v) -> tuple:
    return (_pair(v[0]), _pair(v[1]))


def scenario_from_dict(data: dict) -> ScenarioConfig:
    """Validate a raw dict and build the config, applying defaults."""
    try:
        jsonschema.validate(data, _schema())
    except jsonschema.ValidationError as e:
        path = ".".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {e.message}") from e

    h = data["human"]
    human = HumanSpec(
        goal=_pair(h["goal"]), theta1=_mat(h["theta1"]), theta2=_mat(h["theta2"]),
        theta3=float(h["theta3"]), theta4=float(h["theta4"]),
        horizon=int(h["horizon"]), v_nominal=float(h["v_nominal"]),
        action_levels=tuple(float(x) if x != int(x) else int(x)
                            for x in h.get("action_levels", (-2, -1, 0, 1, 2))),
        dist_noise_std=float(h.get("dist_noise_std", 0.0)),
        robot_model=h.get("robot_model", "constant_velocity"))
    r = data["robot"]
    robot = RobotSpec(
        goal=_pair(r["goal"]), theta5=_mat(r["theta5"]), theta6=_mat(r["theta6"]),
        horizon=int(r["horizon"]), input_box=_mat(r["input_box"]),
        state_bounds=_mat(r["state_bounds"]), p_threshold=float(r["p_threshold"]),
        buffer=float(r.get("buffer", 0.5)))
    g = data["grid"]
    grid = GridSpec(origin=_pair(g["origin"]), cell_size=float(g["cell_size"]),
                    nx=int(g["nx"]), ny=int(g["ny"]))
    try:
        config = ScenarioConfig(
            name=data["name"], dt=float(data["dt"]), grid=grid, human=human,
            robot=robot, x_h0=_pair(data["x_h0"]), x_r0=_pair(data["x_r0"]),
            omega_h=float(data["omega_h"]),
            prior_p_concerned=float(data["prior_p_concerned"]),
            true_beta=int(data["true_beta"]),
            max_steps=int(data.get("max_steps", 200)),
            stop_tolerance=float(data.get("stop_tolerance", 0.15)),
            seed=int(data.get("seed", 0)),
            human_control=data.get("human_control", "scripted"),
            prune_collisions=bool(data.get("prune_collisions", True)))
        # surface parameter-level invariant violations at load time
        config.human.build(beta=config.true_beta)
        config.robot.build()
    except ValueError as e:
        raise ConfigError(str(e)) from e
    return config


def scenario_to_dict(config: ScenarioConfig) -> dict:
    return config.to_dict()


def serialize_scenario(config: ScenarioConfig, path=None) -> str:
    text = json.dumps(scenario_to_dict(config), indent=2, sort_keys=True)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def load_scenario(source) -> ScenarioConfig:
    """Resolve a preset name or read and validate a JSON config file."""
    if isinstance(source, str) and source in PRESETS:
        return PRESETS[source]
    path = Path(source)
    if not path.exists():
        raise FileNotFoundError(
            f"{source!r} is neither a preset ({', '.join(sorted(PRESETS))}) "
            "nor an existing file")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from e
    return scenario_from_dict(data)
