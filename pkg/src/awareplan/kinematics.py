"""Discrete-time single-integrator kinematics shared by both agents.

Both the human and the robot move as x(t+1) = x(t) + dt * u(t) on the
X-Y plane, with u a commanded velocity in m/s. The same integrator is
used for true motion and for every predictive rollout, so predicted and
executed positions coincide bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Planar vectors are plain float arrays of shape (2,).
Vec2 = np.ndarray


def as_vec2(value) -> Vec2:
    """Coerce to a finite (2,) float array, raising on anything else."""
    arr = np.asarray(value, dtype=float)
    if arr.shape != (2,):
        raise ValueError(f"expected a planar vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite vector: {arr!r}")
    return arr


@dataclass(frozen=True)
class KinematicModel:
    """Integrator timestep. Default 0.5 s (2 Hz control rate)."""

    dt: float = 0.5

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError(f"dt must be a positive finite number, got {self.dt}")


def step(state, action, model: KinematicModel) -> Vec2:
    """One integrator step: position + dt * velocity."""
    return as_vec2(state) + model.dt * as_vec2(action)


def rollout(state, actions, model: KinematicModel) -> np.ndarray:
    """Apply a sequence of actions, returning all visited states.

    Returns an array of shape (len(actions) + 1, 2) whose first row is the
    initial state. States are accumulated sequentially (state += dt * u),
    matching `step` exactly.
    """
    acts = np.asarray(actions, dtype=float)
    if acts.ndim != 2 or acts.shape[1] != 2 or acts.shape[0] == 0:
        raise ValueError(f"actions must be a non-empty (N, 2) array, got shape {acts.shape}")
    if not np.all(np.isfinite(acts)):
        raise ValueError("non-finite action in rollout")
    x = as_vec2(state)
    out = np.empty((acts.shape[0] + 1, 2))
    out[0] = x
    for k in range(acts.shape[0]):
        x = x + model.dt * acts[k]
        out[k + 1] = x
    return out
