"""Recursive Bayesian estimate of the human's danger-awareness coefficient.

The robot maintains p = P(human is concerned). After observing a human
action u it rescales the odds by the ratio of the mixture likelihoods of
u under the concerned and unconcerned models, conditioned on the state
the human reacted to. Only observations where the two deliberate actions
differ move the belief; with the default mixture weight 0.5 over 25
actions each such observation multiplies the odds by 26 one way or the
other, so a handful of informative steps decides the question.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .human import HumanParams
from .kinematics import KinematicModel, Vec2, as_vec2
from .prediction import mixture_distribution

logger = logging.getLogger(__name__)

# Saturation guard: keeps the belief responsive if the human switches
# behavior mid-episode.
BELIEF_CLAMP = 1e-6


@dataclass(frozen=True)
class Belief:
    """P(concerned); the complementary probability is implied."""

    p_concerned: float

    def __post_init__(self):
        if not 0.0 <= self.p_concerned <= 1.0:
            raise ValueError(f"belief must lie in [0, 1], got {self.p_concerned}")

    @property
    def p_unconcerned(self) -> float:
        return 1.0 - self.p_concerned


def project_action(observed_velocity, action_set) -> Vec2:
    """Nearest member of the action set to a measured velocity.

    Distance ties prefer the smaller-norm action, then lexicographic
    order on (x, y), so the projection is unique.
    """
    acts = np.asarray(action_set, dtype=float)
    if acts.ndim != 2 or acts.shape[0] == 0:
        raise ValueError("action set must be a non-empty (A, 2) array")
    v = as_vec2(observed_velocity)
    d2 = np.sum((acts - v) ** 2, axis=1)
    n2 = np.sum(acts ** 2, axis=1)
    best = min(range(acts.shape[0]),
               key=lambda i: (d2[i], n2[i], acts[i, 0], acts[i, 1]))
    return acts[best]


def likelihood(u_obs, x_H, robot_traj, beta: int, params: HumanParams,
               model: KinematicModel, omega_h: float) -> float:
    """Mixture probability of the observed action under the given beta.

    The observation must be a member of U_H; continuous measurements go
    through `project_action` first.
    """
    dist = mixture_distribution(x_H, robot_traj, beta, params, model, omega_h)
    return dist.prob_of(u_obs)


def update(prior: Belief, u_obs, x_H, robot_traj, params: HumanParams,
           model: KinematicModel, omega_h: float) -> Belief:
    """One Bayesian step on the observed action.

    When the two likelihoods are identical (uninformative observation,
    including the omega_h = 1 case) the prior is returned unchanged, bit
    for bit. A zero denominator (impossible while omega_h > 0) also
    returns the prior, with a warning.
    """
    l1 = likelihood(u_obs, x_H, robot_traj, 1, params, model, omega_h)
    l0 = likelihood(u_obs, x_H, robot_traj, 0, params, model, omega_h)
    if l1 == l0:
        return prior
    p = prior.p_concerned
    denom = l1 * p + l0 * (1.0 - p)
    if denom == 0.0:
        logger.warning("degenerate belief update (both likelihoods zero); keeping prior")
        return prior
    posterior = l1 * p / denom
    return Belief(min(max(posterior, BELIEF_CLAMP), 1.0 - BELIEF_CLAMP))
