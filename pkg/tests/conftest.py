import itertools

import numpy as np
import pytest

from awareplan.human import HumanParams, human_cost
from awareplan.kinematics import KinematicModel


@pytest.fixture
def model():
    return KinematicModel(dt=0.5)


def random_psd(rng, scale=1.0):
    a = rng.normal(size=(2, 2))
    m = a @ a.T * scale
    return (m + m.T) / 2.0


def random_action_set(rng, n=9):
    """Duplicate-free random planar action set."""
    while True:
        acts = np.round(rng.uniform(-1.5, 1.5, size=(n, 2)), 3)
        if len({(a, b) for a, b in acts}) == n:
            return acts


def enumerate_human_plan(x0, robot_traj, params: HumanParams, model: KinematicModel,
                         noise=None):
    """Exhaustive argmin over U_H^N; the independent oracle for the solver.

    Ties break to the lexicographically smallest index sequence, mirroring
    the declared tie rule.
    """
    n = params.plan_length
    best = None
    for prefix in itertools.product(range(params.action_set.shape[0]), repeat=n):
        actions = params.action_set[list(prefix)]
        c = human_cost(actions, x0, robot_traj, params, model, noise_samples=noise)
        key = (c, prefix)
        if best is None or key < best:
            best = key
    return best  # (cost, index tuple)
