"""Human decision model: finite-horizon cost over a discrete velocity set.

The human picks a velocity sequence from a finite action set U_H minimizing

    sum_k ||x(k) - g_H||^2_th1  +  sum_k ||u(k)||^2_th2
        + beta * sum_k th3 * exp(-th4 * dist(k))

where x(k) is the state reached after applying the k-th action, dist(k)
is the (noise-perturbed, clamped at zero) distance to the robot at the
matching prediction instant, and beta in {0, 1} switches the safety term
on or off: a concerned human (beta=1) pays to stay away from the robot,
an unconcerned one (beta=0) ignores it entirely.

The minimization is exact. Sequences are enumerated with a layered
search that merges branches reaching bit-identical states (on lattice
action sets whole layers collapse, which is what makes long horizons
tractable) and prunes partial sequences whose accumulated cost already
exceeds a greedy incumbent; every stage cost is nonnegative, so the
accumulated cost is a valid lower bound. Cost ties are broken in favor
of the lexicographically smallest sequence of action indices in the
declared ordering of U_H, which keeps the argmin unique.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .kinematics import KinematicModel, Vec2, as_vec2, rollout

logger = logging.getLogger(__name__)

_PSD_TOL = 1e-9


class RobotMotionModel(enum.Enum):
    """How the human extrapolates the robot while planning."""

    CONSTANT_VELOCITY = "constant_velocity"
    ORACLE_PLAN = "oracle_plan"
    FROZEN = "frozen"


def _check_weight_matrix(name: str, m) -> np.ndarray:
    arr = np.asarray(m, dtype=float)
    if arr.shape != (2, 2):
        raise ValueError(f"{name} must be 2x2, got shape {arr.shape}")
    if not np.allclose(arr, arr.T, atol=_PSD_TOL):
        raise ValueError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(arr).min() < -_PSD_TOL:
        raise ValueError(f"{name} must be positive semidefinite")
    return arr


def velocity_lattice(v_nominal: float, levels=(-2, -1, 0, 1, 2)) -> np.ndarray:
    """Square velocity lattice {levels * v} x {levels * v}, x-major order.

    With the default levels this is the 25-action stop/walk/run set; the
    row order is the declared ordering used for tie-breaking.
    """
    vals = [lv * v_nominal for lv in levels]
    return np.array([[vx, vy] for vx in vals for vy in vals], dtype=float)


@dataclass(frozen=True)
class HumanParams:
    """Weights, goal, horizon and action set of the human objective."""

    goal: np.ndarray
    theta1: np.ndarray
    theta2: np.ndarray
    theta3: float
    theta4: float
    beta: int
    horizon: int
    action_set: np.ndarray
    dist_noise_std: float = 0.0
    robot_model: RobotMotionModel = RobotMotionModel.CONSTANT_VELOCITY

    def __post_init__(self):
        object.__setattr__(self, "goal", as_vec2(self.goal))
        object.__setattr__(self, "theta1", _check_weight_matrix("theta1", self.theta1))
        object.__setattr__(self, "theta2", _check_weight_matrix("theta2", self.theta2))
        if not self.theta3 > 0.0:
            raise ValueError(f"theta3 must be positive, got {self.theta3}")
        if self.theta4 < 0.0:
            raise ValueError(f"theta4 must be nonnegative, got {self.theta4}")
        if self.beta not in (0, 1):
            raise ValueError(f"beta must be 0 or 1, got {self.beta}")
        if self.horizon < 0:
            raise ValueError(f"horizon must be nonnegative, got {self.horizon}")
        acts = np.asarray(self.action_set, dtype=float)
        if acts.ndim != 2 or acts.shape[1] != 2 or acts.shape[0] == 0:
            raise ValueError("action_set must be a non-empty (N, 2) array")
        if not np.all(np.isfinite(acts)):
            raise ValueError("action_set contains non-finite entries")
        if len({(a[0], a[1]) for a in acts}) != acts.shape[0]:
            raise ValueError("action_set contains duplicate actions")
        object.__setattr__(self, "action_set", acts)
        if self.dist_noise_std < 0.0:
            raise ValueError("dist_noise_std must be nonnegative")

    def with_beta(self, beta: int) -> "HumanParams":
        return replace(self, beta=int(beta))

    @property
    def plan_length(self) -> int:
        """Number of actions actually optimized (horizon 0 degrades to a
        one-step greedy choice, see `act`)."""
        return max(self.horizon, 1)


@dataclass(frozen=True)
class HumanPlan:
    """Optimal action sequence with its rollout and cost."""

    actions: np.ndarray          # (N, 2)
    predicted_states: np.ndarray  # (N + 1, 2)
    cost: float
    action_indices: tuple = field(default=(), compare=False)


def predict_robot_trajectory(
    x_R,
    u_R_last,
    horizon: int,
    mode: RobotMotionModel,
    model: KinematicModel,
    oracle_plan: np.ndarray | None = None,
) -> np.ndarray:
    """Robot trajectory as assumed by the human, states 0..horizon.

    CONSTANT_VELOCITY extrapolates the robot's last commanded velocity,
    FROZEN repeats the current position, ORACLE_PLAN passes a supplied
    state sequence through (padded by repeating its last state). With no
    plan available ORACLE_PLAN falls back to constant velocity.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    x = as_vec2(x_R)
    if mode is RobotMotionModel.ORACLE_PLAN:
        if oracle_plan is None:
            logger.warning("oracle robot plan unavailable; falling back to constant velocity")
            mode = RobotMotionModel.CONSTANT_VELOCITY
        else:
            states = np.asarray(oracle_plan, dtype=float)
            out = np.empty((horizon + 1, 2))
            n = min(states.shape[0], horizon + 1)
            out[:n] = states[:n]
            out[n:] = states[n - 1] if n > 0 else x
            return out
    if mode is RobotMotionModel.FROZEN:
        return np.tile(x, (horizon + 1, 1))
    u = as_vec2(u_R_last)
    return rollout(x, np.tile(u, (horizon, 1)), model)


def stage_cost(x_next, u, robot_pos, params: HumanParams, noise: float = 0.0) -> float:
    """Cost of one stage, evaluated at the post-action state x_next.

    The safety term uses dist = max(0, ||x_next - robot_pos|| + noise);
    the clamp keeps a large negative noise draw from exploding the
    exponential. Delegates to the batch kernel so scalar and vectorized
    evaluations agree bit for bit.
    """
    u = np.asarray(u, dtype=float)
    eff = _efforts(u[None, :], params)
    return float(_stage_cost_batch(np.asarray(x_next, dtype=float)[None, :], eff,
                                   np.asarray(robot_pos, dtype=float), params,
                                   float(noise))[0])


def _stage_cost_batch(states, efforts, robot_pos, params: HumanParams, noise: float) -> np.ndarray:
    """Vectorized `stage_cost` over (..., 2) states with per-action efforts."""
    e = states - params.goal
    c = np.einsum("...i,ij,...j->...", e, params.theta1, e) + efforts
    if params.beta:
        d = states - robot_pos
        dist = np.maximum(np.hypot(d[..., 0], d[..., 1]) + noise, 0.0)
        c = c + params.theta3 * np.exp(-params.theta4 * dist)
    return c


def human_cost(actions, x_H0, robot_traj, params: HumanParams, model: KinematicModel,
               noise_samples=None) -> float:
    """Total objective of an action sequence from state x_H0.

    Stage k (k = 1..N) charges the goal and safety terms at the state
    reached after the k-th action against the robot's position at the
    same instant, plus the effort of the action itself; the terms are
    accumulated stage by stage.
    """
    acts = np.asarray(actions, dtype=float)
    if acts.ndim != 2 or acts.shape[1] != 2:
        raise ValueError(f"actions must be (N, 2), got shape {acts.shape}")
    n = acts.shape[0]
    if n != params.plan_length:
        raise ValueError(f"expected {params.plan_length} actions, got {n}")
    traj = np.asarray(robot_traj, dtype=float)
    if traj.shape[0] < n + 1:
        raise ValueError(f"robot trajectory must cover states 0..{n}, got {traj.shape[0]}")
    if noise_samples is None:
        noise = np.zeros(n)
    else:
        noise = np.asarray(noise_samples, dtype=float)
        if noise.shape != (n,):
            raise ValueError(f"need {n} noise samples, got shape {noise.shape}")
    states = rollout(x_H0, acts, model)
    total = 0.0
    for k in range(n):
        total += stage_cost(states[k + 1], acts[k], traj[k + 1], params, noise[k])
    return total


def _greedy_upper_bound(x0, acts, traj, params, noise, dt) -> float:
    """Cost of the stage-greedy sequence; a valid incumbent for pruning."""
    x = x0
    total = 0.0
    n = params.plan_length
    for k in range(n):
        cand = x + dt * acts
        costs = _stage_cost_batch(cand, _efforts(acts, params), traj[k + 1], params, float(noise[k]))
        i = int(np.argmin(costs))
        total += float(costs[i])
        x = cand[i]
    return total


def _efforts(acts, params) -> np.ndarray:
    return np.einsum("ai,ij,aj->a", acts, params.theta2, acts)


def solve_human_plan(x_H, robot_traj, params: HumanParams, model: KinematicModel,
                     noise_samples=None) -> HumanPlan:
    """Exact argmin of `human_cost` over all sequences in U_H^N.

    Layered search with exact-state merging and incumbent pruning; ties
    resolved to the lexicographically smallest index sequence. The
    returned cost equals `human_cost` of the returned actions bit for
    bit (identical accumulation order).
    """
    acts = params.action_set
    if acts.shape[0] == 0:
        raise ValueError("empty human action set")
    n = params.plan_length
    dt = model.dt
    x0 = as_vec2(x_H)
    traj = np.asarray(robot_traj, dtype=float)
    if traj.shape[0] < n + 1:
        raise ValueError(f"robot trajectory must cover states 0..{n}, got {traj.shape[0]}")
    if noise_samples is None:
        noise = np.zeros(n)
    else:
        noise = np.asarray(noise_samples, dtype=float)
        if noise.shape != (n,):
            raise ValueError(f"need {n} noise samples, got shape {noise.shape}")

    efforts = _efforts(acts, params)
    ub = _greedy_upper_bound(x0, acts, traj, params, noise, dt)

    states = x0[None, :]
    costs = np.zeros(1)
    prefixes: list[tuple] = [()]

    for k in range(n):
        cand = states[:, None, :] + dt * acts[None, :, :]          # (S, A, 2)
        stage = _stage_cost_batch(cand, efforts[None, :], traj[k + 1], params, float(noise[k]))
        cand_costs = costs[:, None] + stage                         # (S, A)

        keep = cand_costs <= ub
        src, act_idx = np.nonzero(keep)
        if src.size == 0:
            # Incumbent is exactly optimal; fall back to keeping everything
            # at this layer so the lex rule still applies among ties.
            src, act_idx = np.nonzero(cand_costs <= np.inf)
        flat_states = cand[src, act_idx]
        flat_costs = cand_costs[src, act_idx]

        # Merge branches whose states coincide exactly; keep the cheapest,
        # breaking exact cost ties by lexicographic index prefix.
        keys = np.ascontiguousarray(flat_states).view([("x", float), ("y", float)]).ravel()
        uniq, inverse = np.unique(keys, return_inverse=True)
        group_min = np.full(uniq.shape[0], np.inf)
        np.minimum.at(group_min, inverse, flat_costs)

        new_states = np.empty((uniq.shape[0], 2))
        new_costs = group_min
        new_prefixes: list[tuple] = [None] * uniq.shape[0]  # type: ignore[list-item]
        winners = np.nonzero(flat_costs == group_min[inverse])[0]
        for w in winners:
            g = inverse[w]
            pref = prefixes[src[w]] + (int(act_idx[w]),)
            cur = new_prefixes[g]
            if cur is None or pref < cur:
                new_prefixes[g] = pref
                new_states[g] = flat_states[w]

        states, costs, prefixes = new_states, new_costs, new_prefixes

    best = None
    for i in range(costs.shape[0]):
        key = (costs[i], prefixes[i])
        if best is None or key < best:
            best = key
    best_cost, best_prefix = best
    actions = acts[list(best_prefix)]
    predicted = rollout(x0, actions, model)
    return HumanPlan(actions=actions, predicted_states=predicted,
                     cost=float(best_cost), action_indices=best_prefix)


def act(
    x_H,
    x_R,
    u_R_last,
    params: HumanParams,
    rng,
    model: KinematicModel,
    oracle_plan: np.ndarray | None = None,
) -> Vec2:
    """One receding-horizon step of the human: plan, return the first action.

    Draws one Gaussian distance-noise sample per stage (std =
    params.dist_noise_std) from `rng` (a seed or a numpy Generator); the
    samples perturb the safety term only. With horizon 0 the human
    degrades to a one-step greedy choice against a robot frozen at its
    current position.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    n = params.plan_length
    mode = RobotMotionModel.FROZEN if params.horizon == 0 else params.robot_model
    traj = predict_robot_trajectory(x_R, u_R_last, n, mode, model, oracle_plan=oracle_plan)
    noise = rng.normal(0.0, params.dist_noise_std, size=n)
    plan = solve_human_plan(x_H, traj, params, model, noise_samples=noise)
    return plan.actions[0]
