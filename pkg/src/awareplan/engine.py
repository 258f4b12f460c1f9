"""Deterministic closed-loop engine coupling both agents.

Each tick runs a simultaneous-move cycle: the robot digests the human
action observed one tick in arrears (Bayesian awareness update), pushes
the human-state distribution through the grid using its freshly updated
belief and its own shifted previous plan, replans under the resulting
forbidden cells, while the human independently plans against an
extrapolation of the robot; both first actions are then applied
together. All randomness flows from the single scenario seed, so a
(config, seed) pair reproduces its trace bit for bit.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import belief as belief_mod
from . import planner as planner_mod
from .belief import Belief
from .human import RobotMotionModel, predict_robot_trajectory, solve_human_plan
from .kinematics import step
from .prediction import StateDistribution, propagate
from .scenario import EXTERNAL, SCRIPTED, ScenarioConfig

DISPLAY_MASS = 1e-3  # reporting threshold for "visible" support width


@dataclass
class TickRecord:
    """Everything observable about one control cycle."""

    t: int
    x_h: np.ndarray
    x_r: np.ndarray
    u_h: np.ndarray
    u_r: np.ndarray
    belief_p: float
    p_coll: np.ndarray
    feasible: bool
    support_counts: list
    display_counts: list
    forbidden: list
    heatmap: list
    plan_states: np.ndarray
    replica_traj: np.ndarray
    wall_ms: float

    def to_json_dict(self) -> dict:
        # wall_ms stays out: the exported trace must be byte-identical
        # across reruns of the same (config, seed); timing lives in the
        # CSV export and the in-memory records.
        return {
            "t": self.t,
            "x_h": self.x_h.tolist(), "x_r": self.x_r.tolist(),
            "u_h": self.u_h.tolist(), "u_r": self.u_r.tolist(),
            "belief_p": self.belief_p,
            "p_coll": [float(p) for p in self.p_coll],
            "feasible": bool(self.feasible),
            "support_counts": self.support_counts,
            "display_counts": self.display_counts,
            "forbidden": [[[int(a), int(b)] for a, b in cells] for cells in self.forbidden],
            "heatmap": self.heatmap,
            "plan_states": self.plan_states.tolist(),
            "replica_traj": self.replica_traj.tolist(),
        }


@dataclass
class SimTrace:
    """Time-indexed record of a full episode plus summary indices."""

    config: dict
    records: list = field(default_factory=list)
    final_x_h: np.ndarray | None = None
    final_x_r: np.ndarray | None = None
    stop_reason: str = "max_steps"

    def human_states(self) -> np.ndarray:
        states = [r.x_h for r in self.records]
        if self.final_x_h is not None:
            states.append(self.final_x_h)
        return np.array(states)

    def robot_states(self) -> np.ndarray:
        states = [r.x_r for r in self.records]
        if self.final_x_r is not None:
            states.append(self.final_x_r)
        return np.array(states)

    def belief_series(self) -> np.ndarray:
        return np.array([r.belief_p for r in self.records])

    def min_distance(self) -> float:
        h, r = self.human_states(), self.robot_states()
        return float(np.min(np.hypot(h[:, 0] - r[:, 0], h[:, 1] - r[:, 1])))

    def to_json_dict(self) -> dict:
        pi_r, pi_h, pi_t = performance_indices(self)
        return {
            "config": self.config,
            "stop_reason": self.stop_reason,
            "final_x_h": None if self.final_x_h is None else self.final_x_h.tolist(),
            "final_x_r": None if self.final_x_r is None else self.final_x_r.tolist(),
            "indices": {"pi_r": pi_r, "pi_h": pi_h, "pi_t": pi_t},
            "min_distance": self.min_distance(),
            "ticks": [r.to_json_dict() for r in self.records],
        }


def performance_indices(trace: SimTrace) -> tuple[float, float, float]:
    """Cumulative squared goal deviations (robot, human, total)."""
    if not trace.records:
        raise ValueError("empty trace")
    g_r = np.array(trace.config["robot"]["goal"])
    g_h = np.array(trace.config["human"]["goal"])
    r, h = trace.robot_states(), trace.human_states()
    pi_r = float(np.sum(np.sum((r - g_r) ** 2, axis=1)))
    pi_h = float(np.sum(np.sum((h - g_h) ** 2, axis=1)))
    return pi_r, pi_h, pi_r + pi_h


class Engine:
    """One simulation instance; `tick` is the sole state mutator."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.model = config.model()
        self.grid = config.grid.build()
        self.human_params = config.human.build(beta=config.true_beta)
        # the replica the robot reasons with never injects perception noise
        self.replica_params = config.human.build(beta=config.true_beta)
        self.robot_params = config.robot.build()
        self.rng = np.random.default_rng(config.seed)
        self.belief = Belief(config.prior_p_concerned)
        self.x_h = np.array(config.x_h0, dtype=float)
        self.x_r = np.array(config.x_r0, dtype=float)
        self.t = 0
        self.done = False
        self.prev_plan = None
        self.prev_u_r = np.zeros(2)
        self.prev_u_h = None
        self.prev_x_h = None
        self.prev_replica_traj = None
        self._idle_ticks = 0
        self.trace = SimTrace(config=config.to_dict())

    # -- helpers -----------------------------------------------------------

    def _shifted_plan_states(self) -> np.ndarray:
        """Previous plan advanced one step (last action repeated); the
        robot trajectory the prediction conditions on. Before the first
        plan exists the robot is extrapolated at its last velocity."""
        n = self.robot_params.horizon
        if self.prev_plan is None:
            return predict_robot_trajectory(
                self.x_r, self.prev_u_r, n, RobotMotionModel.CONSTANT_VELOCITY, self.model)
        states = self.prev_plan.predicted_states
        tail = step(states[-1], self.prev_plan.actions[-1], self.model)
        return np.vstack([states[1:], tail[None, :]])

    def _human_view_of_robot(self, horizon: int, robot_pred: np.ndarray) -> np.ndarray:
        """Robot trajectory the human plans against this tick."""
        mode = (RobotMotionModel.FROZEN if self.human_params.horizon == 0
                else self.human_params.robot_model)
        return predict_robot_trajectory(self.x_r, self.prev_u_r, horizon, mode,
                                        self.model, oracle_plan=robot_pred)

    # -- main cycle --------------------------------------------------------

    def tick(self, external_command=None) -> TickRecord:
        if self.done:
            raise RuntimeError("episode finished; reset the engine")
        t0 = time.perf_counter()

        # 1. fold in the action observed one tick in arrears
        if self.prev_u_h is not None:
            u_obs = belief_mod.project_action(self.prev_u_h, self.replica_params.action_set)
            self.belief = belief_mod.update(
                self.belief, u_obs, self.prev_x_h, self.prev_replica_traj,
                self.replica_params, self.model, self.config.omega_h)

        # 2. predict the human over the robot's horizon
        robot_pred = self._shifted_plan_states()
        dist0 = StateDistribution.delta(self.grid, self.x_h)
        stack = propagate(dist0, robot_pred, self.belief, self.replica_params,
                          self.grid, self.robot_params.horizon, self.model,
                          omega_h=self.config.omega_h,
                          p_threshold=self.robot_params.p_threshold,
                          prune_collisions=self.config.prune_collisions)

        # 3. replan the robot under the forbidden cells
        plan = planner_mod.plan(self.x_r, stack, self.robot_params, self.model,
                                warm_start=self.prev_plan)

        # 4. the human moves (model-driven or externally steered)
        n_h = self.human_params.plan_length
        replica_traj = self._human_view_of_robot(n_h, robot_pred)
        if self.config.human_control == SCRIPTED:
            noise = self.rng.normal(0.0, self.human_params.dist_noise_std, size=n_h)
            human_plan = solve_human_plan(self.x_h, replica_traj, self.human_params,
                                          self.model, noise_samples=noise)
            u_h = human_plan.actions[0]
        else:
            cmd = np.zeros(2) if external_command is None else np.asarray(external_command, float)
            u_h = belief_mod.project_action(cmd, self.human_params.action_set)
        u_r = plan.actions[0]

        record = TickRecord(
            t=self.t, x_h=self.x_h.copy(), x_r=self.x_r.copy(),
            u_h=np.asarray(u_h, float).copy(), u_r=np.asarray(u_r, float).copy(),
            belief_p=self.belief.p_concerned,
            p_coll=stack.p_coll.copy(), feasible=plan.feasible,
            support_counts=[s.support_count() for s in stack.steps],
            display_counts=[s.support_count(DISPLAY_MASS) for s in stack.steps],
            forbidden=stack.forbidden,
            heatmap=[s.to_sparse(DISPLAY_MASS) for s in stack.steps],
            plan_states=plan.predicted_states.copy(),
            replica_traj=replica_traj.copy(),
            wall_ms=0.0,
        )

        # 5. simultaneous application
        self.prev_x_h = self.x_h.copy()
        self.prev_u_h = np.asarray(u_h, float).copy()
        self.prev_replica_traj = replica_traj
        self.prev_u_r = np.asarray(u_r, float).copy()
        self.prev_plan = plan
        self.x_h = step(self.x_h, u_h, self.model)
        self.x_r = step(self.x_r, u_r, self.model)
        self.t += 1

        tol = self.config.stop_tolerance
        d_h = np.hypot(*(self.x_h - self.human_params.goal))
        d_r = np.hypot(*(self.x_r - self.robot_params.goal))
        # A discrete-action agent can stall short of its goal once a step's
        # effort outweighs the remaining gain; treat a sustained standstill
        # near both goals as convergence (never during a mid-arena standoff).
        if (np.max(np.abs(np.asarray(u_h))) <= 1e-6 and np.max(np.abs(u_r)) <= 1e-6
                and d_h <= 1.0 and d_r <= 1.0):
            self._idle_ticks += 1
        else:
            self._idle_ticks = 0
        if d_h <= tol and d_r <= tol:
            self.done = True
            self.trace.stop_reason = "goals_reached"
        elif self._idle_ticks >= 3:
            self.done = True
            self.trace.stop_reason = "steady_state"
        elif self.t >= self.config.max_steps:
            self.done = True
            self.trace.stop_reason = "max_steps"

        record.wall_ms = (time.perf_counter() - t0) * 1e3
        self.trace.records.append(record)
        if self.done:
            self.trace.final_x_h = self.x_h.copy()
            self.trace.final_x_r = self.x_r.copy()
        return record


def run_closed_loop(config: ScenarioConfig) -> SimTrace:
    """Run one scripted episode to termination."""
    if config.human_control != SCRIPTED:
        raise ValueError("run_closed_loop drives scripted scenarios only")
    engine = Engine(config)
    while not engine.done:
        engine.tick()
    return engine.trace
