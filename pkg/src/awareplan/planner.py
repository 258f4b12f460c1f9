"""Chance-constrained receding-horizon planner for the robot.

Minimizes a quadratic goal + effort objective over a velocity sequence
subject to box input bounds, arena bounds, and keep-out constraints
around every forbidden grid cell (cells whose predicted human occupancy
meets the collision threshold): the planned position at step k must
clear every step-k forbidden cell center by buffer + cell_size / 2.

The keep-out constraints are nonconvex, so the solver runs sequential
convex passes: around the incumbent trajectory each keep-out disc is
replaced by its separating half-space, the resulting convex subproblem
is solved (SLSQP on the flattened inputs), and the linearization point
is updated. Several deterministic starts are tried: the shifted warm
start, a straight saturated run at the goal, and, when keep-outs exist,
left and right detour seeds; the best truly feasible candidate wins. The
warm start itself is always evaluated as a candidate, so replanning in a
frozen environment never yields a costlier plan than the plan it
started from. If nothing feasible is found the planner falls back to
minimizing the worst constraint violation and flags the plan infeasible;
a receding-horizon controller must always emit an action.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize as _scipy_minimize


def minimize(*args, **kwargs):
    """scipy.optimize.minimize with SLSQP's box-probe warning silenced;
    the line search probes outside the box before clipping, which is
    harmless for the clipped result."""
    with warnings.catch_warnings():
        warnings.filterwarnings(
            "ignore", message="Values in x were outside bounds",
            category=RuntimeWarning)
        return _scipy_minimize(*args, **kwargs)

from .kinematics import KinematicModel, as_vec2
from .prediction import Grid, PredictionStack

logger = logging.getLogger(__name__)

_PSD_TOL = 1e-9
_SOLVE_MARGIN = 1e-6   # inner radius padding so strict checks pass at the boundary
_CONVERGED = 1e-9
_MAX_OUTER = 8


def _check_weight_matrix(name: str, m) -> np.ndarray:
    arr = np.asarray(m, dtype=float)
    if arr.shape != (2, 2):
        raise ValueError(f"{name} must be 2x2, got shape {arr.shape}")
    if not np.allclose(arr, arr.T, atol=_PSD_TOL):
        raise ValueError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(arr).min() < -_PSD_TOL:
        raise ValueError(f"{name} must be positive semidefinite")
    return arr


@dataclass(frozen=True)
class RobotParams:
    """Objective weights, horizon and constraint sets of the robot."""

    goal: np.ndarray
    theta5: np.ndarray
    theta6: np.ndarray
    horizon: int
    input_box: np.ndarray     # [[vx_lo, vx_hi], [vy_lo, vy_hi]]
    state_bounds: np.ndarray  # [[x_lo, x_hi], [y_lo, y_hi]]
    p_threshold: float
    buffer: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "goal", as_vec2(self.goal))
        object.__setattr__(self, "theta5", _check_weight_matrix("theta5", self.theta5))
        object.__setattr__(self, "theta6", _check_weight_matrix("theta6", self.theta6))
        if self.horizon < 1:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        box = np.asarray(self.input_box, dtype=float)
        bounds = np.asarray(self.state_bounds, dtype=float)
        for name, arr in (("input_box", box), ("state_bounds", bounds)):
            if arr.shape != (2, 2):
                raise ValueError(f"{name} must be [[lo, hi], [lo, hi]]")
            if np.any(arr[:, 0] > arr[:, 1]):
                raise ValueError(f"{name} has lo > hi")
        object.__setattr__(self, "input_box", box)
        object.__setattr__(self, "state_bounds", bounds)
        if not 0.0 <= self.p_threshold <= 1.0:
            raise ValueError(f"p_threshold must lie in [0, 1], got {self.p_threshold}")
        if self.buffer < 0.0:
            raise ValueError("buffer must be nonnegative")


@dataclass
class RobotPlan:
    """Planned velocity sequence with its rollout, cost and feasibility."""

    actions: np.ndarray           # (N, 2)
    predicted_states: np.ndarray  # (N + 1, 2)
    cost: float
    feasible: bool


def constraint_check(states, forbidden, grid: Grid, buffer: float,
                     state_bounds=None) -> bool:
    """True iff the trajectory clears every per-step forbidden cell.

    `forbidden[k]` lists cells the position at step k+1 must clear: its
    Euclidean distance to each cell center must exceed
    buffer + cell_size / 2 (strictly). The current state (index 0) is
    not constrained. With `state_bounds` given, every state must also
    lie inside the arena rectangle.
    """
    st = np.asarray(states, dtype=float)
    if st.shape[0] < len(forbidden) + 1:
        raise ValueError("trajectory shorter than the forbidden-set horizon")
    if state_bounds is not None:
        b = np.asarray(state_bounds, dtype=float)
        if (np.any(st[:, 0] < b[0, 0]) or np.any(st[:, 0] > b[0, 1])
                or np.any(st[:, 1] < b[1, 0]) or np.any(st[:, 1] > b[1, 1])):
            return False
    clearance = buffer + grid.cell_size / 2.0
    for k, cells in enumerate(forbidden):
        if not cells:
            continue
        centers = np.array([grid.center_of(c) for c in cells])
        d = np.hypot(st[k + 1, 0] - centers[:, 0], st[k + 1, 1] - centers[:, 1])
        if np.any(d <= clearance):
            return False
    return True


def _positions(x0, u: np.ndarray, dt: float) -> np.ndarray:
    """States 0..N from a flat (N, 2) action array."""
    out = np.empty((u.shape[0] + 1, 2))
    out[0] = x0
    np.cumsum(u * dt, axis=0, out=out[1:])
    out[1:] += x0
    return out


def _cost_and_grad(uflat: np.ndarray, x0, params: RobotParams, dt: float):
    n = params.horizon
    u = uflat.reshape(n, 2)
    x = _positions(x0, u, dt)
    e = x[1:] - params.goal
    cost = float(np.einsum("ki,ij,kj->", e, params.theta5, e)
                 + np.einsum("ki,ij,kj->", u, params.theta6, u))
    # d cost / d u_j = 2 dt * sum_{k > j} theta5 e_k + 2 theta6 u_j
    ge = 2.0 * dt * (e @ params.theta5.T)
    grad_pos = np.flip(np.cumsum(np.flip(ge, axis=0), axis=0), axis=0)
    grad = grad_pos + 2.0 * (u @ params.theta6.T)
    return cost, grad.ravel()


def _true_cost(u: np.ndarray, x0, params: RobotParams, dt: float) -> float:
    return _cost_and_grad(u.ravel(), x0, params, dt)[0]


def _keepout_terms(stack: PredictionStack, params: RobotParams, grid: Grid):
    """(step index, center, solve radius) per forbidden cell."""
    radius = params.buffer + grid.cell_size / 2.0 + _SOLVE_MARGIN
    terms = []
    for k, cells in enumerate(stack.forbidden[:params.horizon]):
        for c in cells:
            terms.append((k, grid.center_of(c), radius))
    return terms


def _linearized_constraints(incumbent: np.ndarray, x0, terms, params: RobotParams, dt: float):
    """All linear inequalities as one vector-valued constraint.

    Keep-out discs become half-space surrogates at the incumbent
    trajectory (separating hyperplanes); the arena rectangle is linear
    already. The jacobian is constant, so it is assembled once.
    """
    n = params.horizon
    xbar = _positions(x0, incumbent, dt)
    rows_a = []   # (m, 2n) coefficients on the flattened inputs
    rows_b = []   # offsets: constraint is A u + b >= 0
    for k, center, radius in terms:
        diff = xbar[k + 1] - center
        nrm = float(np.hypot(diff[0], diff[1]))
        normal = diff / nrm if nrm > 1e-12 else np.array([1.0, 0.0])
        row = np.zeros((n, 2))
        row[:k + 1] = dt * normal
        rows_a.append(row.ravel())
        rows_b.append(float(normal @ (x0 - center)) - radius)
    b = params.state_bounds
    for axis in (0, 1):
        for k in range(1, n + 1):
            row = np.zeros((n, 2))
            row[:k, axis] = dt
            rows_a.append(row.ravel())
            rows_b.append(float(x0[axis] - b[axis, 0]))
            rows_a.append(-row.ravel())
            rows_b.append(float(b[axis, 1] - x0[axis]))
    a_mat = np.array(rows_a)
    b_vec = np.array(rows_b)
    return [{
        "type": "ineq",
        "fun": lambda uflat, A=a_mat, bb=b_vec: A @ uflat + bb,
        "jac": lambda uflat, A=a_mat: A,
    }]


def _evaluate(u: np.ndarray, x0, stack, params: RobotParams, grid: Grid, dt: float):
    """Clip into the box, then score against the true (strict) constraints."""
    box = params.input_box
    u = np.clip(u, box[:, 0], box[:, 1])
    states = _positions(x0, u, dt)
    cost = _true_cost(u, x0, params, dt)
    feasible = constraint_check(states, stack.forbidden[:params.horizon], grid,
                                params.buffer, state_bounds=params.state_bounds)
    return u, states, cost, feasible


def _base_seeds(x0, params: RobotParams, warm: np.ndarray | None) -> list[np.ndarray]:
    n = params.horizon
    box = params.input_box
    seeds = []
    if warm is not None:
        seeds.append(np.clip(warm, box[:, 0], box[:, 1]))
    seeds.append(_straight_seed(x0, params))
    if warm is None:
        seeds.append(np.zeros((n, 2)))
    return seeds


def _straight_seed(x0, params: RobotParams) -> np.ndarray:
    box = params.input_box
    to_goal = params.goal - x0
    nrm = float(np.hypot(to_goal[0], to_goal[1]))
    direction = to_goal / nrm if nrm > 1e-12 else np.zeros(2)
    vmax = float(np.max(np.abs(box)))
    return np.clip(np.tile(direction * max(vmax, 1.0) * 10.0, (params.horizon, 1)),
                   box[:, 0], box[:, 1])


def _detour_seeds(x0, params: RobotParams) -> list[np.ndarray]:
    """Left/right offsets of the straight run, to escape the nonconvex split."""
    box = params.input_box
    to_goal = params.goal - x0
    nrm = float(np.hypot(to_goal[0], to_goal[1]))
    if nrm <= 1e-12:
        return []
    direction = to_goal / nrm
    perp = np.array([-direction[1], direction[0]])
    vmax = float(np.max(np.abs(box)))
    straight = _straight_seed(x0, params)
    lead = max(1, params.horizon // 2)
    seeds = []
    for side in (1.0, -1.0):
        seed = straight.copy()
        veer = np.clip((direction + 1.5 * side * perp) * max(vmax, 1.0) * 10.0,
                       box[:, 0], box[:, 1])
        seed[:lead] = veer
        seeds.append(seed)
    return seeds


def plan(x_R, stack: PredictionStack, params: RobotParams, model: KinematicModel,
         warm_start: RobotPlan | None = None) -> RobotPlan:
    """Solve the receding-horizon problem against a prediction stack.

    `warm_start` is the previous plan; it is shifted by one step with the
    final action repeated before use. Returns the best feasible plan
    found, or the feasibility-first fallback flagged infeasible.
    """
    x0 = as_vec2(x_R)
    n = params.horizon
    dt = model.dt
    if len(stack) < n:
        raise ValueError(f"prediction stack has {len(stack)} steps, planner needs {n}")
    grid = stack.steps[0].grid
    terms = _keepout_terms(stack, params, grid)
    box = params.input_box
    slsqp_bounds = [(box[0, 0], box[0, 1]), (box[1, 0], box[1, 1])] * n

    warm = None
    if warm_start is not None:
        warm = np.vstack([warm_start.actions[1:], warm_start.actions[-1:]])

    best = None  # ((infeasible, cost, order), u, states, feasible)

    def consider(u, order):
        nonlocal best
        u, states, cost, feasible = _evaluate(u, x0, stack, params, grid, dt)
        key = (not feasible, cost, order)
        if best is None or key < best[0]:
            best = (key, u, states, feasible)

    def scp(seed, si):
        consider(seed, (si, -1))
        incumbent = seed
        for it in range(_MAX_OUTER):
            cons = _linearized_constraints(incumbent, x0, terms, params, dt)
            res = minimize(
                _cost_and_grad, incumbent.ravel(), args=(x0, params, dt),
                jac=True, method="SLSQP", bounds=slsqp_bounds, constraints=cons,
                options={"maxiter": 200, "ftol": 1e-12},
            )
            new = res.x.reshape(n, 2)
            consider(new, (si, it))
            if np.max(np.abs(new - incumbent)) < _CONVERGED or not terms:
                break  # converged, or convex (one pass is exact)
            incumbent = new

    if warm_start is not None:
        # In a static replan the previous solution is still a candidate as
        # is; evaluating it up front makes replanning monotone in cost.
        consider(np.asarray(warm_start.actions, dtype=float), (-1, -1))

    for si, seed in enumerate(_base_seeds(x0, params, warm)):
        scp(seed, si)

    # Detour starts only pay off when a keep-out actually binds.
    if terms and (not best[3] or _min_clearance(best[2], terms) < 0.25):
        for sj, seed in enumerate(_detour_seeds(x0, params)):
            scp(seed, 10 + sj)

    key, u, states, feasible = best
    if feasible:
        return RobotPlan(actions=u, predicted_states=states,
                         cost=_true_cost(u, x0, params, dt), feasible=True)

    logger.info("no feasible plan found; min-violation fallback engaged")
    return _fallback(u, x0, stack, terms, slsqp_bounds, params, grid, dt)


def _min_clearance(states: np.ndarray, terms) -> float:
    """Smallest gap between the trajectory and any keep-out boundary."""
    gap = np.inf
    for k, center, radius in terms:
        d = float(np.hypot(*(states[k + 1] - center))) - radius
        gap = min(gap, d)
    return gap


def _violation_and_grad(uflat: np.ndarray, x0, terms, params: RobotParams, dt: float):
    """Sum of squared keep-out and arena violations (smooth surrogate)."""
    n = params.horizon
    u = uflat.reshape(n, 2)
    x = _positions(x0, u, dt)
    total = 0.0
    grad_x = np.zeros((n + 1, 2))
    for k, center, radius in terms:
        diff = x[k + 1] - center
        d = float(np.hypot(diff[0], diff[1]))
        gap = radius - d
        if gap > 0.0 and d > 1e-12:
            total += gap * gap
            grad_x[k + 1] += -2.0 * gap * diff / d
    b = params.state_bounds
    for axis in (0, 1):
        low = b[axis, 0] - x[1:, axis]
        high = x[1:, axis] - b[axis, 1]
        total += float(np.sum(np.maximum(low, 0.0) ** 2 + np.maximum(high, 0.0) ** 2))
        grad_x[1:, axis] += -2.0 * np.maximum(low, 0.0) + 2.0 * np.maximum(high, 0.0)
    gsum = np.flip(np.cumsum(np.flip(grad_x[1:], axis=0), axis=0), axis=0)
    return total, (dt * gsum).ravel()


def _fallback(u_init, x0, stack, terms, slsqp_bounds,
              params: RobotParams, grid: Grid, dt: float) -> RobotPlan:
    n = params.horizon
    res = minimize(
        _violation_and_grad, u_init.ravel(), args=(x0, terms, params, dt),
        jac=True, method="SLSQP", bounds=slsqp_bounds,
        options={"maxiter": 300, "ftol": 1e-14},
    )
    if not np.all(np.isfinite(res.x)):
        logger.warning("fallback optimization diverged; emitting emergency stop")
        zero = np.zeros((n, 2))
        return RobotPlan(actions=zero, predicted_states=_positions(x0, zero, dt),
                         cost=_true_cost(zero, x0, params, dt), feasible=False)
    u = np.clip(res.x.reshape(n, 2), params.input_box[:, 0], params.input_box[:, 1])

    # Re-optimize cost at the achieved violation level: relax each keep-out
    # radius to what the fallback trajectory attained, then one convex pass.
    x = _positions(x0, u, dt)
    relaxed = []
    for k, center, radius in terms:
        d = float(np.hypot(*(x[k + 1] - center)))
        relaxed.append((k, center, min(radius, max(d - 1e-9, 0.0))))
    cons = _linearized_constraints(u, x0, relaxed, params, dt)
    res2 = minimize(
        _cost_and_grad, u.ravel(), args=(x0, params, dt),
        jac=True, method="SLSQP", bounds=slsqp_bounds, constraints=cons,
        options={"maxiter": 200, "ftol": 1e-12},
    )
    if np.all(np.isfinite(res2.x)):
        u2 = np.clip(res2.x.reshape(n, 2), params.input_box[:, 0], params.input_box[:, 1])
        v_old = _violation_and_grad(u.ravel(), x0, terms, params, dt)[0]
        v_new = _violation_and_grad(u2.ravel(), x0, terms, params, dt)[0]
        if v_new <= v_old + 1e-12:
            u = u2
    states = _positions(x0, u, dt)
    feasible = constraint_check(states, stack.forbidden[:n], grid, params.buffer,
                                state_bounds=params.state_bounds)
    return RobotPlan(actions=u, predicted_states=states,
                     cost=_true_cost(u, x0, params, dt), feasible=feasible)
