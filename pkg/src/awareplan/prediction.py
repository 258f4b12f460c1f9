"""Robot-side prediction of the human: action mixture and grid propagation.

The robot models the next human action as a two-component mixture: with
weight (1 - omega_h) the human acts deliberately (a delta on the exact
optimizer of the human objective under a given awareness coefficient),
with weight omega_h it acts uniformly at random over U_H. Pushing that
mixture through the dynamics over a discretized arena yields a per-cell
probability distribution of future human states, step by step, from
which per-step collision probabilities and forbidden cells are read off.

Propagation re-solves the human problem at every occupied cell, every
step and both awareness values. Rather than running one search per
cell, a shared backward value-function sweep over the cell lattice (or
an integer refinement of it when displacements are fractions of a
cell) produces the optimal first action of every cell at once; action
sets that fit no refinement fall back to per-cell exact solves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kinematics import KinematicModel, Vec2, as_vec2
from .human import HumanParams, solve_human_plan

SUPPORT_EPS = 1e-12  # cells below this mass are dropped from the support


class OutOfGridError(ValueError):
    """A position fell outside the grid extent."""


@dataclass(frozen=True)
class Grid:
    """Uniform square discretization of the arena, half-open cells.

    Cell (i, j) covers [origin + i*s, origin + (i+1)*s) x
    [origin + j*s, origin + (j+1)*s).
    """

    origin: np.ndarray
    cell_size: float
    nx: int
    ny: int

    def __post_init__(self):
        object.__setattr__(self, "origin", as_vec2(self.origin))
        if not self.cell_size > 0.0:
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid must have at least one cell per axis")

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    def cell_of(self, position) -> tuple[int, int]:
        """Cell containing the position; boundaries belong to the upper cell."""
        p = as_vec2(position)
        ix = int(np.floor((p[0] - self.origin[0]) / self.cell_size))
        iy = int(np.floor((p[1] - self.origin[1]) / self.cell_size))
        if not (0 <= ix < self.nx and 0 <= iy < self.ny):
            raise OutOfGridError(f"position {p.tolist()} outside grid extent")
        return ix, iy

    def contains(self, position) -> bool:
        p = as_vec2(position)
        ix = np.floor((p[0] - self.origin[0]) / self.cell_size)
        iy = np.floor((p[1] - self.origin[1]) / self.cell_size)
        return 0 <= ix < self.nx and 0 <= iy < self.ny

    def center_of(self, cell: tuple[int, int]) -> Vec2:
        ix, iy = cell
        return self.origin + self.cell_size * np.array([ix + 0.5, iy + 0.5])

    def centers(self) -> np.ndarray:
        """All cell centers as an (nx, ny, 2) array."""
        xs = self.origin[0] + self.cell_size * (np.arange(self.nx) + 0.5)
        ys = self.origin[1] + self.cell_size * (np.arange(self.ny) + 0.5)
        out = np.empty((self.nx, self.ny, 2))
        out[..., 0] = xs[:, None]
        out[..., 1] = ys[None, :]
        return out


def cell_of(position, grid: Grid) -> tuple[int, int]:
    return grid.cell_of(position)


@dataclass
class ActionDistribution:
    """Probabilities over the rows of an action set."""

    actions: np.ndarray  # (A, 2), the declared U_H ordering
    probs: np.ndarray    # (A,)

    def __post_init__(self):
        self.actions = np.asarray(self.actions, dtype=float)
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.shape != (self.actions.shape[0],):
            raise ValueError("probs must align with the action set")
        if np.any(self.probs < -1e-12):
            raise ValueError("negative probability")
        if abs(float(self.probs.sum()) - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {self.probs.sum()}, not 1")

    def index_of(self, action) -> int:
        u = as_vec2(action)
        hits = np.nonzero((self.actions[:, 0] == u[0]) & (self.actions[:, 1] == u[1]))[0]
        if hits.size == 0:
            raise ValueError(f"action {u.tolist()} is not a member of the action set")
        return int(hits[0])

    def prob_of(self, action) -> float:
        return float(self.probs[self.index_of(action)])


@dataclass
class StateDistribution:
    """Per-cell probability mass of the human's position."""

    grid: Grid
    mass: np.ndarray  # (nx, ny)

    def __post_init__(self):
        self.mass = np.asarray(self.mass, dtype=float)
        if self.mass.shape != (self.grid.nx, self.grid.ny):
            raise ValueError("mass array does not match the grid shape")
        if np.any(self.mass < -1e-12):
            raise ValueError("negative cell mass")

    @classmethod
    def delta(cls, grid: Grid, position) -> "StateDistribution":
        m = np.zeros((grid.nx, grid.ny))
        m[grid.cell_of(position)] = 1.0
        return cls(grid, m)

    def total_mass(self) -> float:
        return float(self.mass.sum())

    def support(self, threshold: float = SUPPORT_EPS):
        """Occupied cells as an (M, 2) integer array, row-major order."""
        return np.argwhere(self.mass >= threshold)

    def support_count(self, threshold: float = SUPPORT_EPS) -> int:
        return int(np.count_nonzero(self.mass >= threshold))

    def to_sparse(self, threshold: float = SUPPORT_EPS) -> list:
        """[[ix, iy, mass], ...] sorted by cell index."""
        cells = self.support(threshold)
        return [[int(ix), int(iy), float(self.mass[ix, iy])] for ix, iy in cells]


@dataclass
class PredictionStack:
    """Propagated human-state distributions for prediction steps 1..N.

    `p_coll[k-1]` is the mass found in the robot's predicted cell at step
    k (conditioned on no earlier collision when pruning is enabled), and
    `forbidden[k-1]` lists the cells whose mass meets the threshold used
    to build it, sorted by cell index.
    """

    steps: list  # list[StateDistribution]
    p_coll: np.ndarray
    forbidden: list  # list[list[tuple[int, int]]]
    p_threshold: float
    pruned: bool
    robot_cells: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    def to_json_dict(self, sparse_threshold: float = SUPPORT_EPS) -> dict:
        return {
            "p_threshold": self.p_threshold,
            "pruned": self.pruned,
            "p_coll": [float(p) for p in self.p_coll],
            "forbidden": [[[int(a), int(b)] for a, b in cells] for cells in self.forbidden],
            "steps": [d.to_sparse(sparse_threshold) for d in self.steps],
        }


def random_distribution(action_set) -> ActionDistribution:
    """Uniform distribution over the action set."""
    acts = np.asarray(action_set, dtype=float)
    if acts.ndim != 2 or acts.shape[0] == 0:
        raise ValueError("action set must be a non-empty (A, 2) array")
    return ActionDistribution(acts, np.full(acts.shape[0], 1.0 / acts.shape[0]))


def deliberate_distribution(x_H, robot_traj, beta: int, params: HumanParams,
                            model: KinematicModel) -> ActionDistribution:
    """Delta distribution on the optimal first action under the given beta."""
    plan = solve_human_plan(x_H, robot_traj, params.with_beta(beta), model)
    probs = np.zeros(params.action_set.shape[0])
    probs[plan.action_indices[0]] = 1.0
    return ActionDistribution(params.action_set, probs)


def mixture_distribution(x_H, robot_traj, beta: int, params: HumanParams,
                         model: KinematicModel, omega_h: float) -> ActionDistribution:
    """(1 - omega_h) * deliberate + omega_h * uniform, pointwise."""
    if not 0.0 <= omega_h <= 1.0:
        raise ValueError(f"omega_h must lie in [0, 1], got {omega_h}")
    uniform = random_distribution(params.action_set)
    if omega_h == 1.0:
        # The deliberate component vanishes; skip the solve entirely.
        return uniform
    delib = deliberate_distribution(x_H, robot_traj, beta, params, model)
    return ActionDistribution(params.action_set,
                              (1.0 - omega_h) * delib.probs + omega_h * uniform.probs)


def collision_probability(dist: StateDistribution, robot_pos, grid: Grid) -> float:
    """Mass of the cell the robot occupies."""
    return float(dist.mass[grid.cell_of(robot_pos)])


# ---------------------------------------------------------------------------
# Batch replica: optimal first action of every cell center at once.

def _lattice_refinement(action_set, dt: float, cell_size: float, max_refine: int = 8):
    """Smallest m such that every action displacement is an integer
    multiple of cell_size / m, with the refined-unit shifts; None if no
    m <= max_refine works (the caller falls back to float binning)."""
    disp = np.asarray(action_set, dtype=float) * dt / cell_size
    for m in range(1, max_refine + 1):
        shifts = np.rint(disp * m)
        if np.max(np.abs(disp * m - shifts)) <= 1e-9:
            return m, shifts.astype(int)
    return None


def _shifted(arr: np.ndarray, sx: int, sy: int, fill: float) -> np.ndarray:
    """out[c] = arr[c + s], cells shifted past the boundary filled."""
    nx, ny = arr.shape
    out = np.full((nx, ny), fill)
    x0, x1 = max(0, -sx), min(nx, nx - sx)
    y0, y1 = max(0, -sy), min(ny, ny - sy)
    if x0 < x1 and y0 < y1:
        out[x0:x1, y0:y1] = arr[x0 + sx:x1 + sx, y0 + sy:y1 + sy]
    return out


def first_action_field(grid: Grid, beta: int, params: HumanParams, model: KinematicModel,
                       robot_positions: np.ndarray, window=None) -> np.ndarray:
    """Optimal first action index for a human starting at each cell center.

    `robot_positions` holds the robot states at stages 0..N of the human
    problem. The backward sweep runs on a lattice padded by the full
    reachable range (cells beyond the grid are virtual), so every cell
    sees exactly the same unconstrained problem as `solve_human_plan`;
    ties resolve to the smallest action index, which is the first element
    of the lexicographically smallest optimal sequence.

    `window` restricts the computation to grid cells [ix0, ix1) x
    [iy0, iy1); entries outside it are zero and meaningless.
    """
    acts = params.action_set
    n = params.plan_length
    ix0, ix1, iy0, iy1 = window if window is not None else (0, grid.nx, 0, grid.ny)
    ref = _lattice_refinement(acts, model.dt, grid.cell_size)
    if ref is None:
        return _first_action_field_slow(grid, beta, params, model, robot_positions,
                                        (ix0, ix1, iy0, iy1))
    m, shifts = ref

    # Sweep over the refined lattice anchored at cell centers: point j sits
    # at center(cell 0) + j * cell_size / m, so cell i is point m * i and
    # every action displacement is an integer point shift.
    step_len = grid.cell_size / m
    pad = int(np.max(np.abs(shifts))) * n if shifts.size else 0
    jx0, jx1 = m * ix0 - pad, m * (ix1 - 1) + pad + 1
    jy0, jy1 = m * iy0 - pad, m * (iy1 - 1) + pad + 1
    nx, ny = jx1 - jx0, jy1 - jy0
    xs = grid.origin[0] + grid.cell_size * 0.5 + step_len * (np.arange(nx) + jx0)
    ys = grid.origin[1] + grid.cell_size * 0.5 + step_len * (np.arange(ny) + jy0)
    cx = np.broadcast_to(xs[:, None], (nx, ny))
    cy = np.broadcast_to(ys[None, :], (nx, ny))

    g = params.goal
    goal_term = (params.theta1[0, 0] * (cx - g[0]) ** 2
                 + (params.theta1[0, 1] + params.theta1[1, 0]) * (cx - g[0]) * (cy - g[1])
                 + params.theta1[1, 1] * (cy - g[1]) ** 2)
    efforts = np.einsum("ai,ij,aj->a", acts, params.theta2, acts)

    def safety(stage: int) -> np.ndarray:
        r = robot_positions[stage]
        dist = np.hypot(cx - r[0], cy - r[1])
        return params.theta3 * np.exp(-params.theta4 * dist)

    value = np.zeros((nx, ny))
    best_first = np.zeros((nx, ny), dtype=np.int32)
    for j in range(n - 1, -1, -1):
        landing = goal_term + value
        if beta:
            landing = landing + safety(j + 1)
        best = np.full((nx, ny), np.inf)
        for a, (sx, sy) in enumerate(shifts):
            cand = _shifted(landing, sx, sy, np.inf) + efforts[a]
            better = cand < best
            if j == 0:
                best_first[better] = a
            np.copyto(best, cand, where=better)
        value = best

    out = np.zeros((grid.nx, grid.ny), dtype=np.int32)
    sel_x = m * np.arange(ix0, ix1) - jx0
    sel_y = m * np.arange(iy0, iy1) - jy0
    out[ix0:ix1, iy0:iy1] = best_first[np.ix_(sel_x, sel_y)]
    return out


def _first_action_field_slow(grid, beta, params, model, robot_positions, window) -> np.ndarray:
    ix0, ix1, iy0, iy1 = window
    out = np.zeros((grid.nx, grid.ny), dtype=np.int32)
    p = params.with_beta(beta)
    for ix in range(ix0, ix1):
        for iy in range(iy0, iy1):
            plan = solve_human_plan(grid.center_of((ix, iy)), robot_positions, p, model)
            out[ix, iy] = plan.action_indices[0]
    return out


def _replica_robot_profile(robot_traj: np.ndarray, anchor: int, params: HumanParams) -> np.ndarray:
    """Robot states the replica human at prediction step `anchor` plans
    against: the tail of the robot's trajectory padded by its last state;
    a non-predictive human sees the robot frozen where it stands."""
    n = params.plan_length
    if params.horizon == 0:
        return np.tile(robot_traj[min(anchor, len(robot_traj) - 1)], (n + 1, 1))
    idx = np.minimum(np.arange(anchor, anchor + n + 1), len(robot_traj) - 1)
    return robot_traj[idx]


def propagate(
    dist0: StateDistribution,
    robot_traj,
    belief,
    params: HumanParams,
    grid: Grid,
    n_steps: int,
    model: KinematicModel,
    omega_h: float,
    p_threshold: float,
    prune_collisions: bool = True,
) -> PredictionStack:
    """Push the human-state distribution through the action mixture.

    For each step k = 1..n_steps, every occupied cell emits its mass
    through the mixture evaluated at the cell center (deliberate action
    per awareness value, weighted by the belief, plus the uniform
    component), landing in the cell containing center + dt * u. The
    robot's predicted cell is read off as the collision probability and,
    with pruning enabled, removed before the next step; cells at or
    above `p_threshold` (before removal) form the forbidden set.

    `belief` is the probability the human is concerned, either a float
    or an object with a `p_concerned` attribute.
    """
    if not 0.0 <= omega_h <= 1.0:
        raise ValueError(f"omega_h must lie in [0, 1], got {omega_h}")
    if n_steps < 1:
        raise ValueError("need at least one prediction step")
    if abs(dist0.total_mass() - 1.0) > 1e-9:
        raise ValueError(f"initial distribution has mass {dist0.total_mass()}, expected 1")
    p1 = float(getattr(belief, "p_concerned", belief))
    if not 0.0 <= p1 <= 1.0:
        raise ValueError(f"belief must lie in [0, 1], got {p1}")
    traj = np.asarray(robot_traj, dtype=float)
    if traj.shape[0] < n_steps + 1:
        raise ValueError(f"robot trajectory must cover steps 0..{n_steps}")

    acts = params.action_set
    n_actions = acts.shape[0]
    ref = _lattice_refinement(acts, model.dt, grid.cell_size)
    if ref is not None:
        m_ref, rshifts = ref
        # cell-index offset of each action: exact integer arithmetic even
        # when a displacement lands exactly on a cell boundary
        cell_offsets = (m_ref + 2 * rshifts) // (2 * m_ref)
    else:
        cell_offsets = None

    mass = dist0.mass.copy()
    steps: list[StateDistribution] = []
    p_coll = np.zeros(n_steps)
    forbidden: list[list[tuple[int, int]]] = []
    robot_cells: list[tuple[int, int]] = []
    beta_weight = {0: 1.0 - p1, 1: p1}

    def landing_cells(support: np.ndarray, a: int) -> np.ndarray:
        """Destination cells of the support under action a, or raise."""
        if cell_offsets is not None:
            dest = support + cell_offsets[a]
        else:
            ctr = grid.origin + grid.cell_size * (support + 0.5) + model.dt * acts[a]
            dest = np.floor((ctr - grid.origin) / grid.cell_size).astype(int)
        if dest.size and (dest.min() < 0 or dest[:, 0].max() >= grid.nx
                          or dest[:, 1].max() >= grid.ny):
            raise OutOfGridError(
                f"propagated mass left the grid at prediction step {k + 1}; "
                "enlarge the arena")
        return dest

    for k in range(n_steps):
        support = np.argwhere(mass >= SUPPORT_EPS)
        sup_mass = mass[support[:, 0], support[:, 1]]
        new = np.zeros_like(mass)

        # Deliberate component: one delta per (cell, awareness value).
        if omega_h < 1.0 and support.size:
            profile = _replica_robot_profile(traj, k, params)
            win = (int(support[:, 0].min()), int(support[:, 0].max()) + 1,
                   int(support[:, 1].min()), int(support[:, 1].max()) + 1)
            for beta in (0, 1):
                w = (1.0 - omega_h) * beta_weight[beta]
                if w == 0.0:
                    continue
                field_ = first_action_field(grid, beta, params, model, profile, window=win)
                a_idx = field_[support[:, 0], support[:, 1]]
                for a in np.unique(a_idx):
                    rows = a_idx == a
                    dest = landing_cells(support[rows], int(a))
                    np.add.at(new, (dest[:, 0], dest[:, 1]), sup_mass[rows] * w)
        # Uniform component, identical under both awareness values.
        if omega_h > 0.0:
            w = omega_h / n_actions
            for a in range(n_actions):
                dest = landing_cells(support, a)
                np.add.at(new, (dest[:, 0], dest[:, 1]), sup_mass * w)

        rc = grid.cell_of(traj[k + 1])
        robot_cells.append(rc)
        p_coll[k] = new[rc]
        forb = np.argwhere(new >= p_threshold)
        forbidden.append([(int(a), int(b)) for a, b in forb])
        if prune_collisions:
            new[rc] = 0.0
        new[new < SUPPORT_EPS] = 0.0
        steps.append(StateDistribution(grid, new))
        mass = new

    return PredictionStack(steps=steps, p_coll=p_coll, forbidden=forbidden,
                           p_threshold=p_threshold, pruned=prune_collisions,
                           robot_cells=robot_cells)
