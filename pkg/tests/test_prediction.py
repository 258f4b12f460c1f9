import numpy as np
import pytest

from awareplan.human import HumanParams, solve_human_plan, velocity_lattice
from awareplan.kinematics import KinematicModel
from awareplan.prediction import (
    Grid,
    OutOfGridError,
    StateDistribution,
    cell_of,
    collision_probability,
    deliberate_distribution,
    first_action_field,
    mixture_distribution,
    propagate,
    random_distribution,
)

I2 = np.eye(2)
FAR_ROBOT = np.tile([100.0, 100.0], (12, 1))


def make_params(**kw):
    defaults = dict(goal=[5.0, 0.0], theta1=I2, theta2=I2, theta3=2.5, theta4=8e-3,
                    beta=0, horizon=1, action_set=velocity_lattice(0.5))
    defaults.update(kw)
    return HumanParams(**defaults)


class TestGrid:
    def test_origin_corner(self):
        g = Grid(origin=[-10, -10], cell_size=0.25, nx=80, ny=80)
        assert g.cell_of([-10, -10]) == (0, 0)

    def test_center_of_arena(self):
        g = Grid(origin=[-10, -10], cell_size=0.25, nx=81, ny=81)
        assert g.cell_of([0, 0]) == (40, 40)

    def test_half_open_boundary(self):
        g = Grid(origin=[-10, -10], cell_size=0.25, nx=80, ny=80)
        assert g.cell_of([-10 + 0.25, -10]) == (1, 0)

    def test_out_of_extent(self):
        g = Grid(origin=[-10, -10], cell_size=0.25, nx=80, ny=80)
        with pytest.raises(OutOfGridError):
            g.cell_of([10.5, 0])

    def test_centers_match_center_of(self):
        g = Grid(origin=[-2, -1], cell_size=0.5, nx=4, ny=6)
        centers = g.centers()
        for ix in range(4):
            for iy in range(6):
                assert np.array_equal(centers[ix, iy], g.center_of((ix, iy)))


class TestActionDistributions:
    def test_uniform_25(self):
        d = random_distribution(velocity_lattice(0.5))
        assert np.allclose(d.probs, 0.04)
        assert abs(d.probs.sum() - 1.0) <= 1e-9

    def test_uniform_degenerate_and_9(self):
        assert random_distribution([[1.0, 0.0]]).probs[0] == 1.0
        d = random_distribution(velocity_lattice(0.5, levels=(-1, 0, 1)))
        assert np.allclose(d.probs, 1.0 / 9.0)

    def test_uniform_empty_set_rejected(self):
        with pytest.raises(ValueError):
            random_distribution(np.zeros((0, 2)))

    def test_deliberate_is_delta_on_best_action(self, model):
        p = make_params()
        d = deliberate_distribution([-5.0, 0.0], FAR_ROBOT, 0, p, model)
        assert d.prob_of([1.0, 0.0]) == 1.0
        assert np.count_nonzero(d.probs) == 1

    def test_deliberate_at_goal(self, model):
        p = make_params()
        d = deliberate_distribution([5.0, 0.0], FAR_ROBOT, 0, p, model)
        assert d.prob_of([0.0, 0.0]) == 1.0

    def test_mixture_values(self, model):
        p = make_params()
        d = mixture_distribution([-5.0, 0.0], FAR_ROBOT, 0, p, model, omega_h=0.5)
        assert d.prob_of([1.0, 0.0]) == pytest.approx(0.52, abs=1e-12)
        assert d.prob_of([0.0, 0.0]) == pytest.approx(0.02, abs=1e-12)
        assert abs(d.probs.sum() - 1.0) <= 1e-9

    def test_mixture_extremes(self, model):
        p = make_params()
        d1 = mixture_distribution([-5.0, 0.0], FAR_ROBOT, 1, p, model, omega_h=1.0)
        assert np.allclose(d1.probs, 0.04)
        d0 = mixture_distribution([-5.0, 0.0], FAR_ROBOT, 0, p, model, omega_h=0.0)
        assert d0.prob_of([1.0, 0.0]) == 1.0

    def test_beta_independent_at_omega_one(self, model):
        p = make_params(beta=1, theta3=10.0, theta4=1.5)
        near = np.tile([-4.5, 0.0], (3, 1))
        a = mixture_distribution([-5.0, 0.0], near, 0, p, model, omega_h=1.0)
        b = mixture_distribution([-5.0, 0.0], near, 1, p, model, omega_h=1.0)
        assert np.array_equal(a.probs, b.probs)


def small_grid():
    # 5x5 arena whose centers form the displacement lattice of the
    # 9-action set at v = 0.5, dt = 0.5 (one walk = one cell).
    return Grid(origin=[0.0, 0.0], cell_size=0.25, nx=5, ny=5)


def propagate_oracle(grid, x0_cell, robot_traj, p1, params, model, omega, p_th, n_steps,
                     prune=True):
    """Direct enumeration over (cell, action, awareness) paths.

    Independent of `propagate`: deliberate actions come from per-cell
    exact solves, and the pushforward is explicit.
    """
    mass = np.zeros((grid.nx, grid.ny))
    mass[x0_cell] = 1.0
    acts = params.action_set
    out_steps, out_pcoll = [], []
    weights = {0: 1.0 - p1, 1: p1}
    for k in range(n_steps):
        new = np.zeros_like(mass)
        for ix in range(grid.nx):
            for iy in range(grid.ny):
                m = mass[ix, iy]
                if m == 0.0:
                    continue
                center = grid.center_of((ix, iy))
                for beta in (0, 1):
                    if weights[beta] == 0.0:
                        continue
                    n = params.plan_length
                    if params.horizon == 0:
                        prof = np.tile(robot_traj[k], (n + 1, 1))
                    else:
                        idx = np.minimum(np.arange(k, k + n + 1), len(robot_traj) - 1)
                        prof = robot_traj[idx]
                    plan = solve_human_plan(center, prof, params.with_beta(beta), model)
                    probs = omega / acts.shape[0] * np.ones(acts.shape[0])
                    probs[plan.action_indices[0]] += 1.0 - omega
                    for a in range(acts.shape[0]):
                        dest = grid.cell_of(center + model.dt * acts[a])
                        new[dest] += m * weights[beta] * probs[a]
        rc = grid.cell_of(robot_traj[k + 1])
        out_pcoll.append(new[rc])
        if prune:
            new[rc] = 0.0
        out_steps.append(new.copy())
        mass = new
    return out_steps, out_pcoll


class TestPropagate:
    def test_uniform_spread_conserves_mass(self, model):
        grid = Grid(origin=[-12.0, -12.0], cell_size=0.25, nx=96, ny=96)
        p = make_params(horizon=2)
        d0 = StateDistribution.delta(grid, [0.0, 0.0])
        robot = np.tile([10.0, 10.0], (3, 1))
        stack = propagate(d0, robot, 0.5, p, grid, 1, model, omega_h=1.0, p_threshold=0.05)
        masses = stack.steps[0].mass
        assert stack.steps[0].support_count() == 25
        assert np.allclose(masses[masses > 0], 0.04)
        assert stack.steps[0].total_mass() == pytest.approx(1.0, abs=1e-9)

    def test_delta_transport_point_belief(self, model):
        grid = Grid(origin=[-12.0, -12.0], cell_size=0.25, nx=96, ny=96)
        p = make_params(horizon=3, beta=1)
        d0 = StateDistribution.delta(grid, [-5.0, 0.0])
        robot = np.tile([10.0, 10.0], (5, 1))
        stack = propagate(d0, robot, 1.0, p, grid, 3, model, omega_h=0.0, p_threshold=0.05)
        start = grid.cell_of([-5.0, 0.0])
        pos = grid.center_of(start)
        for k in range(3):
            assert stack.steps[k].support_count() == 1
            # the delta follows the per-cell optimal action chain
            idx = np.minimum(np.arange(k, k + p.plan_length + 1), 4)
            plan = solve_human_plan(pos, robot[idx], p.with_beta(1), model)
            pos = pos + model.dt * plan.actions[0]
            assert stack.steps[k].mass[grid.cell_of(pos)] == pytest.approx(1.0)

    def test_pruning_arithmetic(self, model):
        # robot parked on the landing cell straight ahead: with omega=0
        # and a point belief the full unit mass collides at step 1
        grid = small_grid()
        p = make_params(goal=[5.0, 0.625], horizon=1,
                        action_set=velocity_lattice(0.5, levels=(-1, 0, 1)))
        d0 = StateDistribution.delta(grid, grid.center_of((2, 2)))
        robot = np.tile(grid.center_of((3, 2)), (3, 1))
        stack = propagate(d0, robot, 0.0, p, grid, 2, model, omega_h=0.5, p_threshold=0.05)
        # deliberate mass 0.5 plus uniform share 0.5/9 lands on the robot cell
        expected = 0.5 + 0.5 / 9.0
        assert stack.p_coll[0] == pytest.approx(expected, abs=1e-12)
        assert stack.steps[0].total_mass() == pytest.approx(1.0 - expected, abs=1e-12)
        # downstream totals only shrink
        assert stack.steps[1].total_mass() <= stack.steps[0].total_mass() + 1e-12

    def test_unnormalized_input_rejected(self, model):
        grid = small_grid()
        p = make_params()
        d0 = StateDistribution(grid, np.full((5, 5), 0.01))
        with pytest.raises(ValueError):
            propagate(d0, np.tile([0.6, 0.6], (3, 1)), 0.5, p, grid, 1, model,
                      omega_h=0.5, p_threshold=0.05)

    def test_conservation_without_pruning(self, model):
        grid = Grid(origin=[-12.0, -12.0], cell_size=0.25, nx=96, ny=96)
        p = make_params(horizon=2, beta=1, theta3=10.0, theta4=1.5)
        d0 = StateDistribution.delta(grid, [-2.0, 0.0])
        robot = np.array([[0.0, -2.0 + 0.5 * k] for k in range(6)])
        for omega in (0.0, 0.25, 0.5, 1.0):
            stack = propagate(d0, robot, 0.3, p, grid, 4, model, omega_h=omega,
                              p_threshold=0.05, prune_collisions=False)
            for s in stack.steps:
                assert s.total_mass() == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("levels,desc", [((-1, 0, 1), "lattice"), (None, "offlattice")])
    def test_bruteforce_equivalence(self, model, levels, desc):
        # exhaustive (cell, action, awareness) enumeration on a 5x5 grid
        if levels is not None:
            acts = velocity_lattice(0.5, levels=levels)
        else:
            acts = velocity_lattice(0.3, levels=(-1, 0, 1))  # 0.15 m: not cell-aligned
        grid = small_grid()
        # generic goal offsets; round values can create exact cost ties
        # between actions, which fp rounding would break arbitrarily
        p = make_params(goal=[1.03, 0.57], horizon=2, theta3=10.0, theta4=1.5,
                        action_set=acts)
        start = grid.center_of((2, 2))
        robot = np.array([[0.85, 0.35], [0.85, 0.6], [0.85, 0.85], [0.85, 1.1]])
        d0 = StateDistribution.delta(grid, start)
        stack = propagate(d0, robot, 0.4, p, grid, 2, model, omega_h=0.5,
                          p_threshold=0.05)
        oracle_steps, oracle_pcoll = propagate_oracle(
            grid, (2, 2), robot, 0.4, p, model, 0.5, 0.05, 2)
        for k in range(2):
            assert np.max(np.abs(stack.steps[k].mass - oracle_steps[k])) <= 1e-12
            assert abs(stack.p_coll[k] - oracle_pcoll[k]) <= 1e-12

    def test_mass_leaving_grid_raises(self, model):
        grid = small_grid()
        p = make_params(horizon=1, action_set=velocity_lattice(0.5, levels=(-1, 0, 1)))
        d0 = StateDistribution.delta(grid, grid.center_of((0, 0)))
        robot = np.tile([0.85, 0.85], (3, 1))
        with pytest.raises(OutOfGridError):
            propagate(d0, robot, 0.5, p, grid, 1, model, omega_h=0.5, p_threshold=0.05)


class TestFirstActionField:
    def test_matches_percell_solver(self, model):
        # the shared backward sweep must agree with the exact solver at
        # every cell center, both awareness values
        grid = Grid(origin=[-3.0, -3.0], cell_size=0.25, nx=24, ny=24)
        p = make_params(goal=[2.0, 1.0], horizon=3, theta3=10.0, theta4=1.5)
        robot = np.array([[0.0, -1.5 + 0.5 * k] for k in range(5)])
        for beta in (0, 1):
            field = first_action_field(grid, beta, p, model, robot)
            pb = p.with_beta(beta)
            for ix in range(0, 24, 3):
                for iy in range(0, 24, 3):
                    plan = solve_human_plan(grid.center_of((ix, iy)), robot, pb, model)
                    assert field[ix, iy] == plan.action_indices[0], (ix, iy, beta)


class TestCollisionProbability:
    def test_values(self, model):
        grid = small_grid()
        m = np.zeros((5, 5))
        m[3, 2] = 0.3
        d = StateDistribution(grid, m)
        assert collision_probability(d, grid.center_of((3, 2)), grid) == 0.3
        assert collision_probability(d, grid.center_of((0, 0)), grid) == 0.0
        m2 = np.zeros((5, 5))
        m2[1, 1] = 1.0
        assert collision_probability(StateDistribution(grid, m2),
                                     grid.center_of((1, 1)), grid) == 1.0

    def test_out_of_grid(self, model):
        grid = small_grid()
        d = StateDistribution(grid, np.zeros((5, 5)))
        with pytest.raises(OutOfGridError):
            collision_probability(d, [50.0, 0.0], grid)
