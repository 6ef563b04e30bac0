import math

import numpy as np
import pytest

from models.field_models import MHDState, VectorField2
from models.run_models import CSV_COLUMNS
from operations.diagnostics_operations import energy_identity_residual
from operations.initial_data_operations import random_solenoidal, shear_pair, taylor_green
from operations.mhd_operations import FACTOR_CACHE_SIZE, MHDOperations
from utils.errors import GridError

AMPLITUDE = 0.1
ORDER_T = 0.4
ORDER_DTS = (0.1, 0.05, 0.025)


def _orders(errors):
    return [math.log2(coarse / fine) for coarse, fine in zip(errors, errors[1:])]


@pytest.fixture
def solver(grid, bank):
    return MHDOperations(grid, p=2.0, bank=bank)


@pytest.fixture
def nonlinear_data(small_grid):
    return random_solenoidal(small_grid, (1, 4), 5, 1.0, 1.0)


@pytest.fixture
def magnetic_shear_small(small_grid):
    return MHDState(VectorField2.zeros(small_grid), shear_pair(small_grid, 1, AMPLITUDE))


class TestTendency:
    """Right side of the MHD system"""

    def test_force_free_magnetic_shear(self, solver, magnetic_shear):
        tendency = solver.rhs(magnetic_shear)
        assert np.allclose(tendency.du.spectral(), 0.0, atol=1e-14)
        assert np.allclose(tendency.db_nonlinear.spectral(), 0.0, atol=1e-14)
        assert np.allclose(tendency.db_diffusion.spectral(), -magnetic_shear.b.spectral(), atol=1e-15)
        assert np.allclose(tendency.db.spectral(), -magnetic_shear.b.spectral(), atol=1e-14)

    def test_taylor_green_is_a_steady_euler_flow(self, grid, solver):
        state = MHDState(taylor_green(grid, 1, 1.0), VectorField2.zeros(grid))
        tendency = solver.rhs(state)
        assert np.allclose(tendency.du.spectral(), 0.0, atol=1e-13)

    def test_velocity_tendency_is_solenoidal_and_mean_free(self, grid, solver):
        state = random_solenoidal(grid, (1, 4), 7, 0.5, 0.5)
        tendency = solver.rhs(state)
        assert np.abs(solver.kernel.divergence(tendency.du.spectral())).max() < 1e-12
        assert tendency.du.spectral()[:, 0, 0].tolist() == [0.0, 0.0]
        assert tendency.db_nonlinear.spectral()[:, 0, 0].tolist() == [0.0, 0.0]

    def test_grid_must_match(self, small_grid, solver):
        state = MHDState(VectorField2.zeros(small_grid), VectorField2.zeros(small_grid))
        with pytest.raises(GridError, match="solver has n=32"):
            solver.rhs(state)


class TestStep:
    """Single integrating-factor steps"""

    def test_step_decays_the_magnetic_shear(self, solver, magnetic_shear):
        stepped = solver.step(magnetic_shear, 0.05)
        assert stepped.t == pytest.approx(0.05)
        assert np.allclose(stepped.b.spectral(), math.exp(-0.05) * magnetic_shear.b.spectral(), atol=1e-15)
        assert np.allclose(stepped.u.spectral(), 0.0, atol=1e-15)

    @pytest.mark.parametrize("dt", [0.0, -0.1])
    def test_rejects_nonpositive_dt(self, solver, magnetic_shear, dt):
        with pytest.raises(GridError, match="dt must be positive"):
            solver.step(magnetic_shear, dt)

    def test_fourth_order_in_time(self, small_grid, nonlinear_data):
        solver = MHDOperations(small_grid)
        reference = solver.run(nonlinear_data, ORDER_T, ORDER_T / 512, record_every=512).final_state.to_stack()
        errors = []
        for dt in ORDER_DTS:
            state = nonlinear_data
            for _ in range(int(round(ORDER_T / dt))):
                state = solver.step(state, dt)
            errors.append(np.abs(state.to_stack() - reference).max())
        assert errors[-1] > 1e-13
        assert min(_orders(errors)) >= 3.5

    def test_factor_cache_is_bounded(self, small_grid, magnetic_shear_small):
        solver = MHDOperations(small_grid)
        for k in range(1, 11):
            solver.step(magnetic_shear_small, 0.01 * k)
        assert solver._factors.cache_info().currsize <= FACTOR_CACHE_SIZE


class TestRun:
    """Trajectories and recorded diagnostics"""

    def test_magnetic_shear_run(self, solver, magnetic_shear):
        result = solver.run(magnetic_shear, 1.0, 0.01, record_every=10)
        assert not result.terminated_early
        assert len(result.trajectory) == 11
        assert np.allclose(result.times, np.linspace(0.0, 1.0, 11))

        record = result.record
        decay = np.exp(-record.times)
        assert np.allclose(record.column("energy"), 2.0 * math.pi**2 * AMPLITUDE**2 * decay**2, rtol=1e-10)
        assert np.allclose(record.column("b_l2"), 2.0 * math.pi * AMPLITUDE * decay, rtol=1e-10)
        assert np.allclose(record.column("b_linf"), math.sqrt(2.0) * AMPLITUDE * decay, rtol=1e-10)
        assert np.allclose(record.column("w_linf"), 0.0, atol=1e-12)
        assert np.all(np.diff(record.column("run_b_b2inf1")) > 0)
        assert record.column("cfl").max() < 1e-10

    def test_energy_identity(self, solver, magnetic_shear):
        result = solver.run(magnetic_shear, 1.0, 0.01, record_every=20)
        report = energy_identity_residual(result)
        assert report.normalized
        assert abs(report.residual) < 1e-8

    def test_energy_residual_is_fourth_order(self, small_grid, nonlinear_data):
        solver = MHDOperations(small_grid)
        residuals = [
            abs(energy_identity_residual(solver.run(nonlinear_data, ORDER_T, dt)).residual) for dt in ORDER_DTS
        ]
        assert residuals[-1] > 1e-14
        assert min(_orders(residuals)) >= 3.5

    def test_final_step_is_always_recorded(self, solver, magnetic_shear):
        result = solver.run(magnetic_shear, 0.1, 0.01, record_every=3)
        assert result.times.tolist() == pytest.approx([0.0, 0.03, 0.06, 0.09, 0.1])
        assert len(result.record) == len(result.trajectory)
        assert set(result.record.columns) == set(CSV_COLUMNS)

    def test_small_data_run_stays_solenoidal(self, solver, small_state):
        result = solver.run(small_state, 0.2, 0.01, record_every=5)
        assert not result.terminated_early
        assert result.record.div_u.max() < 1e-10
        assert result.record.div_b.max() < 1e-10
        assert np.abs(result.record.b_mean).max() < 1e-14

    def test_rejects_bad_record_interval(self, solver, magnetic_shear):
        with pytest.raises(GridError, match="record_every"):
            solver.run(magnetic_shear, 0.1, 0.01, record_every=0)

    def test_blow_up_ends_the_run(self, small_grid):
        state = random_solenoidal(small_grid, (1, 4), 3, 1e3, 1e3)
        result = MHDOperations(small_grid).run(state, 50.0, 1.0)
        assert result.terminated_early
        assert result.termination_time is not None and result.termination_time < 50.0
        assert result.message
        assert np.all(np.isfinite(result.final_state.to_stack()))


class TestPicard:
    """Picard iterates and their convergence"""

    def test_argument_checks(self, solver, magnetic_shear):
        u0, b0 = magnetic_shear.u, magnetic_shear.b
        with pytest.raises(GridError, match="n_max"):
            solver.picard_iterate(u0, b0, -1, 0.1, 0.01)
        with pytest.raises(GridError, match="T > 0"):
            solver.picard_iterate(u0, b0, 2, 0.0, 0.01)

    def test_iterate_zero_is_the_heat_flow(self, grid, solver):
        u0 = taylor_green(grid, 1, 0.01)
        b0 = shear_pair(grid, 2, 0.01)
        iterates = solver.picard_iterate(u0, b0, 1, 0.1, 0.05)
        assert len(iterates) == 2
        assert iterates.truncation_levels == [None, 1]
        last = iterates.iterates[0][-1]
        assert np.allclose(last.u.spectral(), math.exp(-2.0 * 0.1) * u0.spectral(), atol=1e-15)
        assert np.allclose(last.b.spectral(), math.exp(-4.0 * 0.1) * b0.spectral(), atol=1e-15)

    def test_exact_solution_is_a_fixed_point(self, solver, magnetic_shear):
        iterates = solver.picard_iterate(magnetic_shear.u, magnetic_shear.b, 3, 0.2, 0.02)
        report = solver.picard_convergence_report(iterates)
        assert len(report.differences) == 3
        assert report.converged_index == 0
        run = solver.run(magnetic_shear, 0.2, 0.02)
        assert solver.solution_distance(iterates, run, 3) < 1e-12

    def test_small_data_contracts(self, small_grid):
        solver = MHDOperations(small_grid)
        state = MHDState(taylor_green(small_grid, 1, 0.01), shear_pair(small_grid, 1, 0.01))
        iterates = solver.picard_iterate(state.u, state.b, 3, 0.1, 0.01)
        report = solver.picard_convergence_report(iterates)
        assert report.differences[1] < 0.5 * report.differences[0]
        assert report.ratios[0] is not None and report.ratios[0] < 0.5
        assert len(report.h1_sup) == 4

    def test_report_needs_two_iterates(self, solver, magnetic_shear):
        iterates = solver.picard_iterate(magnetic_shear.u, magnetic_shear.b, 0, 0.1, 0.05)
        with pytest.raises(GridError, match="at least two iterates"):
            solver.picard_convergence_report(iterates)

    def test_distance_needs_a_known_iterate(self, solver, magnetic_shear):
        iterates = solver.picard_iterate(magnetic_shear.u, magnetic_shear.b, 1, 0.1, 0.05)
        run = solver.run(magnetic_shear, 0.1, 0.05)
        with pytest.raises(GridError, match="not available"):
            solver.solution_distance(iterates, run, 5)
