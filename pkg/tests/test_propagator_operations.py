import math

import numpy as np
import pytest

from models.besov_models import BesovParams
from models.field_models import ScalarField, TorusGrid, VectorField2
from operations.initial_data_operations import taylor_green
from operations.propagator_operations import (
    check_solenoidal,
    heat_semigroup,
    lawson_rk4_step,
    smoothing_ratio_report,
    solve_heat,
    solve_transport,
    transport_estimate_report,
    uniform_steps,
)
from operations.spectral_operations import lp_norm
from utils.errors import GridError, NonSolenoidalError, UndefinedRatioError


class TestTimeGrid:
    """Uniform step selection"""

    def test_step_lands_on_final_time(self):
        n_steps, dt = uniform_steps(1.0, 0.3)
        assert n_steps == 4
        assert dt == pytest.approx(0.25)

    def test_exact_division_is_kept(self):
        assert uniform_steps(1.0, 0.1) == (10, pytest.approx(0.1))

    def test_zero_final_time(self):
        assert uniform_steps(0.0, 0.1) == (0, 0.1)

    def test_rejects_bad_input(self):
        with pytest.raises(GridError, match="final time"):
            uniform_steps(-1.0, 0.1)
        with pytest.raises(GridError, match="dt must be positive"):
            uniform_steps(1.0, 0.0)


class TestLawsonStep:
    """Integrating-factor RK4"""

    def test_pure_linear_step_is_exact(self):
        y = np.array([1.0, 2.0])
        factor = np.exp(-np.array([1.0, 4.0]) * 0.1)
        half = np.exp(-np.array([1.0, 4.0]) * 0.05)
        y_new, increment = lawson_rk4_step(y, 0.0, 0.1, lambda t, z: np.zeros_like(z), factor, half)
        assert np.allclose(y_new, factor * y, rtol=1e-15)
        assert increment == 0.0

    def test_classical_rk4_order(self):
        # y' = y integrated to t = 1
        errors = []
        for n_steps in (10, 20):
            y = np.array([1.0])
            dt = 1.0 / n_steps
            for k in range(n_steps):
                y, _ = lawson_rk4_step(y, k * dt, dt, lambda t, z: z, 1.0, 1.0)
            errors.append(abs(y[0] - math.e))
        assert errors[0] / errors[1] == pytest.approx(16.0, rel=0.1)

    def test_stage_quadrature(self):
        _, increment = lawson_rk4_step(
            np.array([1.0]), 0.0, 0.5, lambda t, z: np.zeros_like(z), 1.0, 1.0, integrand=lambda z: 3.0
        )
        assert increment == pytest.approx(1.5)


class TestHeatPropagator:
    """Heat semigroup and the forced heat equation"""

    def test_semigroup_is_exact(self, grid):
        mode = ScalarField.from_function(grid, lambda x1, x2: np.sin(3.0 * x1))
        evolved = heat_semigroup(mode, 0.5)
        assert np.allclose(evolved.physical(), math.exp(-4.5) * mode.physical(), atol=1e-14)

    def test_semigroup_property(self, grid):
        f = ScalarField.from_function(grid, lambda x1, x2: np.cos(x1) + np.sin(2.0 * x1 + x2))
        once = heat_semigroup(f, 0.3)
        twice = heat_semigroup(heat_semigroup(f, 0.1), 0.2)
        assert np.allclose(once.spectral(), twice.spectral(), atol=1e-15)

    def test_semigroup_rejects_negative_time(self, grid):
        with pytest.raises(GridError, match="t >= 0"):
            heat_semigroup(ScalarField.zeros(grid), -0.1)

    def test_unforced_solve_matches_semigroup(self, grid):
        f = ScalarField.from_function(grid, lambda x1, x2: np.sin(x1) * np.cos(4.0 * x2))
        run = solve_heat(f, None, 0.2, 0.01)
        assert len(run.snapshots) == 21
        assert run.forcing_description == "none"
        exact = heat_semigroup(f, 0.2)
        assert lp_norm(run.final - exact, 2) <= 1e-12 * lp_norm(exact, 2)

    def test_manufactured_solution(self, grid):
        shape = ScalarField.from_function(grid, lambda x1, x2: np.sin(2.0 * x1))

        def forcing(t: float) -> ScalarField:
            return shape * (math.cos(t + 1.0) + 4.0 * math.sin(t + 1.0))

        run = solve_heat(shape * math.sin(1.0), forcing, 1.0, 1e-2)
        exact = shape * math.sin(2.0)
        assert lp_norm(run.final - exact, 2) / lp_norm(exact, 2) < 1e-6
        assert run.forcing_description == "forcing"

    def test_vector_data(self, grid):
        x1, x2 = grid.coordinates
        v = VectorField2.from_values(grid, np.sin(x2), np.sin(x1))
        run = solve_heat(v, None, 0.1, 0.05)
        assert isinstance(run.final, VectorField2)
        assert np.allclose(run.final.physical(), math.exp(-0.1) * v.physical(), atol=1e-14)

    def test_rejects_bad_horizon(self, grid):
        f = ScalarField.zeros(grid)
        with pytest.raises(GridError, match="T > 0"):
            solve_heat(f, None, 0.0, 0.1)
        with pytest.raises(GridError, match="exceeds T"):
            solve_heat(f, None, 0.1, 0.5)

    def test_forcing_shape_must_match(self, grid):
        f = ScalarField.zeros(grid)
        with pytest.raises(GridError, match="forcing has shape"):
            solve_heat(f, lambda t: VectorField2.zeros(grid), 0.1, 0.05)


class TestTransportPropagator:
    """Linear transport by a divergence-free velocity"""

    def test_translation_by_constant_velocity(self, grid):
        velocity = VectorField2(ScalarField.constant(grid, 1.0), ScalarField.zeros(grid))
        f0 = ScalarField.from_function(grid, lambda x1, x2: np.sin(x1))
        run = solve_transport(f0, velocity, None, 1.0, 0.01)
        expected = np.sin(grid.coordinates[0] - 1.0)
        assert np.allclose(run.final.physical(), expected, atol=1e-8)

    def test_cellular_flow_conserves_lebesgue_norms(self):
        grid = TorusGrid(64)
        velocity = taylor_green(grid, 1, 0.5)
        f0 = ScalarField.from_function(grid, lambda x1, x2: np.cos(x1) + 0.5 * np.sin(2.0 * x2))
        run = solve_transport(f0, velocity, None, 0.5, 0.005)
        assert np.abs(run.final.physical() - f0.physical()).max() > 1e-2
        assert lp_norm(run.final, 2) == pytest.approx(lp_norm(f0, 2), rel=1e-4)
        assert lp_norm(run.final, math.inf) == pytest.approx(lp_norm(f0, math.inf), rel=1e-2)

    def test_time_dependent_velocity(self, grid):
        def velocity(t: float) -> VectorField2:
            return VectorField2(ScalarField.constant(grid, 2.0 * t), ScalarField.zeros(grid))

        f0 = ScalarField.from_function(grid, lambda x1, x2: np.cos(x1))
        run = solve_transport(f0, velocity, None, 0.5, 0.01)
        # displacement int_0^T 2t dt = T^2
        assert np.allclose(run.final.physical(), np.cos(grid.coordinates[0] - 0.25), atol=1e-8)

    def test_rejects_compressible_velocity(self, grid):
        velocity = VectorField2.from_values(grid, np.sin(grid.coordinates[0]), np.zeros(grid.shape))
        with pytest.raises(NonSolenoidalError, match="divergence residual"):
            solve_transport(ScalarField.zeros(grid), velocity, None, 0.1, 0.05)
        with pytest.raises(NonSolenoidalError):
            check_solenoidal(velocity)

    def test_velocity_grid_must_match(self, grid, small_grid):
        velocity = VectorField2.zeros(small_grid)
        with pytest.raises(GridError, match="different grids"):
            solve_transport(ScalarField.zeros(grid), velocity, None, 0.1, 0.05)


class TestEstimateReports:
    """Measured constants of the smoothing and transport estimates"""

    def test_smoothing_ratio(self, grid, bank):
        f0 = ScalarField.from_function(grid, lambda x1, x2: np.sin(x1) + 0.5 * np.cos(3.0 * x2))
        report = smoothing_ratio_report(f0, None, 0.5, 0.01, 2.0, 1.0, BesovParams(s=0.0, p=2.0, r=1.0), bank)
        assert 0.0 < report.ratio < math.inf
        assert report.forcing_norm == 0.0
        assert report.mean_zero

    def test_smoothing_needs_q1_at_most_q(self, grid):
        with pytest.raises(GridError, match="q1 <= q"):
            smoothing_ratio_report(ScalarField.zeros(grid), None, 0.5, 0.1, 1.0, 2.0, BesovParams(s=0.0))

    def test_smoothing_zero_data(self, grid):
        with pytest.raises(UndefinedRatioError, match="zero data"):
            smoothing_ratio_report(ScalarField.zeros(grid), None, 0.5, 0.1, 2.0, 1.0, BesovParams(s=0.0))

    def test_transport_by_constant_velocity_has_unit_ratio(self, grid, bank):
        velocity = VectorField2(ScalarField.constant(grid, 1.0), ScalarField.zeros(grid))
        f0 = ScalarField.from_function(grid, lambda x1, x2: np.sin(x1) + np.sin(2.0 * x2))
        run = solve_transport(f0, velocity, None, 0.5, 0.01)
        report = transport_estimate_report(run, velocity, None, BesovParams(s=0.0, p=2.0, r=1.0), bank)
        assert report.stretching == 0.0
        assert report.ratio_linear == pytest.approx(1.0, abs=1e-6)
        assert report.ratio_endpoint == pytest.approx(1.0, abs=1e-6)
