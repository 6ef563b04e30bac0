import dataclasses
import math

import numpy as np
import pytest

from models.field_models import (
    MHDState,
    ScalarField,
    TorusGrid,
    VectorField2,
    field_from_stack,
    field_stack,
)
from utils.errors import GridError


class TestTorusGrid:
    """Grid construction and wavenumber layout"""

    @pytest.mark.parametrize("n_points", [4, 12, 0, -8, 100])
    def test_rejects_non_power_of_two(self, n_points):
        with pytest.raises(GridError, match="power of two"):
            TorusGrid(n_points)

    @pytest.mark.parametrize("n_points", [7.5, "16", True])
    def test_rejects_non_integer(self, n_points):
        with pytest.raises(GridError, match="integer"):
            TorusGrid(n_points)

    def test_domain_length_is_fixed(self):
        with pytest.raises(GridError, match="2\\*pi"):
            TorusGrid(16, domain_length=1.0)

    def test_wavenumber_ordering(self):
        grid = TorusGrid(8)
        assert grid.wavenumbers_1d.tolist() == [0, 1, 2, 3, -4, -3, -2, -1]

    def test_derivative_wavenumbers_zero_nyquist(self):
        grid = TorusGrid(8)
        k1 = grid.derivative_wavenumbers[0]
        assert np.all(k1[4, :] == 0)
        assert k1[3, 0] == 3

    def test_dealias_mask_keeps_two_thirds(self, grid):
        # |k| <= 32/3 on each axis keeps k in -10..10
        assert int(grid.dealias_mask.sum()) == 21 * 21

    def test_measure_and_spacing(self, grid):
        assert grid.measure == pytest.approx(4.0 * math.pi**2)
        assert grid.spacing == pytest.approx(2.0 * math.pi / 32)

    def test_grids_compare_by_resolution(self):
        assert TorusGrid(16) == TorusGrid(16)
        assert TorusGrid(16) != TorusGrid(32)


class TestScalarField:
    """Value/coefficient representation and arithmetic"""

    def test_needs_a_representation(self, grid):
        with pytest.raises(GridError, match="values or coefficients"):
            ScalarField(grid)

    def test_shape_must_match_grid(self, grid):
        with pytest.raises(GridError, match="does not match grid"):
            ScalarField.from_values(grid, np.zeros((16, 16)))

    def test_arrays_are_read_only(self, grid):
        f = ScalarField.from_values(grid, np.ones(grid.shape))
        with pytest.raises(ValueError):
            f.values[0, 0] = 2.0
        with pytest.raises(dataclasses.FrozenInstanceError):
            f.values = np.zeros(grid.shape)

    def test_input_array_is_copied(self, grid):
        source = np.ones(grid.shape)
        f = ScalarField.from_values(grid, source)
        source[0, 0] = 5.0
        assert f.values[0, 0] == 1.0

    def test_mean_normalized_coefficients(self, grid):
        f = ScalarField.from_function(grid, lambda x1, x2: 3.0 + np.sin(x1))
        coefficients = f.spectral()
        assert coefficients[0, 0] == pytest.approx(3.0)
        assert coefficients[1, 0] == pytest.approx(-0.5j)
        assert coefficients[-1, 0] == pytest.approx(0.5j)

    def test_constant_carries_both_representations(self, grid):
        f = ScalarField.constant(grid, 2.5)
        assert f.has_values and f.has_coefficients
        assert np.allclose(f.physical(), 2.5)

    def test_arithmetic(self, grid):
        f = ScalarField.from_function(grid, lambda x1, x2: np.sin(x1))
        g = ScalarField.from_function(grid, lambda x1, x2: np.cos(x2))
        combined = (f + g) * 2.0 - g
        expected = 2.0 * np.sin(grid.coordinates[0]) + np.cos(grid.coordinates[1])
        assert np.allclose(combined.physical(), expected, atol=1e-14)
        assert np.allclose((-f).physical(), -f.physical())

    def test_mixed_representations_combine_spectrally(self, grid):
        f = ScalarField.from_function(grid, lambda x1, x2: np.sin(x1))
        g = ScalarField.from_coefficients(grid, f.spectral())
        total = f + g
        assert total.has_coefficients
        assert np.allclose(total.physical(), 2.0 * f.physical(), atol=1e-14)

    def test_different_grids_do_not_combine(self, grid):
        with pytest.raises(GridError, match="different grids"):
            ScalarField.zeros(grid) + ScalarField.zeros(TorusGrid(16))


class TestVectorFieldAndState:
    """Vector fields, coefficient stacks and MHD states"""

    def test_components_share_grid(self, grid):
        with pytest.raises(GridError, match="different grids"):
            VectorField2(ScalarField.zeros(grid), ScalarField.zeros(TorusGrid(16)))

    def test_stack_shapes(self, grid):
        v = VectorField2.zeros(grid)
        assert v.spectral().shape == (2, 32, 32)
        assert field_stack(v.x_component).shape == (1, 32, 32)

    def test_field_from_stack_dispatches_on_components(self, grid):
        assert isinstance(field_from_stack(grid, np.zeros((1, 32, 32))), ScalarField)
        assert isinstance(field_from_stack(grid, np.zeros((2, 32, 32))), VectorField2)
        with pytest.raises(GridError, match="3 components"):
            field_from_stack(grid, np.zeros((3, 32, 32)))

    def test_state_stack_order(self, small_state):
        stack = small_state.to_stack()
        assert stack.shape == (4, 32, 32)
        assert np.allclose(stack[2:], small_state.b.spectral())
        rebuilt = MHDState.from_stack(small_state.grid, stack, t=0.5)
        assert rebuilt.t == 0.5
        assert np.allclose(rebuilt.u.physical(), small_state.u.physical(), atol=1e-15)

    def test_state_fields_share_grid(self, grid):
        with pytest.raises(GridError, match="different grids"):
            MHDState(VectorField2.zeros(grid), VectorField2.zeros(TorusGrid(16)))
