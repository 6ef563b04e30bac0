import inspect

import pytest

from operations.selftest_operations import (
    check_energy_identity,
    check_euler_limit,
    check_filter_bank,
    check_gronwall,
    check_heat,
    check_lifespan,
    check_picard,
    check_power_laws,
    check_reconstruction,
)


class TestFastChecks:
    """Checks that run in well under a second each"""

    def test_filter_bank(self):
        result = check_filter_bank((32, 64))
        assert result.passed, result.detail
        assert result.name == "filter_bank_partition"
        assert result.seconds >= 0.0

    def test_reconstruction(self):
        result = check_reconstruction(n_points=16, samples=10)
        assert result.passed, result.detail

    def test_heat(self):
        result = check_heat(n_points=16)
        assert result.passed, result.detail
        assert "temporal order" in result.detail

    def test_heat_needs_fourth_order(self):
        result = check_heat(n_points=16, dts=(0.05, 0.05))
        assert not result.passed
        assert "temporal order 0.00" in result.detail

    def test_energy_identity_runs_five_seeds_at_128(self):
        parameters = inspect.signature(check_energy_identity).parameters
        assert parameters["n_points"].default == 128
        assert list(parameters["seeds"].default) == [0, 1, 2, 3, 4]

    def test_power_laws(self):
        result = check_power_laws((4, 8))
        assert result.passed, result.detail

    def test_tool_errors_become_failures(self):
        result = check_filter_bank((48,))
        assert not result.passed
        assert result.detail.startswith("GridError: ")


@pytest.mark.slow
class TestSlowChecks:
    """Runs at the resolutions the selftest command uses"""

    def test_energy_identity_and_preservation(self):
        energy, preservation = check_energy_identity(n_points=32, dt=1e-3, T=0.5, seeds=(0,))
        assert energy.passed, energy.detail
        assert preservation.passed, preservation.detail

    def test_euler_limit(self):
        result = check_euler_limit(n_points=64, T=0.2)
        assert result.passed, result.detail

    def test_picard(self):
        result = check_picard()
        assert result.passed, result.detail
        assert "T=6.250e-02" in result.detail

    def test_picard_fails_when_differences_are_rounding(self):
        # at C=10 the lifespan of this data is about 5e-5
        result = check_picard(n_points=16, C=10.0, steps=8, amplitude=0.01)
        assert not result.passed
        assert "min d2..d5" in result.detail

    def test_lifespan(self):
        result = check_lifespan()
        assert result.passed, result.detail

    def test_gronwall(self):
        result = check_gronwall(cases=5)
        assert result.passed, result.detail
