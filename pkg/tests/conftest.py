import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from models.field_models import MHDState, TorusGrid, VectorField2  # noqa: E402
from operations.initial_data_operations import shear_pair, taylor_green  # noqa: E402
from operations.littlewood_paley_operations import build_filter_bank  # noqa: E402
from telemetry.console_output import reset_telemetry_console  # noqa: E402


@pytest.fixture(autouse=True)
def quiet_console(monkeypatch):
    """Console progress lines are noise in test output."""
    monkeypatch.setenv("BESOV_MHD_CONSOLE_ENABLED", "false")
    reset_telemetry_console()
    yield
    reset_telemetry_console()


@pytest.fixture
def grid() -> TorusGrid:
    return TorusGrid(32)


@pytest.fixture
def small_grid() -> TorusGrid:
    return TorusGrid(16)


@pytest.fixture
def bank(grid):
    return build_filter_bank(grid)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def magnetic_shear(grid) -> MHDState:
    """u = 0 and b = 0.1 (sin x2, sin x1); b then decays as e^{-t} b0 exactly."""
    return MHDState(VectorField2.zeros(grid), shear_pair(grid, 1, 0.1))


@pytest.fixture
def small_state(grid) -> MHDState:
    return MHDState(taylor_green(grid, 1, 0.01), shear_pair(grid, 1, 0.01))
