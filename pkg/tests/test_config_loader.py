import math
from pathlib import Path

import pytest

from utils.config_loader import load_experiment_config
from utils.errors import ConfigError
from utils.settings import RuntimeSettings

EXPERIMENT = """
[run]
resolution = 32
dt = 5e-3
t_max = 2
constant_C = 4
deltas = 1e-2, 1e-3
decay_window = 0.5, inf

[initial_data]
kind = random-solenoidal
band = 2, 5
scale = 0.1
"""


@pytest.fixture
def experiment_file(tmp_path) -> Path:
    path = tmp_path / "experiment.ini"
    path.write_text(EXPERIMENT)
    return path


class TestExperimentConfig:
    """INI files and CLI overrides"""

    def test_defaults(self):
        config = load_experiment_config()
        assert config.resolution == 64
        assert config.initial_data.kind == "remark15"
        assert config.decay_window == (1.0, math.inf)

    def test_file_values(self, experiment_file):
        config = load_experiment_config(experiment_file)
        assert config.resolution == 32
        assert config.dt == 5e-3
        assert config.constant_C == 4.0
        assert config.deltas == [1e-2, 1e-3]
        assert config.decay_window == (0.5, math.inf)
        assert config.initial_data.kind == "random-solenoidal"
        assert config.initial_data.band == (2, 5)
        assert config.initial_data.magnetic_amplitude == 0.1

    def test_overrides_win_and_none_is_ignored(self, experiment_file):
        config = load_experiment_config(experiment_file, {"resolution": 16, "dt": None, "seed": 7})
        assert config.resolution == 16
        assert config.dt == 5e-3
        assert config.seed == 7

    @pytest.mark.parametrize(
        "overrides",
        [{"resolution": 48}, {"dt": 0.0}, {"deltas": "1e-2, -1e-3"}, {"decay_window": "2, 1"}, {"bogus": 1}],
    )
    def test_invalid_values(self, overrides):
        with pytest.raises(ConfigError, match="invalid experiment configuration"):
            load_experiment_config(None, overrides)

    def test_unknown_section(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[run]\ndt = 0.1\n[plot]\ncolor = red\n")
        with pytest.raises(ConfigError, match="unknown sections"):
            load_experiment_config(path)

    def test_unparsable_file(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("dt = 0.1\n")
        with pytest.raises(ConfigError, match="cannot parse"):
            load_experiment_config(path)


class TestRuntimeSettings:
    """Environment settings"""

    def test_environment_prefix(self, monkeypatch):
        monkeypatch.setenv("BESOV_MHD_THREADS", "4")
        monkeypatch.setenv("BESOV_MHD_DETERMINISTIC", "true")
        settings = RuntimeSettings(_env_file=None)
        assert settings.threads == 4
        assert settings.deterministic

    def test_defaults(self, monkeypatch):
        monkeypatch.delenv("BESOV_MHD_THREADS", raising=False)
        settings = RuntimeSettings(_env_file=None)
        assert settings.threads >= 1
        assert settings.service_name == "besov-mhd"
