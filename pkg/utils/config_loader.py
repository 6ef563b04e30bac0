"""
INI experiment files:

    [run]
    resolution = 64
    dt = 1e-3
    t_max = 20
    constant_C = 10
    deltas = 1e-2, 5e-3, 2.5e-3

    [initial_data]
    kind = remark15
    n = 4
    scale = 1.0

Every key of [run] is an ExperimentConfig field and every key of
[initial_data] an InitialDataSpec field.
"""

import configparser
import logging
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

from pydantic import ValidationError

from models.experiment_models import ExperimentModels
from utils.errors import ConfigError

logger = logging.getLogger(__name__)

RUN_SECTION = "run"
INITIAL_DATA_SECTION = "initial_data"


def _read_sections(path: Union[str, Path]) -> Dict[str, Dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as handle:
            parser.read_file(handle)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    unknown = set(parser.sections()) - {RUN_SECTION, INITIAL_DATA_SECTION}
    if unknown:
        raise ConfigError(f"{path} has unknown sections {sorted(unknown)}")
    return {section: dict(parser.items(section)) for section in parser.sections()}


def load_experiment_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> ExperimentModels.ExperimentConfig:
    """
    Build an ExperimentConfig from an optional INI file and CLI overrides.

    Overrides whose value is None are ignored. Validation failures become
    ConfigError carrying the pydantic message.
    """
    sections = _read_sections(path) if path is not None else {}
    run: Dict[str, Any] = dict(sections.get(RUN_SECTION, {}))
    initial_data: Dict[str, Any] = dict(sections.get(INITIAL_DATA_SECTION, {}))

    for key, value in (overrides or {}).items():
        if value is not None:
            run[key] = value
    if initial_data:
        run["initial_data"] = initial_data

    try:
        config = ExperimentModels.ExperimentConfig.model_validate(run)
    except ValidationError as exc:
        raise ConfigError(f"invalid experiment configuration: {exc}") from exc
    logger.debug(f"experiment config: {config.model_dump()}")
    return config
