import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional

import click
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

from operations.experiment_operations import run_command
from telemetry.config import get_logger, initialize_telemetry
from telemetry.console_output import console_error, console_info, console_warning
from utils.config_loader import load_experiment_config
from utils.errors import ConfigError
from utils.settings import get_settings


def _start_telemetry() -> None:
    settings = get_settings()
    telemetry_success = initialize_telemetry(
        service_name=settings.service_name,
        service_version=settings.service_version,
        log_level=getattr(logging, settings.log_level.upper(), logging.INFO),
        export_spans=settings.trace_console,
    )
    if telemetry_success:
        get_logger().info(f"Starting {settings.service_name} v{settings.service_version}")
    else:
        console_warning("Telemetry initialization failed, continuing without telemetry", "MAIN")


def _execute(command: str, config_path: Optional[Path], overrides: Dict[str, Any]) -> None:
    _start_telemetry()
    try:
        config = load_experiment_config(config_path, overrides)
    except (ConfigError, OSError) as e:
        console_error(f"Unable to load configuration: {e}", "MAIN")
        sys.exit(1)
    console_info(f"{command}: N={config.resolution}, dt={config.dt}, output={config.output_dir}", "MAIN")
    sys.exit(run_command(command, config))


def run_options(function):
    """Options shared by every subcommand; each overrides the matching [run] key."""
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
                     default=None, help="INI experiment file"),
        click.option("--resolution", type=int, default=None, help="Grid points per direction (power of two)"),
        click.option("--dt", type=float, default=None, help="Time step"),
        click.option("--tmax", "t_max", type=float, default=None, help="Final time"),
        click.option("--output-dir", type=click.Path(file_okay=False, path_type=Path), default=None),
        click.option("--seed", type=int, default=None, help="Seed for random initial data"),
        click.option("--constant-C", "constant_C", type=float, default=None, help="Generic constant C"),
        click.option("--record-every", type=int, default=None, help="Steps between recorded states"),
    ]
    for option in reversed(options):
        function = option(function)
    return function


@click.group(name="besov-mhd")
def cli() -> None:
    """Pseudo-spectral non-viscous MHD on the 2-torus with Besov diagnostics."""


def _register(name: str, help_text: str) -> None:
    @cli.command(name=name, help=help_text)
    @run_options
    def command(config_path: Optional[Path], **overrides: Any) -> None:
        _execute(name, config_path, overrides)


_register("simulate", "Nonlinear run with diagnostics CSV and snapshots.")
_register("picard", "Picard iterates and their convergence report.")
_register("lifespan", "Guaranteed lifespan report.")
_register("decay-study", "Long run with fitted decay rates of b.")
_register("stability", "Perturbation sweep in strong and weak norms.")
_register("selftest", "Invariant suite; nonzero exit on any failure.")


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
