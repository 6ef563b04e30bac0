"""
Command orchestration: build data from an ExperimentConfig, run the requested
experiment and write its artifacts. Every command returns a process exit code.
"""

import logging
import math
from typing import Callable, Dict

from models.experiment_models import ExperimentModels
from models.field_models import MHDState, TorusGrid
from operations.diagnostics_operations import (
    b_mean_drift,
    bootstrap_monitor,
    energy_identity_residual,
    fit_decay_rate,
    growth_envelope,
    vorticity_bound_monitor,
)
from operations.initial_data_operations import check_smallness_conditions, make_initial_data, random_solenoidal
from operations.lifespan_operations import compute_lifespan, verify_semigroup_smallness
from operations.littlewood_paley_operations import build_filter_bank
from operations.mhd_operations import MHDOperations
from operations.selftest_operations import run_selftest
from operations.stability_operations import StabilityOperations
from storage.snapshot_manager import DiagnosticsCsvWriter, SnapshotManager
from telemetry.console_output import (
    console_debug,
    console_error,
    console_info,
    console_telemetry_event,
    console_warning,
)
from telemetry.decorators import TelemetryContext, add_span_attributes, measure_performance, record_metric, trace_method
from utils.errors import BesovMHDError

logger = logging.getLogger(__name__)

COMMANDS = ("simulate", "picard", "lifespan", "decay-study", "stability", "selftest")


class ExperimentOperations:
    """
    Runs one command of the besov-mhd tool against a validated config.

    Args:
        config: Experiment configuration
    """

    def __init__(self, config: ExperimentModels.ExperimentConfig):
        self.config = config
        self.grid = TorusGrid(config.resolution)
        self.bank = build_filter_bank(self.grid)
        self.writer = DiagnosticsCsvWriter(config.output_dir)
        console_debug(f"filter bank with {self.bank.j_max + 2} blocks on n={config.resolution}", "CLI")

    def initial_state(self) -> MHDState:
        return make_initial_data(self.config.initial_data, self.grid, self.config.seed, self.bank)

    def _solver(self) -> MHDOperations:
        return MHDOperations(self.grid, self.config.p, self.bank)

    # Nonlinear run with diagnostics CSV and snapshots
    @trace_method("cli.simulate")
    @measure_performance("cli_simulate")
    def simulate(self) -> int:
        config = self.config
        result = self._solver().run(self.initial_state(), config.t_max, config.dt, config.record_every)
        csv_path = self.writer.write_diagnostics(result.record)
        if config.save_snapshots:
            SnapshotManager(config.output_dir / "snapshots").save_trajectory(result.trajectory)

        report: Dict[str, object] = {
            "resolution": config.resolution,
            "dt": result.dt,
            "t_final": config.t_max,
            "records": len(result.record),
            "terminated_early": result.terminated_early,
            "termination_time": result.termination_time,
            "message": result.message or "none",
            "b_mean_drift": b_mean_drift(result.record),
        }
        if len(result.record) >= 2:
            energy = energy_identity_residual(result)
            report["energy_residual"] = energy.residual
            report["energy_residual_normalized"] = energy.normalized
        self.writer.write_report(report, "simulate_report.txt")

        if result.terminated_early:
            console_warning(f"blow-up recorded at t={result.termination_time:.6g}: {result.message}", "CLI")
        console_info(f"diagnostics written to {csv_path}", "CLI")
        return 0

    # Picard iterates and their convergence report
    @trace_method("cli.picard")
    @measure_performance("cli_picard")
    def picard(self) -> int:
        config = self.config
        state = self.initial_state()
        solver = self._solver()
        lifespan = compute_lifespan(state.u, state.b, config.p, config.constant_C, self.bank).T
        horizon = config.picard_horizon if config.picard_horizon is not None else lifespan
        dt = min(config.dt, horizon / 4.0)

        iterates = solver.picard_iterate(state.u, state.b, config.picard_iterations, horizon, dt, lifespan=lifespan)
        report = solver.picard_convergence_report(iterates) if len(iterates) >= 2 else None
        solution = solver.run(state, horizon, dt)

        values: Dict[str, object] = {"lifespan": lifespan, "horizon": horizon, "dt": iterates.dt}
        if report is not None:
            self.writer.write_picard(report)
            values["noise_floor"] = report.noise_floor
            values["converged_index"] = report.converged_index
        if not solution.terminated_early:
            values["final_iterate_distance"] = solver.solution_distance(iterates, solution, len(iterates) - 1)
        self.writer.write_report(values, "picard_report.txt")
        return 0

    # Lifespan report with the semigroup and smallness checks
    @trace_method("cli.lifespan")
    @measure_performance("cli_lifespan")
    def lifespan(self) -> int:
        config = self.config
        state = self.initial_state()
        report = compute_lifespan(state.u, state.b, config.p, config.constant_C, self.bank)
        semigroup = verify_semigroup_smallness(state.u, report.T, report.a, config.p, self.bank)
        smallness = check_smallness_conditions(
            state, config.p, config.s, config.constant_C, epsilon=config.epsilon, bank=self.bank
        )
        self.writer.write_lifespan(report)

        values: Dict[str, object] = dict(report.model_dump())
        values.update({f"semigroup_{key}": value for key, value in semigroup.model_dump().items()})
        values.update({f"smallness_{key}": value for key, value in smallness.model_dump().items()})
        self.writer.write_report(values, "lifespan_report.txt")
        console_info(f"lifespan T={report.T:.6g} ({report.branch})", "CLI")
        return 0

    # Long run and fitted decay rates
    @trace_method("cli.decay_study")
    @measure_performance("cli_decay_study")
    def decay_study(self) -> int:
        config = self.config
        result = self._solver().run(self.initial_state(), config.t_max, config.dt, config.record_every)
        self.writer.write_diagnostics(result.record)
        record = result.record
        times = record.times

        b_l2 = fit_decay_rate(times, record.column("b_l2"), config.decay_window)
        b_linf = fit_decay_rate(times, record.column("b_linf"), config.decay_window)
        bootstrap = bootstrap_monitor(record, config.bootstrap_threshold)
        vorticity = vorticity_bound_monitor(result)
        linf = record.column("b_linf")

        values: Dict[str, object] = {
            "b_l2_rate": b_l2.rate,
            "b_l2_r_squared": b_l2.r_squared,
            "b_l2_truncated": b_l2.truncated,
            "b_linf_rate": b_linf.rate,
            "b_linf_r_squared": b_linf.r_squared,
            "b_linf_orders_of_decay": math.log10(linf[0] / linf[-1]) if linf[-1] > 0 and linf[0] > 0 else math.inf,
            "bootstrap_initial": bootstrap.initial_value,
            "bootstrap_peak_sum": bootstrap.peak_sum,
            "bootstrap_crossing_time": bootstrap.crossing_time_sum,
            "vorticity_empirical_constant": vorticity.empirical_constant,
            "vorticity_envelope_c": vorticity.envelope_c,
            "w_b0inf1_envelope_c": growth_envelope(times, record.column("w_b0inf1")),
            "terminated_early": result.terminated_early,
        }
        self.writer.write_report(values, "decay_report.txt")
        console_telemetry_event("report", {"b_l2_rate": b_l2.rate, "b_linf_rate": b_linf.rate}, "CLI")
        return 0

    # Perturbation sweep over the configured deltas
    @trace_method("cli.stability")
    @measure_performance("cli_stability")
    def stability(self) -> int:
        config = self.config
        state = self.initial_state()
        band = config.initial_data.band
        direction = random_solenoidal(self.grid, band, config.perturbation_seed, 1.0, 1.0, self.bank)
        operations = StabilityOperations(self.grid, config.p, config.constant_C, config.record_every, self.bank)
        experiments, report = operations.stability_sweep(
            state.u, state.b, direction, config.deltas, config.t_max, config.dt, parallel=config.parallel
        )
        self.writer.write_stability(experiments)
        values: Dict[str, object] = {
            "alpha": report.alpha,
            "weak_spread": report.weak_spread,
            "partial": any(e.partial for e in experiments),
        }
        self.writer.write_report(values, "stability_report.txt")
        return 0

    # Invariant suite; nonzero exit on any failure
    @trace_method("cli.selftest")
    @measure_performance("cli_selftest")
    def selftest(self) -> int:
        results = run_selftest()
        self.writer.write_report(
            {r.name: f"{'pass' if r.passed else 'FAIL'} ({r.seconds:.2f}s) {r.detail}" for r in results},
            "selftest_report.txt",
        )
        failed = [r for r in results if not r.passed]
        add_span_attributes(checks=len(results), failures=len(failed))
        record_metric("selftest_failures", len(failed))
        return 1 if failed else 0


def run_command(command: str, config: ExperimentModels.ExperimentConfig) -> int:
    """
    Dispatch one command. Tool failures (BesovMHDError, OSError) exit 1; a
    physical blow-up is a result and exits 0.
    """
    try:
        operations = ExperimentOperations(config)
        handlers: Dict[str, Callable[[], int]] = {
            "simulate": operations.simulate,
            "picard": operations.picard,
            "lifespan": operations.lifespan,
            "decay-study": operations.decay_study,
            "stability": operations.stability,
            "selftest": operations.selftest,
        }
        if command not in handlers:
            console_error(f"unknown command {command!r}, expected one of {COMMANDS}", "CLI")
            return 2
        with TelemetryContext(command=command, resolution=config.resolution, dt=config.dt):
            return handlers[command]()
    except (BesovMHDError, OSError) as exc:
        logger.error(f"{command} failed: {exc}")
        console_error(f"{command} failed: {type(exc).__name__}: {exc}", "CLI")
        return 1
