"""
Empirical continuous dependence: two trajectories from nearby data and the
size of their difference in a strong and a weak pair of norms.

Strong:  du in L^inf_T(B^{d/p+1}_{p,1}),  db in L^inf_T(B^{d/p}_{p,1}) + L^1_T(B^{d/p+2}_{p,1})
Weak:    du in L^inf_T(B^{d/p}_{p,inf}),  db in L^inf_T(B^{d/p-1}_{p,inf}) + L^1_T(B^{d/p+1}_{p,inf})
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.integrate import cumulative_trapezoid, trapezoid

from models.besov_models import BesovParams, DyadicFilterBank, critical_index
from models.field_models import MHDState, TorusGrid, VectorField2
from models.report_models import ReportModels
from models.run_models import SimulationResult, StabilityExperiment
from operations.littlewood_paley_operations import besov_from_block_norms, besov_norm, coefficient_block_norms
from operations.mhd_operations import MHDOperations
from operations.spectral_operations import kernel_for
from telemetry.console_output import console_info, console_telemetry_event
from telemetry.decorators import measure_performance, trace_method
from utils.errors import GridError
from utils.settings import get_settings

logger = logging.getLogger(__name__)


class StabilityOperations:
    """
    Perturbation experiments on one grid.

    Args:
        grid: Collocation grid
        p: Integrability index of the difference norms
        constant_C: Constant multiplying the A(T) proxy
        record_every: Steps between compared states
    """

    def __init__(
        self,
        grid: TorusGrid,
        p: float = 2.0,
        constant_C: float = 10.0,
        record_every: int = 1,
        bank: Optional[DyadicFilterBank] = None,
    ):
        self.grid = grid
        self.p = p
        self.constant_C = constant_C
        self.record_every = record_every
        self.solver = MHDOperations(grid, p, bank)
        self.bank = self.solver.bank
        s = critical_index(p)
        self.u_strong = BesovParams(s=s + 1.0, p=p, r=1.0)
        self.b_strong = BesovParams(s=s, p=p, r=1.0)
        self.b_strong_dissipative = BesovParams(s=s + 2.0, p=p, r=1.0)
        self.u_weak = BesovParams(s=s, p=p, r=math.inf)
        self.b_weak = BesovParams(s=s - 1.0, p=p, r=math.inf)
        self.b_weak_dissipative = BesovParams(s=s + 1.0, p=p, r=math.inf)

    def strong_size(self, state: MHDState) -> float:
        return besov_norm(state.u, self.u_strong, self.bank) + besov_norm(state.b, self.b_strong, self.bank)

    def weak_size(self, state: MHDState) -> float:
        return besov_norm(state.u, self.u_weak, self.bank) + besov_norm(state.b, self.b_weak, self.bank)

    def unit_direction(self, direction: MHDState) -> MHDState:
        """Leray-projected direction scaled to unit strong size."""
        kernel = kernel_for(self.grid)
        y = direction.to_stack()
        projected = np.concatenate([kernel.leray(y[:2]), kernel.leray(y[2:])])
        state = MHDState.from_stack(self.grid, projected)
        size = self.strong_size(state)
        if size == 0.0:
            raise GridError("perturbation direction has zero size")
        return MHDState(state.u * (1.0 / size), state.b * (1.0 / size))

    def _norm_series(self, stacks: Sequence[np.ndarray], params: BesovParams, rows: slice) -> np.ndarray:
        return np.array([
            besov_from_block_norms(
                coefficient_block_norms([y[rows][0], y[rows][1]], self.p, self.bank), params, self.bank
            )
            for y in stacks
        ])

    def _a_proxy(self, times: np.ndarray, base: SimulationResult, perturbed: SimulationResult, count: int) -> float:
        integrand = np.ones(count)
        for result in (base, perturbed):
            integrand += result.record.column("besov_u")[:count]
            integrand += np.array([
                besov_norm(state.b, self.b_strong_dissipative, self.bank) for state in result.trajectory[:count]
            ])
        if count < 2:
            return 0.0
        return float(self.constant_C * trapezoid(integrand, times))

    # Run base and perturbed data and measure their difference
    @trace_method("stability.stability_experiment", include_args=True)
    @measure_performance("stability_experiment")
    def stability_experiment(
        self,
        u0: VectorField2,
        b0: VectorField2,
        perturbation: MHDState,
        T: float,
        dt: float,
        base: Optional[SimulationResult] = None,
    ) -> StabilityExperiment:
        """
        delta is the strong size of the perturbation and delta_weak its weak
        size; the ratios divide the measured difference norms by them. A
        blow-up of either run truncates both series to the common prefix.
        """
        if perturbation.grid != self.grid or u0.grid != self.grid:
            raise GridError("stability data must live on the solver grid")
        initial = MHDState(u0, b0)
        if base is None:
            base = self.solver.run(initial, T, dt, self.record_every)
        perturbed = self.solver.run(
            MHDState(u0 + perturbation.u, b0 + perturbation.b), T, dt, self.record_every
        )

        count = min(len(base.trajectory), len(perturbed.trajectory))
        partial = base.terminated_early or perturbed.terminated_early
        times = np.array([state.t for state in base.trajectory[:count]])
        differences = [
            p_state.to_stack() - b_state.to_stack()
            for b_state, p_state in zip(base.trajectory[:count], perturbed.trajectory[:count])
        ]

        velocity, magnetic = slice(0, 2), slice(2, 4)
        du_strong = self._norm_series(differences, self.u_strong, velocity)
        db_strong = self._norm_series(differences, self.b_strong, magnetic)
        du_weak = self._norm_series(differences, self.u_weak, velocity)
        db_weak = self._norm_series(differences, self.b_weak, magnetic)
        db_strong_dissipative = cumulative_trapezoid(
            self._norm_series(differences, self.b_strong_dissipative, magnetic), times, initial=0.0
        )
        db_weak_dissipative = cumulative_trapezoid(
            self._norm_series(differences, self.b_weak_dissipative, magnetic), times, initial=0.0
        )

        norm_strong = float(du_strong.max() + db_strong.max() + db_strong_dissipative[-1])
        norm_weak = float(du_weak.max() + db_weak.max() + db_weak_dissipative[-1])
        delta = self.strong_size(perturbation)
        delta_weak = self.weak_size(perturbation)

        if partial:
            logger.warning(f"stability run ended early at t={times[-1]:.6g}, reporting the common prefix")
        experiment = StabilityExperiment(
            base=base,
            perturbed=perturbed,
            delta=delta,
            delta_weak=delta_weak,
            times=times,
            du_strong=du_strong,
            db_strong=db_strong,
            db_strong_dissipative=db_strong_dissipative,
            du_weak=du_weak,
            db_weak=db_weak,
            db_weak_dissipative=db_weak_dissipative,
            norm_strong=norm_strong,
            norm_weak=norm_weak,
            ratio_strong=norm_strong / delta if delta > 0 else None,
            ratio_weak=norm_weak / delta_weak if delta_weak > 0 else None,
            a_proxy=self._a_proxy(times, base, perturbed, count),
            partial=partial,
        )
        console_info(f"delta={delta:.3e}: strong ratio {experiment.ratio_strong}, weak ratio {experiment.ratio_weak}",
                     "Stability")
        return experiment

    def stability_sweep(
        self,
        u0: VectorField2,
        b0: VectorField2,
        direction: MHDState,
        deltas: Sequence[float],
        T: float,
        dt: float,
        parallel: bool = False,
    ) -> Tuple[List[StabilityExperiment], ReportModels.StabilitySweepReport]:
        """
        One experiment per delta along the unit direction, sharing the base run.

        Threads are used only when parallel is set and deterministic mode is off.
        """
        if any(d < 0 for d in deltas):
            raise GridError(f"deltas must be nonnegative, got {list(deltas)}")
        unit = self.unit_direction(direction)
        base = self.solver.run(MHDState(u0, b0), T, dt, self.record_every)

        def experiment(delta: float) -> StabilityExperiment:
            perturbation = MHDState(unit.u * delta, unit.b * delta)
            return self.stability_experiment(u0, b0, perturbation, T, dt, base=base)

        if parallel and not get_settings().deterministic and len(deltas) > 1:
            with ThreadPoolExecutor(max_workers=len(deltas)) as pool:
                experiments = list(pool.map(experiment, deltas))
        else:
            experiments = [experiment(delta) for delta in deltas]

        report = sweep_report(list(deltas), experiments)
        console_telemetry_event("report", {"alpha": report.alpha, "weak_spread": report.weak_spread}, "Stability")
        return experiments, report


def sweep_report(deltas: List[float], experiments: Sequence[StabilityExperiment]) -> ReportModels.StabilitySweepReport:
    """ratio_strong ~ delta^(-alpha) fitted in log-log; weak_spread = max/min - 1 of the weak ratios."""
    ratio_strong = [e.ratio_strong for e in experiments]
    ratio_weak = [e.ratio_weak for e in experiments]

    pairs = [(d, r) for d, r in zip(deltas, ratio_strong) if r is not None and r > 0 and d > 0]
    alpha = None
    if len(pairs) >= 2 and len({d for d, _ in pairs}) >= 2:
        fit = stats.linregress(np.log([d for d, _ in pairs]), np.log([r for _, r in pairs]))
        alpha = float(-fit.slope)

    weak = [r for r in ratio_weak if r is not None]
    weak_spread = max(weak) / min(weak) - 1.0 if weak and min(weak) > 0 else None
    return ReportModels.StabilitySweepReport(
        deltas=deltas, ratio_strong=ratio_strong, ratio_weak=ratio_weak, alpha=alpha, weak_spread=weak_spread
    )
