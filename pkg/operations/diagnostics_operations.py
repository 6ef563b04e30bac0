"""
Measured quantities of the global-existence bootstrap: the recorded diagnostics
columns, the energy identity, decay-rate fits, the bootstrap and vorticity
monitors, and ratios that measure the constants of the functional inequalities
the argument relies on.

Every constant reported here is measured; none is assumed.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.special import lambertw

from models.besov_models import BesovParams, DyadicFilterBank, critical_index
from models.field_models import Field, MHDState, TorusGrid, VectorField2, field_stack
from models.report_models import ReportModels
from models.run_models import CSV_COLUMNS, DiagnosticsRecord, SimulationResult
from operations.littlewood_paley_operations import (
    besov_from_block_norms,
    besov_norm,
    build_filter_bank,
    coefficient_block_norms,
    sobolev_norm,
)
from operations.spectral_operations import curl2d, kernel_for
from utils.errors import GridError, UndefinedRatioError

logger = logging.getLogger(__name__)

B0_INF_1 = BesovParams(s=0.0, p=math.inf, r=1.0)
B1_INF_1 = BesovParams(s=1.0, p=math.inf, r=1.0)
B2_INF_1 = BesovParams(s=2.0, p=math.inf, r=1.0)
DEFAULT_BOOTSTRAP_THRESHOLD = 4.0
DEFAULT_DECAY_WINDOW = (1.0, math.inf)


class DiagnosticsRecorder:
    """
    Accumulates one diagnostics row per recorded state.

    The running B^2_{inf,1} integral is a trapezoid over the recorded times;
    the dissipation integral is supplied by the time stepper.
    """

    def __init__(self, grid: TorusGrid, p: float, bank: Optional[DyadicFilterBank] = None):
        self.grid = grid
        self.p = p
        self.bank = bank or build_filter_bank(grid)
        self.kernel = kernel_for(grid)
        self.velocity_params = BesovParams(s=1.0 + critical_index(p), p=p, r=1.0)
        self.magnetic_params = BesovParams(s=critical_index(p), p=p, r=1.0)
        self._columns: Dict[str, List[float]] = {name: [] for name in CSV_COLUMNS}
        self._b_mean: List[Tuple[float, float]] = []
        self._div_u: List[float] = []
        self._div_b: List[float] = []
        self._last_b2: Optional[float] = None

    def __len__(self) -> int:
        return len(self._columns["t"])

    def _relative_divergence(self, coefficients: np.ndarray) -> float:
        scale = self.kernel.stack_norm(coefficients)
        if scale == 0.0:
            return 0.0
        return self.kernel.stack_norm(self.kernel.divergence(coefficients)) / scale

    def record(self, state: MHDState, dissipation_integral: float, cfl: float) -> None:
        kernel = self.kernel
        bank = self.bank
        measure = self.grid.measure
        y = state.to_stack()
        u, b = y[:2], y[2:]

        b_values = kernel.to_physical(b)
        vorticity = kernel.curl(u)
        b_blocks = coefficient_block_norms([b[0], b[1]], math.inf, bank)
        b2 = besov_from_block_norms(b_blocks, B2_INF_1, bank)

        running = 0.0
        if self._last_b2 is not None:
            previous_t = self._columns["t"][-1]
            running = self._columns["run_b_b2inf1"][-1] + 0.5 * (state.t - previous_t) * (b2 + self._last_b2)
        self._last_b2 = b2

        row = {
            "t": state.t,
            "energy": 0.5 * measure * float(np.sum(np.abs(y) ** 2)),
            "b_l2": math.sqrt(measure * float(np.sum(np.abs(b) ** 2))),
            "b_linf": float(np.sqrt(np.max(b_values[0] ** 2 + b_values[1] ** 2))),
            "w_linf": float(np.max(np.abs(kernel.to_physical(vorticity)))),
            "w_b0inf1": besov_from_block_norms(coefficient_block_norms([vorticity], math.inf, bank), B0_INF_1, bank),
            "b_b0inf1": besov_from_block_norms(b_blocks, B0_INF_1, bank),
            "run_b_b2inf1": running,
            "grad_b_l2_sq_int": dissipation_integral,
            "besov_u": besov_from_block_norms(
                coefficient_block_norms([u[0], u[1]], self.p, bank), self.velocity_params, bank
            ),
            "besov_b": besov_from_block_norms(
                coefficient_block_norms([b[0], b[1]], self.p, bank), self.magnetic_params, bank
            ),
            "cfl": cfl,
        }
        for name in CSV_COLUMNS:
            self._columns[name].append(float(row[name]))
        self._b_mean.append((float(b[0, 0, 0].real), float(b[1, 0, 0].real)))
        self._div_u.append(self._relative_divergence(u))
        self._div_b.append(self._relative_divergence(b))

    def build(self) -> DiagnosticsRecord:
        return DiagnosticsRecord(
            columns={name: np.asarray(values, dtype=np.float64) for name, values in self._columns.items()},
            p=self.p,
            b_mean=np.asarray(self._b_mean, dtype=np.float64).reshape(-1, 2),
            div_u=np.asarray(self._div_u, dtype=np.float64),
            div_b=np.asarray(self._div_b, dtype=np.float64),
        )


def energy_identity_residual(result: SimulationResult) -> ReportModels.EnergyResidualReport:
    """
    (E(T) + int_0^T ||b||^2_{H^1} - E(0)) / E(0) with E = (||u||^2 + ||b||^2) / 2.

    A zero initial energy gives the absolute residual with normalized=False.
    """
    record = result.record
    if len(record) < 2:
        raise GridError(f"energy residual needs at least two records, got {len(record)}")
    energy = record.column("energy")
    dissipation = record.column("grad_b_l2_sq_int")
    residual = energy[-1] + dissipation[-1] - energy[0]
    normalized = energy[0] > 0
    if normalized:
        residual = residual / energy[0]
    else:
        logger.warning("zero initial energy, returning the absolute energy residual")
    return ReportModels.EnergyResidualReport(
        residual=float(residual), normalized=bool(normalized), initial_energy=float(energy[0])
    )


def fit_decay_rate(
    times: Sequence[float],
    values: Sequence[float],
    window: Tuple[float, float] = DEFAULT_DECAY_WINDOW,
) -> ReportModels.DecayFit:
    """
    Least-squares fit of log(value) against t inside the window.

    The returned rate is the negated slope. A nonpositive value ends the window
    at the sample before it and sets truncated.
    """
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    start, end = window
    inside = (times >= start) & (times <= end)
    t, v = times[inside], values[inside]

    truncated = False
    nonpositive = np.flatnonzero(v <= 0)
    if nonpositive.size:
        truncated = True
        t, v = t[: nonpositive[0]], v[: nonpositive[0]]
        logger.warning(f"nonpositive value in decay window, truncated to {t.size} samples")
    if t.size < 2:
        raise GridError(f"decay fit needs at least two positive samples in [{start}, {end}], got {t.size}")

    log_v = np.log(v)
    if np.ptp(log_v) == 0.0:
        rate, r_squared = 0.0, 1.0
    else:
        fit = stats.linregress(t, log_v)
        rate, r_squared = -float(fit.slope), float(fit.rvalue**2)

    return ReportModels.DecayFit(
        rate=rate,
        r_squared=r_squared,
        window_start=float(t[0]),
        window_end=float(t[-1]),
        samples=int(t.size),
        truncated=truncated,
    )


def _first_crossing(times: np.ndarray, values: np.ndarray, threshold: float) -> Optional[float]:
    above = np.flatnonzero(values > threshold)
    return float(times[above[0]]) if above.size else None


def bootstrap_monitor(
    record: DiagnosticsRecord, threshold: float = DEFAULT_BOOTSTRAP_THRESHOLD
) -> ReportModels.BootstrapReport:
    """
    Running size of b in L^inf_t(B^0_{inf,1}) and L^1_t(B^2_{inf,1}), combined
    both as a max and as a sum, with the first time each exceeds threshold.
    """
    if not threshold > 0:
        raise GridError(f"bootstrap threshold must be positive, got {threshold}")
    running_sup = np.maximum.accumulate(record.column("b_b0inf1"))
    running_integral = record.column("run_b_b2inf1")
    value_max = np.maximum(running_sup, running_integral)
    value_sum = record.bootstrap_quantity()
    times = record.times
    return ReportModels.BootstrapReport(
        threshold=threshold,
        initial_value=float(value_sum[0]),
        value_max=value_max.tolist(),
        value_sum=value_sum.tolist(),
        peak_max=float(value_max.max()),
        peak_sum=float(value_sum.max()),
        crossing_time_max=_first_crossing(times, value_max, threshold),
        crossing_time_sum=_first_crossing(times, value_sum, threshold),
    )


def growth_envelope(times: Sequence[float], values: Sequence[float]) -> float:
    """
    Smallest c >= 0 with values(t) <= c e^{c t} at every sample.

    Solved per sample through the Lambert W function: c t e^{c t} = v t.
    """
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    envelope = 0.0
    for t, v in zip(times, values):
        if v <= 0:
            continue
        c = v if t == 0 else float(lambertw(v * t).real) / t
        envelope = max(envelope, c)
    return envelope


def vorticity_bound_monitor(result: SimulationResult) -> ReportModels.VorticityBoundReport:
    """
    Vorticity sizes against ||u0||_{B^1_{inf,1}} + sup ||b||_{B^0_{inf,1}} * int ||b||_{B^2_{inf,1}}.
    """
    record = result.record
    initial = result.trajectory[0]
    bank = build_filter_bank(initial.grid)
    u0_size = besov_norm(initial.u, B1_INF_1, bank)

    w_linf = record.column("w_linf")
    right_side = u0_size + np.maximum.accumulate(record.column("b_b0inf1")) * record.column("run_b_b2inf1")
    ratios = np.divide(w_linf, right_side, out=np.zeros_like(w_linf), where=right_side > 0)
    return ReportModels.VorticityBoundReport(
        times=record.times.tolist(),
        w_linf=w_linf.tolist(),
        w_b0inf1=record.column("w_b0inf1").tolist(),
        right_side=right_side.tolist(),
        empirical_constant=float(ratios.max()),
        envelope_c=growth_envelope(record.times, record.column("w_b0inf1")),
    )


def euclidean_l2(coefficients: np.ndarray, measure: float, weight: Optional[np.ndarray] = None) -> float:
    power = np.abs(coefficients) ** 2
    if weight is not None:
        power = power * weight
    return math.sqrt(float(np.sum(power)) * measure)


def poincare_ratio(b: Field) -> float:
    """||b||_{L^2} / ||b||_{H^1 homogeneous} for mean-zero b; at most 1 on the torus."""
    stack = field_stack(b)
    if np.any(np.abs(stack[:, 0, 0]) > 1e-13):
        raise GridError("poincare_ratio needs a mean-zero field")
    grid = b.grid
    gradient_norm = euclidean_l2(stack, grid.measure, grid.k_squared)
    if gradient_norm == 0.0:
        raise UndefinedRatioError("poincare_ratio undefined for the zero field")
    return euclidean_l2(stack, grid.measure) / gradient_norm


def velocity_vorticity_ratio(
    u: VectorField2, s: float, p: float, bank: Optional[DyadicFilterBank] = None
) -> float:
    """||u||_{B^s_{p,1}} / (||u||_{L^2} + ||curl u||_{B^{s-1}_{p,1}})."""
    bank = bank or build_filter_bank(u.grid)
    params = BesovParams(s=s, p=p, r=1.0)
    denominator = euclidean_l2(u.spectral(), u.grid.measure) + besov_norm(curl2d(u), params.with_s(s - 1.0), bank)
    if denominator == 0.0:
        raise UndefinedRatioError("velocity_vorticity_ratio undefined for the zero field")
    return besov_norm(u, params, bank) / denominator


def log_interpolation_ratio(f: Field, p: float, bank: Optional[DyadicFilterBank] = None) -> float:
    """
    ||f||_{B^{2/p}_{p,1}} / (||f||_{B^{2/p}_{p,inf}} ln(e + ||f||_{B^{2/p+1}_{p,inf}} / ||f||_{B^{2/p}_{p,inf}})).
    """
    bank = bank or build_filter_bank(f.grid)
    s = critical_index(p)
    weak = besov_norm(f, BesovParams(s=s, p=p, r=math.inf), bank)
    if weak == 0.0:
        raise UndefinedRatioError("log_interpolation_ratio undefined for the zero field")
    strong = besov_norm(f, BesovParams(s=s, p=p, r=1.0), bank)
    smoother = besov_norm(f, BesovParams(s=s + 1.0, p=p, r=math.inf), bank)
    return strong / (weak * math.log(math.e + smoother / weak))


def sobolev_interpolation_ratio(u: Field, s: float, bank: Optional[DyadicFilterBank] = None) -> float:
    """||u||_{B^1_{inf,1}} / (||u||_{L^2}^theta ||u||_{H^s}^{1-theta}) with theta = 1 - 2/s, s > 2."""
    if not s > 2:
        raise GridError(f"sobolev_interpolation_ratio needs s > 2, got {s}")
    bank = bank or build_filter_bank(u.grid)
    theta = 1.0 - 2.0 / s
    l2 = euclidean_l2(field_stack(u), u.grid.measure)
    if l2 == 0.0:
        raise UndefinedRatioError("sobolev_interpolation_ratio undefined for the zero field")
    return besov_norm(u, B1_INF_1, bank) / (l2**theta * sobolev_norm(u, s) ** (1.0 - theta))


def energy_inequality_constant(result: SimulationResult) -> float:
    """
    Largest measured C in d/dt ||b||^2 + ||b||^2_{H^1} <= C ||u||_{L^inf} ||b||_{L^2} ||b||_{H^1}.

    The time derivative is a centered difference over the recorded states; a
    nonpositive left side counts as C = 0.
    """
    trajectory = result.trajectory
    if len(trajectory) < 2:
        raise GridError("energy_inequality_constant needs at least two records")
    grid = trajectory[0].grid
    kernel = kernel_for(grid)
    measure = grid.measure

    times = np.array([state.t for state in trajectory])
    b_sq = np.array([euclidean_l2(state.b.spectral(), measure) ** 2 for state in trajectory])
    b_h1 = np.array([euclidean_l2(state.b.spectral(), measure, grid.k_squared) for state in trajectory])
    u_linf = []
    for state in trajectory:
        values = kernel.to_physical(state.u.spectral())
        u_linf.append(float(np.sqrt(np.max(values[0] ** 2 + values[1] ** 2))))

    rate = np.gradient(b_sq, times)
    left = rate + b_h1**2
    right = np.asarray(u_linf) * np.sqrt(b_sq) * b_h1
    ratios = np.divide(left, right, out=np.zeros_like(left), where=right > 0)
    return float(max(0.0, ratios.max()))


def b_mean_drift(record: DiagnosticsRecord) -> float:
    """Largest |mean(b)| component over the record."""
    if record.b_mean.size == 0:
        return 0.0
    return float(np.abs(record.b_mean).max())
