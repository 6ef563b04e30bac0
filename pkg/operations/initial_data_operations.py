"""
Initial data library and the smallness conditions of the global result.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import stats

from models.besov_models import DyadicFilterBank
from models.experiment_models import ExperimentModels
from models.field_models import MHDState, TorusGrid, VectorField2
from models.report_models import ReportModels
from operations.diagnostics_operations import B0_INF_1, B1_INF_1, euclidean_l2
from operations.lifespan_operations import compute_E0
from operations.littlewood_paley_operations import besov_norm, build_filter_bank, sobolev_norm
from operations.spectral_operations import kernel_for
from storage.snapshot_manager import SnapshotManager
from utils.errors import GridError

logger = logging.getLogger(__name__)

MEAN_TOLERANCE = 1e-13


def _index(grid: TorusGrid, k: int) -> int:
    return k % grid.n_points


def _add_mode(coefficients: np.ndarray, grid: TorusGrid, k1: int, k2: int, value: complex) -> None:
    coefficients[_index(grid, k1), _index(grid, k2)] += value


def _check_resolved(n: int, grid: TorusGrid) -> None:
    if n > grid.dealias_cutoff:
        raise GridError(f"mode {n} is beyond the dealiasing cutoff {grid.dealias_cutoff:.3g} of n={grid.n_points}")


def shear_pair(grid: TorusGrid, n: int, amplitude: float) -> VectorField2:
    """amplitude * (sin(n x2), sin(n x1)), built from its four Fourier coefficients."""
    _check_resolved(n, grid)
    stack = np.zeros((2,) + grid.shape, dtype=np.complex128)
    # sin(n x) = (e^{inx} - e^{-inx}) / 2i
    _add_mode(stack[0], grid, 0, n, -0.5j * amplitude)
    _add_mode(stack[0], grid, 0, -n, 0.5j * amplitude)
    _add_mode(stack[1], grid, n, 0, -0.5j * amplitude)
    _add_mode(stack[1], grid, -n, 0, 0.5j * amplitude)
    return VectorField2.from_coefficients(grid, stack)


def taylor_green(grid: TorusGrid, n: int, amplitude: float) -> VectorField2:
    """amplitude * (sin(n x1) cos(n x2), -cos(n x1) sin(n x2))."""
    _check_resolved(n, grid)
    stack = np.zeros((2,) + grid.shape, dtype=np.complex128)
    for s1 in (1, -1):
        for s2 in (1, -1):
            _add_mode(stack[0], grid, s1 * n, s2 * n, -0.25j * s1 * amplitude)
            _add_mode(stack[1], grid, s1 * n, s2 * n, 0.25j * s2 * amplitude)
    return VectorField2.from_coefficients(grid, stack)


def remark15_data(grid: TorusGrid, n: int, scale: float = 1.0, magnetic_scale: Optional[float] = None) -> MHDState:
    """u0 = n^{-7/2}/10 (sin n x2, sin n x1) and b0 = n^{-5/2}/10 (sin n x2, sin n x1)."""
    magnetic_scale = scale if magnetic_scale is None else magnetic_scale
    u0 = shear_pair(grid, n, scale * n ** -3.5 / 10.0)
    b0 = shear_pair(grid, n, magnetic_scale * n ** -2.5 / 10.0)
    return MHDState(u0, b0)


def _band_noise(grid: TorusGrid, band: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    """Hermitian-symmetric complex Gaussian coefficients supported on the band, Leray projected."""
    low, high = band
    _check_resolved(high, grid)
    shape = (2,) + grid.shape
    noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    support = (grid.k_norm >= low) & (grid.k_norm <= high) & grid.dealias_mask
    noise = noise * support
    mirror = (-np.arange(grid.n_points)) % grid.n_points
    noise = 0.5 * (noise + np.conj(noise[:, mirror][:, :, mirror]))
    kernel = kernel_for(grid)
    projected = kernel.dealias(kernel.leray(noise))
    projected[:, 0, 0] = 0.0
    return projected


def random_solenoidal(
    grid: TorusGrid,
    band: Sequence[int],
    seed: int,
    velocity_size: float,
    magnetic_size: float,
    bank: Optional[DyadicFilterBank] = None,
) -> MHDState:
    """
    Band-limited divergence-free mean-zero data with ||u0||_{B^1_{inf,1}} and
    ||b0||_{B^0_{inf,1}} scaled to the requested sizes.
    """
    bank = bank or build_filter_bank(grid)
    rng = np.random.default_rng(seed)
    fields: List[VectorField2] = []
    for size, params in ((velocity_size, B1_INF_1), (magnetic_size, B0_INF_1)):
        field = VectorField2.from_coefficients(grid, _band_noise(grid, band, rng))
        norm = besov_norm(field, params, bank)
        if norm == 0.0:
            raise GridError(f"band {tuple(band)} holds no resolved modes on n={grid.n_points}")
        fields.append(field * (size / norm))
    return MHDState(fields[0], fields[1])


def make_initial_data(
    spec: ExperimentModels.InitialDataSpec,
    grid: TorusGrid,
    seed: int = 0,
    bank: Optional[DyadicFilterBank] = None,
) -> MHDState:
    if spec.kind == "remark15":
        state = remark15_data(grid, spec.n, spec.scale, spec.magnetic_amplitude)
    elif spec.kind == "single-mode":
        state = MHDState(taylor_green(grid, spec.n, spec.scale), shear_pair(grid, spec.n, spec.magnetic_amplitude))
    elif spec.kind == "random-solenoidal":
        state = random_solenoidal(
            grid, spec.band, spec.seed if spec.seed is not None else seed, spec.scale, spec.magnetic_amplitude, bank
        )
    else:
        path = spec.path
        directory = path.parent if path.is_file() else path
        state = SnapshotManager(directory).load_final_state(grid)
    logger.info(f"initial data {spec.kind} on n={grid.n_points}")
    return state


def check_smallness_conditions(
    state: MHDState,
    p: float = 2.0,
    s: float = 4.0,
    C: float = 10.0,
    c: float = 1.0,
    epsilon: float = 0.05,
    bank: Optional[DyadicFilterBank] = None,
) -> ReportModels.SmallnessReport:
    """
    Mean of b0, the Besov size ||u0||_{B^1_{inf,1}} + ||b0||_{B^0_{inf,1}} against
    epsilon, and ||u0||_{L^2} + ||b0||_{L^2} against

        min{1/(8C^2), (c theta_bar / (C_E0 + 1))^{1/theta_bar}, (||b0||_{B^0_{inf,1}} / C_E0)^{1/theta_bar}}

    with C_E0 = C (||u0||_{H^s} + ||b0||_{H^{s-1}}), theta = 1 - 2/s and
    theta_bar = 1 - 1/(s - 1).
    """
    if not s > 2:
        raise GridError(f"the L^2 smallness condition needs s > 2, got {s}")
    grid = state.grid
    bank = bank or build_filter_bank(grid)
    u0, b0 = state.u, state.b

    b_mean = [float(c0.spectral()[0, 0].real) for c0 in b0.components]
    u_b1 = besov_norm(u0, B1_INF_1, bank)
    b_b0 = besov_norm(b0, B0_INF_1, bank)
    l2_sum = euclidean_l2(u0.spectral(), grid.measure) + euclidean_l2(b0.spectral(), grid.measure)

    theta = 1.0 - 2.0 / s
    theta_bar = 1.0 - 1.0 / (s - 1.0)
    C_E0 = C * (sobolev_norm(u0, s) + sobolev_norm(b0, s - 1.0))
    bound = min(
        1.0 / (8.0 * C * C),
        (c * theta_bar / (C_E0 + 1.0)) ** (1.0 / theta_bar),
        math.inf if C_E0 == 0.0 else (b_b0 / C_E0) ** (1.0 / theta_bar),
    )

    passes_mean = all(abs(m) < MEAN_TOLERANCE for m in b_mean)
    return ReportModels.SmallnessReport(
        b_mean=b_mean,
        besov_smallness=u_b1 + b_b0,
        l2_sum=l2_sum,
        E0=compute_E0(u0, b0, p, bank),
        epsilon=epsilon,
        l2_bound=bound,
        theta=theta,
        theta_bar=theta_bar,
        passes_mean=passes_mean,
        passes_epsilon=u_b1 + b_b0 <= epsilon,
        passes_l2_condition=passes_mean and l2_sum <= bound,
    )


def _power_of_two_grid(n: int) -> TorusGrid:
    n_points = 8
    while n_points < 4 * n:
        n_points *= 2
    return TorusGrid(n_points)


def remark15_power_laws(ns: Sequence[int], scale: float = 1.0) -> ReportModels.PowerLawReport:
    """
    Norms of the remark15 family across mode numbers and the fitted exponents
    of norm ~ n^alpha. epsilon_quantity is ||b0||_{H^2} + ||u0||_{H^3}.
    """
    if len(ns) < 2:
        raise GridError(f"power-law fits need at least two mode numbers, got {list(ns)}")
    norms: Dict[str, List[float]] = {
        "u_h3": [], "u_h4": [], "b_h2": [], "b_h3": [], "u_b1inf1": [], "b_b0inf1": [], "epsilon_quantity": [],
    }
    for n in ns:
        grid = _power_of_two_grid(n)
        bank = build_filter_bank(grid)
        state = remark15_data(grid, n, scale)
        norms["u_h3"].append(sobolev_norm(state.u, 3.0))
        norms["u_h4"].append(sobolev_norm(state.u, 4.0))
        norms["b_h2"].append(sobolev_norm(state.b, 2.0))
        norms["b_h3"].append(sobolev_norm(state.b, 3.0))
        norms["u_b1inf1"].append(besov_norm(state.u, B1_INF_1, bank))
        norms["b_b0inf1"].append(besov_norm(state.b, B0_INF_1, bank))
        norms["epsilon_quantity"].append(norms["b_h2"][-1] + norms["u_h3"][-1])

    log_n = np.log(np.asarray(ns, dtype=np.float64))
    exponents = {name: float(stats.linregress(log_n, np.log(values)).slope) for name, values in norms.items()}
    return ReportModels.PowerLawReport(ns=list(ns), norms=norms, exponents=exponents)
