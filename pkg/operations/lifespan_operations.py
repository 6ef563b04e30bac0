"""
Explicit local existence time from the size of the data and the dyadic tail
of the velocity.

With a = 1/(24C) and E0 = ||b0||_{B^{d/p}_{p,1}} + ||u0||_{B^{d/p+1}_{p,1}}:

    T0 = min{1, 1/(96 C E0)^2, 1/(96 C a)^2, 1/(72 C E0), ln 2 / (12 C E0)}

Small data (||u0||_{B^{d/p-1}_{p,1}} <= a) keep T = T0. Otherwise the smallest
j0 whose tail sum stays below a/4 gives

    T1 = (a/4) 2^{-2 j0} / ||u0||_{B^{d/p}_{p,1}}
    T2 = (a^2/16) 2^{-2 j0} / ||u0||^2_{B^{d/p}_{p,1}}

and T = min{T0, T1, T2}.
"""

import logging
import math
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad, quad_vec

from models.besov_models import BesovParams, DyadicFilterBank, critical_index
from models.field_models import MHDState, VectorField2
from models.report_models import ReportModels
from operations.littlewood_paley_operations import (
    besov_block_norms,
    besov_from_block_norms,
    besov_norm,
    build_filter_bank,
    coefficient_block_norms,
)
from telemetry.console_output import console_telemetry_event
from telemetry.decorators import measure_performance, trace_method
from utils.errors import GridError

logger = logging.getLogger(__name__)

DEFAULT_CONSTANT_C = 10.0
QUAD_LIMIT = 400
QUAD_EPSREL = 1e-10


def _bank_for(field: VectorField2, bank: Optional[DyadicFilterBank]) -> DyadicFilterBank:
    return bank if bank is not None else build_filter_bank(field.grid)


def _inverse(x: float) -> float:
    return math.inf if x == 0 else 1.0 / x


def smallness_parameter(C: float) -> float:
    if not C > 0:
        raise GridError(f"the constant C must be positive, got {C}")
    return 1.0 / (24.0 * C)


def compute_E0(u0: VectorField2, b0: VectorField2, p: float, bank: Optional[DyadicFilterBank] = None) -> float:
    """||b0||_{B^{d/p}_{p,1}} + ||u0||_{B^{d/p+1}_{p,1}}."""
    if u0.grid != b0.grid:
        raise GridError("u0 and b0 live on different grids")
    bank = _bank_for(u0, bank)
    d_over_p = critical_index(p)
    return (besov_norm(b0, BesovParams(s=d_over_p, p=p, r=1.0), bank)
            + besov_norm(u0, BesovParams(s=d_over_p + 1.0, p=p, r=1.0), bank))


def dyadic_tail(block_norms: np.ndarray, j0: int, p: float, bank: DyadicFilterBank) -> float:
    """
    sum over |j| >= j0 of 2^{(d/p) j} ||Delta_j u0||_{L^p}.

    The grid has no blocks below j = -1, and that block only enters when j0 = 0.
    """
    weights = 2.0 ** (critical_index(p) * bank.weights_exponents)
    indices = np.arange(-1, bank.j_max + 1)
    selected = indices >= j0
    if j0 == 0:
        selected |= indices == -1
    return float(np.sum(weights[selected] * block_norms[selected]))


def find_j0(u0: VectorField2, a: float, p: float, bank: Optional[DyadicFilterBank] = None) -> int:
    """Smallest j0 >= 0 with dyadic_tail(u0, j0) < a / 4; beyond j_max the tail is empty."""
    if not a > 0:
        raise GridError(f"a must be positive, got {a}")
    bank = _bank_for(u0, bank)
    block_norms = besov_block_norms(u0, p, bank)
    for j0 in range(0, bank.j_max + 2):
        if dyadic_tail(block_norms, j0, p, bank) < a / 4.0:
            return j0
    return bank.j_max + 1


def _t0(E0: float, C: float, a: float) -> float:
    return min(
        1.0,
        _inverse(96.0 * C * E0) ** 2,
        _inverse(96.0 * C * a) ** 2,
        _inverse(72.0 * C * E0),
        math.log(2.0) * _inverse(12.0 * C * E0),
    )


@trace_method("lifespan.compute_lifespan", include_args=True)
@measure_performance("lifespan_compute")
def compute_lifespan(
    u0: VectorField2,
    b0: VectorField2,
    p: float = 2.0,
    C: float = DEFAULT_CONSTANT_C,
    bank: Optional[DyadicFilterBank] = None,
) -> ReportModels.LifespanReport:
    a = smallness_parameter(C)
    bank = _bank_for(u0, bank)
    d_over_p = critical_index(p)
    E0 = compute_E0(u0, b0, p, bank)
    T0 = _t0(E0, C, a)

    block_norms = besov_block_norms(u0, p, bank)
    u0_low = besov_from_block_norms(block_norms, BesovParams(s=d_over_p - 1.0, p=p, r=1.0), bank)
    u0_mid = besov_from_block_norms(block_norms, BesovParams(s=d_over_p, p=p, r=1.0), bank)

    if u0_low <= a:
        report = ReportModels.LifespanReport(
            E0=E0, a=a, C=C, p=p, T0=T0, T=T0, branch="small-data", u0_low_norm=u0_low, u0_mid_norm=u0_mid
        )
    else:
        j0 = find_j0(u0, a, p, bank)
        scale = 2.0 ** (-2 * j0)
        T1 = (a / 4.0) * scale * _inverse(u0_mid)
        T2 = (a * a / 16.0) * scale * _inverse(u0_mid) ** 2
        report = ReportModels.LifespanReport(
            E0=E0, a=a, C=C, p=p, j0=j0, T0=T0, T1=T1, T2=T2, T=min(T0, T1, T2),
            branch="large-data", u0_low_norm=u0_low, u0_mid_norm=u0_mid,
        )

    logger.info(f"lifespan {report.branch}: E0={E0:.6g}, T={report.T:.6g}")
    console_telemetry_event("report", {"lifespan": report.T, "branch": report.branch, "E0": E0}, "Lifespan")
    return report


def _heat_block_norms(u0: VectorField2, t: float, p: float, bank: DyadicFilterBank) -> np.ndarray:
    factor = np.exp(-bank.grid.k_squared * t)
    return coefficient_block_norms([c.spectral() * factor for c in u0.components], p, bank)


def verify_semigroup_smallness(
    u0: VectorField2,
    T: float,
    a: float,
    p: float = 2.0,
    bank: Optional[DyadicFilterBank] = None,
) -> ReportModels.SemigroupSmallnessReport:
    """
    Norms of e^{t Delta} u0 in L^1_T(B^{d/p+2}_{p,1}) and L^2_T(B^{d/p+1}_{p,1}).

    The heat flow is exact per mode at every quadrature node; the time integral
    is adaptive. The blockwise values integrate each block before summing.
    """
    if not T > 0:
        raise GridError(f"verify_semigroup_smallness needs T > 0, got {T}")
    bank = _bank_for(u0, bank)
    d_over_p = critical_index(p)
    high = BesovParams(s=d_over_p + 2.0, p=p, r=1.0)
    mid = BesovParams(s=d_over_p + 1.0, p=p, r=1.0)

    def norm_at(t: float, params: BesovParams) -> float:
        return besov_from_block_norms(_heat_block_norms(u0, t, p, bank), params, bank)

    l1_norm, _ = quad(lambda t: norm_at(t, high), 0.0, T, limit=QUAD_LIMIT, epsrel=QUAD_EPSREL)
    l2_square, _ = quad(lambda t: norm_at(t, mid) ** 2, 0.0, T, limit=QUAD_LIMIT, epsrel=QUAD_EPSREL)
    l2_norm = math.sqrt(max(l2_square, 0.0))

    block_l1, _ = quad_vec(lambda t: _heat_block_norms(u0, t, p, bank), 0.0, T, limit=QUAD_LIMIT, epsrel=QUAD_EPSREL)
    block_l2, _ = quad_vec(
        lambda t: _heat_block_norms(u0, t, p, bank) ** 2, 0.0, T, limit=QUAD_LIMIT, epsrel=QUAD_EPSREL
    )
    l1_blockwise = besov_from_block_norms(np.asarray(block_l1), high, bank)
    l2_blockwise = besov_from_block_norms(np.sqrt(np.maximum(block_l2, 0.0)), mid, bank)

    total = l1_norm + l2_norm
    passed = total <= a
    if not passed:
        logger.warning(f"heat flow A_T norm {total:.6g} exceeds a={a:.6g} at T={T:.6g}")
    return ReportModels.SemigroupSmallnessReport(
        l1_norm=l1_norm,
        l2_norm=l2_norm,
        total=total,
        l1_blockwise=l1_blockwise,
        l2_blockwise=l2_blockwise,
        a=a,
        T=T,
        passed=passed,
    )


def lifespan_continuity(
    u0: VectorField2,
    b0: VectorField2,
    direction: MHDState,
    deltas: Sequence[float],
    p: float = 2.0,
    C: float = DEFAULT_CONSTANT_C,
) -> ReportModels.LifespanContinuityReport:
    """Lifespans of (u0, b0) + delta * direction against the unperturbed one."""
    if direction.grid != u0.grid:
        raise GridError("perturbation direction lives on a different grid")
    bank = build_filter_bank(u0.grid)
    reference = compute_lifespan(u0, b0, p, C, bank).T
    lifespans = [
        compute_lifespan(u0 + direction.u * delta, b0 + direction.b * delta, p, C, bank).T for delta in deltas
    ]
    return ReportModels.LifespanContinuityReport(
        reference=reference,
        deltas=[float(d) for d in deltas],
        lifespans=lifespans,
        differences=[abs(T - reference) for T in lifespans],
    )
