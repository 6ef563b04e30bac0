"""
Linear propagators: the exact heat semigroup, the forced heat equation
u_t - Delta u = G, and linear transport f_t + v . grad f = g, together with
measured constants of the smoothing and transport estimates.

Both solvers share lawson_rk4_step. For the heat equation the stiff factor is
e^{-|k|^2 dt}; for transport the factor is 1 and the step is classical RK4.
"""

import logging
import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from models.besov_models import BesovParams, DyadicFilterBank
from models.field_models import Field, VectorField2, field_from_stack, field_stack
from models.report_models import ReportModels
from models.run_models import PropagatorRun
from operations.littlewood_paley_operations import (
    besov_norm,
    build_filter_bank,
    chemin_lerner_norm,
    coefficient_block_norms,
    besov_from_block_norms,
)
from operations.spectral_operations import SpectralKernel, divergence_residual, kernel_for, lp_norm_values
from utils.errors import GridError, NonSolenoidalError, UndefinedRatioError

logger = logging.getLogger(__name__)

Forcing = Callable[[float], Field]
Velocity = Union[VectorField2, Callable[[float], VectorField2]]
Tendency = Callable[[float, np.ndarray], np.ndarray]
StageIntegrand = Callable[[np.ndarray], float]

SOLENOIDAL_TOLERANCE = 1e-8


def lawson_rk4_step(
    y: np.ndarray,
    t: float,
    dt: float,
    tendency: Tendency,
    full_factor: Union[float, np.ndarray],
    half_factor: Union[float, np.ndarray],
    integrand: Optional[StageIntegrand] = None,
) -> Tuple[np.ndarray, float]:
    """
    One integrating-factor RK4 step for y' = L y + N(t, y) with e^{dt L} = full_factor.

    Returns the new state and the RK4 quadrature of `integrand` over the step,
    evaluated at the four stage states (0.0 when no integrand is given).
    """
    k1 = dt * tendency(t, y)
    stage2 = half_factor * (y + 0.5 * k1)
    k2 = dt * tendency(t + 0.5 * dt, stage2)
    stage3 = half_factor * y + 0.5 * k2
    k3 = dt * tendency(t + 0.5 * dt, stage3)
    stage4 = full_factor * y + half_factor * k3
    k4 = dt * tendency(t + dt, stage4)

    y_new = full_factor * y + (full_factor * k1 + 2.0 * half_factor * (k2 + k3) + k4) / 6.0

    increment = 0.0
    if integrand is not None:
        increment = dt * (integrand(y) + 2.0 * integrand(stage2) + 2.0 * integrand(stage3) + integrand(stage4)) / 6.0
    return y_new, increment


def uniform_steps(T: float, dt: float) -> Tuple[int, float]:
    """Step count and the dt that lands exactly on T."""
    if T < 0:
        raise GridError(f"final time must be >= 0, got {T}")
    if not dt > 0:
        raise GridError(f"dt must be positive, got {dt}")
    if T == 0:
        return 0, dt
    n_steps = max(1, math.ceil(T / dt - 1e-9))
    return n_steps, T / n_steps


def heat_semigroup(f: Field, t: float) -> Field:
    """e^{t Delta} f, exact per mode."""
    if t < 0:
        raise GridError(f"heat semigroup needs t >= 0, got {t}")
    factor = kernel_for(f.grid).heat_factor(t)
    return field_from_stack(f.grid, field_stack(f) * factor)


def _forcing_stack(forcing: Optional[Forcing], t: float, shape: Tuple[int, ...]) -> np.ndarray:
    if forcing is None:
        return np.zeros(shape, dtype=np.complex128)
    stack = field_stack(forcing(t))
    if stack.shape != shape:
        raise GridError(f"forcing has shape {stack.shape}, solution has {shape}")
    return stack


def solve_heat(f0: Field, forcing: Optional[Forcing], T: float, dt: float) -> PropagatorRun:
    """
    Integrating-factor RK4 for u_t - Delta u = G with a snapshot at every step.

    Args:
        f0: Initial datum, scalar or vector
        forcing: G as a function of time, or None
        T: Final time, > 0
        dt: Requested step, adjusted down so that T is a whole number of steps
    """
    if not T > 0:
        raise GridError(f"solve_heat needs T > 0, got {T}")
    if dt > T:
        raise GridError(f"dt = {dt} exceeds T = {T}")
    n_steps, dt = uniform_steps(T, dt)

    grid = f0.grid
    kernel = kernel_for(grid)
    full = kernel.heat_factor(dt)
    half = kernel.heat_factor(0.5 * dt)

    y = field_stack(f0)

    def tendency(t: float, _: np.ndarray) -> np.ndarray:
        return _forcing_stack(forcing, t, y.shape)

    stacks = [y]
    for k in range(n_steps):
        y, _ = lawson_rk4_step(y, k * dt, dt, tendency, full, half)
        stacks.append(y)

    return PropagatorRun(
        times=np.arange(n_steps + 1) * dt,
        snapshots=[field_from_stack(grid, s) for s in stacks],
        dt=dt,
        t_final=T,
        forcing_description="none" if forcing is None else getattr(forcing, "__name__", "callable"),
        forcing=forcing,
    )


def _velocity_function(velocity: Velocity) -> Callable[[float], VectorField2]:
    if isinstance(velocity, VectorField2):
        return lambda t: velocity
    return velocity


def check_solenoidal(v: VectorField2, tolerance: float = SOLENOIDAL_TOLERANCE) -> None:
    residual = divergence_residual(v)
    if residual > tolerance:
        raise NonSolenoidalError(f"velocity divergence residual {residual:.3e} exceeds {tolerance:.1e}")


def transport_tendency(
    velocity_values: Callable[[float], np.ndarray],
    forcing_stack: Callable[[float], np.ndarray],
    grid_kernel: SpectralKernel,
) -> Tendency:
    """Right side -(v . grad) f + g on coefficient stacks."""
    def tendency(t: float, y: np.ndarray) -> np.ndarray:
        return forcing_stack(t) - grid_kernel.advect(velocity_values(t), y)
    return tendency


def solve_transport(
    f0: Field,
    velocity: Velocity,
    forcing: Optional[Forcing],
    T: float,
    dt: float,
) -> PropagatorRun:
    """
    RK4 for f_t + v . grad f = g with dealiased advection.

    The velocity is checked for solenoidality at every evaluation time.
    """
    if not T > 0:
        raise GridError(f"solve_transport needs T > 0, got {T}")
    if dt > T:
        raise GridError(f"dt = {dt} exceeds T = {T}")
    n_steps, dt = uniform_steps(T, dt)

    grid = f0.grid
    kernel = kernel_for(grid)
    velocity_at = _velocity_function(velocity)
    y = field_stack(f0)
    cache: Dict[float, np.ndarray] = {}

    def velocity_values(t: float) -> np.ndarray:
        if t not in cache:
            v = velocity_at(t)
            if v.grid != grid:
                raise GridError("velocity and transported field live on different grids")
            check_solenoidal(v)
            cache.clear()
            cache[t] = v.physical()
        return cache[t]

    tendency = transport_tendency(velocity_values, lambda t: _forcing_stack(forcing, t, y.shape), kernel)

    stacks = [y]
    for k in range(n_steps):
        y, _ = lawson_rk4_step(y, k * dt, dt, tendency, 1.0, 1.0)
        stacks.append(y)

    return PropagatorRun(
        times=np.arange(n_steps + 1) * dt,
        snapshots=[field_from_stack(grid, s) for s in stacks],
        dt=dt,
        t_final=T,
        forcing_description="none" if forcing is None else getattr(forcing, "__name__", "callable"),
        forcing=forcing,
    )


def _reciprocal(q: float) -> float:
    return 0.0 if math.isinf(q) else 1.0 / q


def _is_mean_zero(f: Field) -> bool:
    return bool(np.all(np.abs(field_stack(f)[:, 0, 0]) < 1e-14))


def smoothing_ratio_report(
    u0: Field,
    forcing: Optional[Forcing],
    T: float,
    dt: float,
    q: float,
    q1: float,
    params: BesovParams,
    bank: Optional[DyadicFilterBank] = None,
) -> ReportModels.SmoothingReport:
    """
    Measured C1 in ||u||_{L~^q_T(B^{s+2/q})} <= C1 (||u0||_{B^s} + ||G||_{L~^{q1}_T(B^{s+2/q1-2})}).
    """
    if q1 > q:
        raise GridError(f"smoothing estimate needs q1 <= q, got q1 = {q1}, q = {q}")
    bank = bank or build_filter_bank(u0.grid)
    run = solve_heat(u0, forcing, T, dt)

    solution_norm = chemin_lerner_norm(
        run.times, run.snapshots, q, params.with_s(params.s + 2.0 * _reciprocal(q)), bank
    )
    data_norm = besov_norm(u0, params, bank)
    forcing_norm = 0.0
    samples: List[Field] = []
    if forcing is not None:
        samples = [forcing(float(t)) for t in run.times]
        forcing_norm = chemin_lerner_norm(
            run.times, samples, q1, params.with_s(params.s + 2.0 * _reciprocal(q1) - 2.0), bank
        )

    denominator = data_norm + forcing_norm
    if denominator == 0.0:
        raise UndefinedRatioError("smoothing ratio undefined: zero data and zero forcing")

    return ReportModels.SmoothingReport(
        ratio=solution_norm / denominator,
        solution_norm=solution_norm,
        data_norm=data_norm,
        forcing_norm=forcing_norm,
        q=q,
        q1=q1,
        s=params.s,
        nonhomogeneous_prefactor=1.0 + T ** (1.0 + _reciprocal(q) - _reciprocal(q1)),
        mean_zero=_is_mean_zero(u0) and all(_is_mean_zero(g) for g in samples),
    )


def _gradient_coefficients(v: VectorField2) -> List[np.ndarray]:
    gradient = kernel_for(v.grid).gradient(v.spectral())
    return [gradient[i, j] for i in range(2) for j in range(2)]


def _gradient_linf(v: VectorField2) -> float:
    kernel = kernel_for(v.grid)
    measure = v.grid.measure
    return float(sum(lp_norm_values(kernel.to_physical(c), math.inf, measure) for c in _gradient_coefficients(v)))


def _gradient_besov(v: VectorField2, params: BesovParams, bank: DyadicFilterBank) -> float:
    return besov_from_block_norms(coefficient_block_norms(_gradient_coefficients(v), params.p, bank), params, bank)


def _safe_ratio(numerator: np.ndarray, denominator: np.ndarray) -> float:
    if np.any((denominator == 0) & (numerator != 0)):
        raise UndefinedRatioError("transport ratio undefined: zero right side with nonzero solution")
    ratios = np.divide(numerator, denominator, out=np.zeros_like(numerator), where=denominator > 0)
    return float(ratios.max())


def _running_integral(times: Sequence[float], samples: np.ndarray) -> np.ndarray:
    return cumulative_trapezoid(samples, x=np.asarray(times), initial=0.0)


def transport_estimate_report(
    run: PropagatorRun,
    velocity: Velocity,
    forcing: Optional[Forcing],
    params: BesovParams,
    bank: Optional[DyadicFilterBank] = None,
) -> ReportModels.TransportReport:
    """
    Measured constants of the transport estimates on a solve_transport run.

    ratio_linear uses V'(t) = ||grad v||_{L^inf} in the (1 + V)(...) form.
    ratio_exponential and ratio_endpoint use e^{V}(||f0|| + int e^{-V} ||g||)
    with V' = ||grad v||_{B^{2/p}_{p,r}} + ||grad v||_{L^inf} and
    V' = ||grad v||_{B^{2/p}_{p,1}} respectively.
    """
    forcing = forcing if forcing is not None else run.forcing
    grid = run.initial.grid
    bank = bank or build_filter_bank(grid)
    velocity_at = _velocity_function(velocity)
    times = np.asarray(run.times, dtype=np.float64)

    f_norms = np.array([besov_norm(f, params, bank) for f in run.snapshots])
    if forcing is None:
        g_norms = np.zeros_like(times)
    else:
        g_norms = np.array([besov_norm(forcing(float(t)), params, bank) for t in times])

    velocities = [velocity_at(float(t)) for t in times]
    critical = BesovParams(s=2.0 * _reciprocal(params.p), p=params.p, r=params.r)
    endpoint = critical.model_copy(update={"r": 1.0})
    linf = np.array([_gradient_linf(v) for v in velocities])
    exponential_rate = np.array([_gradient_besov(v, critical, bank) for v in velocities]) + linf
    endpoint_rate = np.array([_gradient_besov(v, endpoint, bank) for v in velocities])

    V = _running_integral(times, linf)
    linear_bound = (1.0 + V) * (f_norms[0] + _running_integral(times, g_norms))

    def exponential_bound(rate: np.ndarray) -> np.ndarray:
        V2 = _running_integral(times, rate)
        return np.exp(V2) * (f_norms[0] + _running_integral(times, np.exp(-V2) * g_norms))

    return ReportModels.TransportReport(
        ratio_linear=_safe_ratio(f_norms, linear_bound),
        ratio_exponential=_safe_ratio(f_norms, exponential_bound(exponential_rate)),
        ratio_endpoint=_safe_ratio(f_norms, exponential_bound(endpoint_rate)),
        stretching=float(V[-1]),
    )
