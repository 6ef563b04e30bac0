"""
Nonlinear time stepping of the non-viscous MHD system with magnetic diffusion

    u_t + grad P = b . grad b - u . grad u,       div u = 0
    b_t - Delta b + u . grad b = b . grad u,      div b = 0

on the 2-torus, and the Picard scheme that solves a linear transport equation
for u and a forced heat equation for b with coefficients frozen at the
previous iterate.

States are carried as coefficient stacks (u1, u2, b1, b2) of shape (4, n, n).
"""

import logging
import math
from functools import lru_cache
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from models.besov_models import BesovParams, DyadicFilterBank, critical_index
from models.field_models import MHDState, TorusGrid, VectorField2
from models.report_models import ReportModels
from models.run_models import PicardIterates, SimulationResult
from operations.diagnostics_operations import DiagnosticsRecorder
from operations.littlewood_paley_operations import (
    besov_from_block_norms,
    build_filter_bank,
    coefficient_block_norms,
    low_pass_multiplier,
    time_lq,
)
from operations.propagator_operations import lawson_rk4_step, uniform_steps
from operations.spectral_operations import kernel_for
from telemetry.console_output import console_info, console_telemetry_event, console_warning
from telemetry.decorators import add_span_attributes, measure_performance, record_metric, trace_method
from utils.errors import BlowUpError, GridError, PicardFailure

logger = logging.getLogger(__name__)

BLOWUP_FACTOR = 1e8
CFL_ADVISORY = 0.5
SOLENOIDAL_DRIFT = 1e-8
NOISE_FLOOR_FACTOR = 1e-13
FACTOR_CACHE_SIZE = 4


class MHDTendency(NamedTuple):
    """Time derivative of a state, with the diffusion of b kept apart."""

    du: VectorField2
    db_nonlinear: VectorField2
    db_diffusion: VectorField2

    @property
    def db(self) -> VectorField2:
        return self.db_nonlinear + self.db_diffusion


def _lagrange_weights(nodes: Sequence[float], x: float) -> np.ndarray:
    nodes = np.asarray(nodes, dtype=np.float64)
    weights = np.ones(nodes.size)
    for i, xi in enumerate(nodes):
        for j, xj in enumerate(nodes):
            if i != j:
                weights[i] *= (x - xj) / (xi - xj)
    return weights


class _FrozenSeries:
    """
    A trajectory stored at t_k = k * dt, evaluated anywhere in [0, T].

    Off-grid times use cubic Lagrange interpolation over the four nearest
    nodes, shifted inward at the ends.
    """

    def __init__(self, dt: float, stacks: List[np.ndarray]):
        self.dt = dt
        self.stacks = stacks

    def at(self, t: float) -> np.ndarray:
        x = t / self.dt
        nearest = int(round(x))
        if abs(x - nearest) < 1e-9 and 0 <= nearest < len(self.stacks):
            return self.stacks[nearest]

        count = len(self.stacks)
        width = min(4, count)
        start = min(max(int(math.floor(x)) - 1, 0), count - width)
        nodes = list(range(start, start + width))
        weights = _lagrange_weights(nodes, x)
        return sum(w * self.stacks[i] for w, i in zip(weights, nodes))


class MHDOperations:
    """
    Pseudo-spectral solver bound to one grid.

    Args:
        grid: Collocation grid
        p: Integrability index for the recorded Besov columns
        bank: Filter bank, built from the grid when omitted
    """

    def __init__(self, grid: TorusGrid, p: float = 2.0, bank: Optional[DyadicFilterBank] = None):
        self.grid = grid
        self.p = p
        self.kernel = kernel_for(grid)
        self.bank = bank or build_filter_bank(grid)
        # full and half step of the current dt plus one previous dt
        self._factors = lru_cache(maxsize=FACTOR_CACHE_SIZE)(self._build_factors)

    def _build_factors(self, dt: float) -> np.ndarray:
        """e^{dt L} with L = 0 on u and Delta on b, shape (4, n, n)."""
        heat = self.kernel.heat_factor(dt)
        return np.stack([np.ones(self.grid.shape), np.ones(self.grid.shape), heat, heat])

    def _products(self, velocity: np.ndarray, magnetic: np.ndarray) -> Dict[str, np.ndarray]:
        """Dealiased coefficients of u.grad u, b.grad b, u.grad b and b.grad u."""
        kernel = self.kernel
        velocity = kernel.dealias(velocity)
        magnetic = kernel.dealias(magnetic)
        u_values = kernel.to_physical(velocity)
        b_values = kernel.to_physical(magnetic)
        grad_u = kernel.to_physical(kernel.gradient(velocity))
        grad_b = kernel.to_physical(kernel.gradient(magnetic))

        physical = np.stack([
            np.einsum("jxy,ijxy->ixy", u_values, grad_u),
            np.einsum("jxy,ijxy->ixy", b_values, grad_b),
            np.einsum("jxy,ijxy->ixy", u_values, grad_b),
            np.einsum("jxy,ijxy->ixy", b_values, grad_u),
        ])
        spectral = kernel.dealias(kernel.to_spectral(physical))
        return {"u_grad_u": spectral[0], "b_grad_b": spectral[1], "u_grad_b": spectral[2], "b_grad_u": spectral[3]}

    def nonlinear_stack(self, y: np.ndarray) -> np.ndarray:
        """Nonlinear tendency of a (4, n, n) stack; zero mode set to exactly 0."""
        products = self._products(y[:2], y[2:])
        du = self.kernel.leray(products["b_grad_b"] - products["u_grad_u"])
        db = products["b_grad_u"] - products["u_grad_b"]
        out = np.concatenate([du, db])
        out[:, 0, 0] = 0.0
        return out

    def dissipation_rate(self, y: np.ndarray) -> float:
        """||b||^2_{H^1 homogeneous} of a stack, by Parseval."""
        return float(np.sum(self.grid.k_squared * np.abs(y[2:]) ** 2) * self.grid.measure)

    def rhs(self, state: MHDState) -> MHDTendency:
        """Tendency of (u, b); the diffusion term Delta b is returned on its own."""
        self._check_grid(state)
        y = self.kernel.dealias(state.to_stack())
        nonlinear = self.nonlinear_stack(y)
        diffusion = -self.grid.k_squared * y[2:]
        return MHDTendency(
            du=VectorField2.from_coefficients(self.grid, nonlinear[:2]),
            db_nonlinear=VectorField2.from_coefficients(self.grid, nonlinear[2:]),
            db_diffusion=VectorField2.from_coefficients(self.grid, diffusion),
        )

    def _advance(self, y: np.ndarray, t: float, dt: float):
        return lawson_rk4_step(
            y,
            t,
            dt,
            lambda _, stack: self.nonlinear_stack(stack),
            self._factors(dt),
            self._factors(0.5 * dt),
            integrand=self.dissipation_rate,
        )

    def step(self, state: MHDState, dt: float) -> MHDState:
        """One integrating-factor RK4 step; raises BlowUpError on non-finite output."""
        if not dt > 0:
            raise GridError(f"dt must be positive, got {dt}")
        self._check_grid(state)
        with np.errstate(over="ignore", invalid="ignore"):
            y, _ = self._advance(self.kernel.dealias(state.to_stack()), state.t, dt)
        if not np.all(np.isfinite(y)):
            raise BlowUpError("non-finite field after step", last_state=state, time=state.t + dt)
        return MHDState.from_stack(self.grid, y, state.t + dt)

    def _check_grid(self, state: MHDState) -> None:
        if state.grid != self.grid:
            raise GridError(f"state has n={state.grid.n_points}, solver has n={self.grid.n_points}")

    def _velocity_linf(self, y: np.ndarray) -> float:
        values = self.kernel.to_physical(y[:2])
        return float(np.sqrt(np.max(values[0] ** 2 + values[1] ** 2)))

    def _magnetic_linf(self, y: np.ndarray) -> float:
        values = self.kernel.to_physical(y[2:])
        return float(np.sqrt(np.max(values[0] ** 2 + values[1] ** 2)))

    def _reproject_magnetic(self, y: np.ndarray, t: float) -> np.ndarray:
        b = y[2:]
        scale = self.kernel.stack_norm(b)
        if scale == 0.0:
            return y
        drift = self.kernel.stack_norm(self.kernel.divergence(b)) / scale
        if drift <= SOLENOIDAL_DRIFT:
            return y
        logger.warning(f"div b drift {drift:.3e} at t={t:.6g} exceeds {SOLENOIDAL_DRIFT:.0e}, re-projecting")
        projected = y.copy()
        projected[2:] = self.kernel.leray(b)
        return projected

    # Integrate to T, recording diagnostics every record_every steps
    @trace_method("mhd.run", include_args=True)
    @measure_performance("mhd_run")
    def run(self, initial: MHDState, T: float, dt: float, record_every: int = 1) -> SimulationResult:
        """
        Integrate from `initial` to T.

        Blow-up (a non-finite field, or ||u||_{L^inf} above 1e8 times the
        initial size) ends the run early; the result then carries
        terminated_early=True and the time of the failed step.
        """
        self._check_grid(initial)
        if record_every < 1:
            raise GridError(f"record_every must be >= 1, got {record_every}")
        n_steps, dt = uniform_steps(T, dt)

        kernel = self.kernel
        n_points = self.grid.n_points
        y = kernel.dealias(initial.to_stack())
        t0 = initial.t
        reference = max(self._velocity_linf(y), self._magnetic_linf(y))
        threshold = BLOWUP_FACTOR * reference

        recorder = DiagnosticsRecorder(self.grid, self.p, self.bank)
        dissipation = 0.0
        velocity_linf = self._velocity_linf(y)
        state = MHDState.from_stack(self.grid, y, t0)
        recorder.record(state, dissipation, dt * n_points * velocity_linf)
        trajectory = [state]

        console_telemetry_event(
            "run_start", {"n_points": n_points, "T": float(T), "dt": float(dt), "steps": n_steps}, "MHD"
        )
        add_span_attributes(n_points=n_points, steps=n_steps, dt=dt)

        cfl_warned = False
        terminated = False
        termination_time: Optional[float] = None
        message = ""
        last_recorded = 0

        for k in range(n_steps):
            t = t0 + k * dt
            with np.errstate(over="ignore", invalid="ignore"):
                y_new, increment = self._advance(y, t, dt)
                finite = bool(np.all(np.isfinite(y_new)))
                velocity_linf = self._velocity_linf(y_new) if finite else math.inf

            if not finite or (threshold > 0 and velocity_linf > threshold):
                terminated = True
                termination_time = t0 + (k + 1) * dt
                message = (
                    "non-finite field" if not finite else f"||u||_inf = {velocity_linf:.3e} exceeds {threshold:.3e}"
                )
                break

            y = self._reproject_magnetic(y_new, t + dt)
            dissipation += increment
            cfl = dt * n_points * velocity_linf
            if cfl > CFL_ADVISORY and not cfl_warned:
                cfl_warned = True
                logger.warning(f"CFL number {cfl:.3f} exceeds advisory {CFL_ADVISORY} at t={t + dt:.6g}")
                console_warning(f"CFL advisory exceeded: {cfl:.3f}", "MHD")

            if (k + 1) % record_every == 0 or k + 1 == n_steps:
                state = MHDState.from_stack(self.grid, y, t0 + (k + 1) * dt)
                recorder.record(state, dissipation, cfl)
                trajectory.append(state)
                last_recorded = k + 1

        if terminated:
            steps_done = int(round((termination_time - t0) / dt)) - 1
            if steps_done > last_recorded:
                state = MHDState.from_stack(self.grid, y, t0 + steps_done * dt)
                recorder.record(state, dissipation, dt * n_points * self._velocity_linf(y))
                trajectory.append(state)
            logger.warning(f"run terminated at t={termination_time:.6g}: {message}")
            console_telemetry_event("blow_up", {"t": float(termination_time), "reason": message}, "MHD")
            record_metric("mhd_blowups", 1)
        else:
            console_telemetry_event("run_end", {"t": float(trajectory[-1].t), "records": len(trajectory)}, "MHD")

        return SimulationResult(
            trajectory=trajectory,
            record=recorder.build(),
            dt=dt,
            t_final=T,
            terminated_early=terminated,
            termination_time=termination_time,
            message=message,
        )

    def _truncated_data(self, u0: VectorField2, b0: VectorField2, level: int) -> np.ndarray:
        multiplier = low_pass_multiplier(level, self.bank)
        return np.concatenate([u0.spectral(), b0.spectral()]) * multiplier

    def _picard_tendency(self, previous: _FrozenSeries):
        kernel = self.kernel
        cache: Dict[float, tuple] = {}

        def frozen(t: float) -> tuple:
            if t not in cache:
                z = previous.at(t)
                products = self._products(z[:2], z[2:])
                forcing_u = products["b_grad_b"] - kernel.gradient_part(products["b_grad_b"] - products["u_grad_u"])
                forcing_b = products["b_grad_u"] - products["u_grad_b"]
                forcing = np.concatenate([forcing_u, forcing_b])
                forcing[:, 0, 0] = 0.0
                cache.clear()
                cache[t] = (kernel.to_physical(kernel.dealias(z[:2])), forcing)
            return cache[t]

        def tendency(t: float, y: np.ndarray) -> np.ndarray:
            velocity_values, forcing = frozen(t)
            out = forcing.copy()
            out[:2] -= kernel.advect(velocity_values, y[:2])
            return out

        return tendency

    # Build Picard iterates 0..n_max on a uniform time grid
    @trace_method("mhd.picard_iterate", include_args=True)
    @measure_performance("mhd_picard")
    def picard_iterate(
        self,
        u0: VectorField2,
        b0: VectorField2,
        n_max: int,
        T: float,
        dt: float,
        lifespan: Optional[float] = None,
    ) -> PicardIterates:
        """
        Iterate 0 is the heat flow of the full data. Iterate n >= 1 solves

            u_t + u^{n-1} . grad u = P(b^{n-1} . grad b^{n-1}) + Q(u^{n-1} . grad u^{n-1})
            b_t - Delta b = b^{n-1} . grad u^{n-1} - u^{n-1} . grad b^{n-1}

        from (S_n u0, S_n b0), where Q = I - P is the gradient part. The frozen
        iterate is interpolated to the RK4 midpoints.
        """
        if n_max < 0:
            raise GridError(f"n_max must be >= 0, got {n_max}")
        if not T > 0:
            raise GridError(f"picard_iterate needs T > 0, got {T}")
        if u0.grid != self.grid or b0.grid != self.grid:
            raise GridError("Picard data must live on the solver grid")
        if lifespan is not None and T > lifespan:
            logger.warning(f"Picard horizon T={T:.6g} exceeds the computed lifespan {lifespan:.6g}")
            console_warning(f"Picard horizon {T:.6g} is beyond the lifespan {lifespan:.6g}", "Picard")

        n_steps, dt = uniform_steps(T, dt)
        times = np.arange(n_steps + 1) * dt
        data = np.concatenate([u0.spectral(), b0.spectral()])

        base = [data * self.kernel.heat_factor(float(t)) for t in times]
        stacks_per_iterate: List[List[np.ndarray]] = [base]
        levels: List[Optional[int]] = [None]

        full = self._factors(dt)
        half = self._factors(0.5 * dt)
        for n in range(1, n_max + 1):
            tendency = self._picard_tendency(_FrozenSeries(dt, stacks_per_iterate[-1]))
            y = self._truncated_data(u0, b0, n)
            stacks = [y]
            with np.errstate(over="ignore", invalid="ignore"):
                for k in range(n_steps):
                    y, _ = lawson_rk4_step(y, k * dt, dt, tendency, full, half)
                    if not np.all(np.isfinite(y)):
                        raise PicardFailure("non-finite field in linear solve", iterate=n, time=(k + 1) * dt)
                    stacks.append(y)
            stacks_per_iterate.append(stacks)
            levels.append(n)
            console_info(f"Picard iterate {n} done ({n_steps} steps)", "Picard")

        iterates = [
            [MHDState.from_stack(self.grid, s, float(t)) for s, t in zip(stacks, times)]
            for stacks in stacks_per_iterate
        ]
        return PicardIterates(times=times, iterates=iterates, truncation_levels=levels, dt=dt, lifespan=lifespan)

    def _level_norms(self, y: np.ndarray, p: float) -> np.ndarray:
        """Block norm rows for u (row 0) and b (row 1)."""
        return np.stack([
            coefficient_block_norms([y[0], y[1]], p, self.bank),
            coefficient_block_norms([y[2], y[3]], p, self.bank),
        ])

    def picard_convergence_report(
        self, iterates: PicardIterates, params: Optional[BesovParams] = None
    ) -> ReportModels.PicardConvergenceReport:
        """
        d_n = sup_t ||u^{n+1} - u^n||_{B^{d/p+1}_{p,1}} + ||b^{n+1} - b^n||_{B^{d/p}_{p,1}}
        together with the uniform-bound quantities of every iterate.
        """
        if len(iterates) < 2:
            raise GridError(f"convergence report needs at least two iterates, got {len(iterates)}")
        p = params.p if params is not None else self.p
        d_over_p = critical_index(p)
        velocity_params = BesovParams(s=d_over_p + 1.0, p=p, r=1.0)
        magnetic_params = BesovParams(s=d_over_p, p=p, r=1.0)
        bank = self.bank
        times = iterates.times

        def level_sum(norms: np.ndarray) -> float:
            return (besov_from_block_norms(norms[0], velocity_params, bank)
                    + besov_from_block_norms(norms[1], magnetic_params, bank))

        stacks = [[state.to_stack() for state in trajectory] for trajectory in iterates.iterates]

        h1_sup: List[float] = []
        b_sup: List[float] = []
        b_a_t: List[float] = []
        for trajectory in stacks:
            norms = [self._level_norms(y, p) for y in trajectory]
            h1_sup.append(max(level_sum(nm) for nm in norms))
            b_sup.append(max(besov_from_block_norms(nm[1], magnetic_params, bank) for nm in norms))
            history = np.array([nm[1] for nm in norms])
            l2_part = besov_from_block_norms(time_lq(times, history, 2.0), magnetic_params.with_s(d_over_p + 1.0), bank)
            l1_part = besov_from_block_norms(time_lq(times, history, 1.0), magnetic_params.with_s(d_over_p + 2.0), bank)
            b_a_t.append(l2_part + l1_part)

        differences: List[float] = []
        for current, following in zip(stacks[:-1], stacks[1:]):
            differences.append(max(level_sum(self._level_norms(b - a, p)) for a, b in zip(current, following)))

        ratios: List[Optional[float]] = []
        for d_n, d_next in zip(differences[:-1], differences[1:]):
            ratios.append(d_next / d_n if d_n > 0 else None)

        noise_floor = NOISE_FLOOR_FACTOR * max(h1_sup)
        converged_index = next((n for n, d in enumerate(differences) if d <= noise_floor), None)

        return ReportModels.PicardConvergenceReport(
            differences=differences,
            ratios=ratios,
            h1_sup=h1_sup,
            b_sup=b_sup,
            b_a_t=b_a_t,
            noise_floor=noise_floor,
            converged_index=converged_index,
        )

    def solution_distance(self, iterates: PicardIterates, solution: SimulationResult, n: int) -> float:
        """
        sup_t of the level-sum distance between iterate n and a nonlinear run on
        the same time grid, relative to the largest level sum of the run.
        """
        if not 0 <= n < len(iterates):
            raise GridError(f"iterate {n} not available, have {len(iterates)}")
        count = min(len(iterates.times), len(solution.trajectory))
        if not np.allclose(iterates.times[:count], solution.times[:count], rtol=0.0, atol=1e-12):
            raise GridError("Picard iterates and the nonlinear run use different time grids")
        d_over_p = critical_index(self.p)
        velocity_params = BesovParams(s=d_over_p + 1.0, p=self.p, r=1.0)
        magnetic_params = BesovParams(s=d_over_p, p=self.p, r=1.0)

        def level_sum(y: np.ndarray) -> float:
            norms = self._level_norms(y, self.p)
            return (besov_from_block_norms(norms[0], velocity_params, self.bank)
                    + besov_from_block_norms(norms[1], magnetic_params, self.bank))

        pairs = list(zip(iterates.iterates[n][:count], solution.trajectory[:count]))
        scale = max(level_sum(exact.to_stack()) for _, exact in pairs)
        distance = max(level_sum(approx.to_stack() - exact.to_stack()) for approx, exact in pairs)
        return distance / scale if scale > 0 else distance
