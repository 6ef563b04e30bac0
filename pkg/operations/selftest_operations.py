"""
Invariant checks at reduced resolution, shared by the selftest command and
the slow test suite. Every check returns a CheckResult and never raises for
a failed property.
"""

import logging
import math
import time
from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from models.besov_models import BesovParams, critical_index
from models.field_models import MHDState, ScalarField, TorusGrid, VectorField2, forward_transform
from models.report_models import ReportModels
from operations.diagnostics_operations import b_mean_drift, energy_identity_residual
from operations.gronwall_operations import MU_KINDS, comparison_ode_solution, gronwall_bound
from operations.initial_data_operations import (
    random_solenoidal,
    remark15_data,
    remark15_power_laws,
    shear_pair,
    taylor_green,
)
from operations.lifespan_operations import (
    compute_lifespan,
    dyadic_tail,
    find_j0,
    smallness_parameter,
    verify_semigroup_smallness,
)
from operations.littlewood_paley_operations import besov_norm, build_filter_bank, dyadic_block
from operations.mhd_operations import MHDOperations
from operations.propagator_operations import heat_semigroup, solve_heat
from operations.spectral_operations import lp_norm
from telemetry.console_output import console_telemetry_event
from utils.errors import BesovMHDError

logger = logging.getLogger(__name__)

Check = Callable[[], Tuple[bool, str]]

# iterate differences below this are rounding, not contraction
PICARD_DIFFERENCE_FLOOR = 1e-12


def _timed(name: str, check: Check) -> ReportModels.CheckResult:
    start = time.perf_counter()
    try:
        passed, detail = check()
    except BesovMHDError as exc:
        passed, detail = False, f"{type(exc).__name__}: {exc}"
    seconds = time.perf_counter() - start
    result = ReportModels.CheckResult(name=name, passed=bool(passed), detail=detail, seconds=seconds)
    event = "check_pass" if result.passed else "check_fail"
    console_telemetry_event(event, {"check": name, "detail": detail}, "Selftest")
    return result


def _spread(values: Sequence[float]) -> float:
    return max(values) / min(values) - 1.0


def check_filter_bank(resolutions: Sequence[int] = (64, 128)) -> ReportModels.CheckResult:
    def check() -> Tuple[bool, str]:
        worst = 0.0
        for n_points in resolutions:
            bank = build_filter_bank(TorusGrid(n_points))
            worst = max(worst, float(np.abs(bank.stack.sum(axis=0) - 1.0).max()))
        return worst < 1e-12, f"partition residual {worst:.2e}"

    return _timed("filter_bank_partition", check)


def check_reconstruction(n_points: int = 32, samples: int = 100, seed: int = 0) -> ReportModels.CheckResult:
    def check() -> Tuple[bool, str]:
        grid = TorusGrid(n_points)
        bank = build_filter_bank(grid)
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(samples):
            coefficients = forward_transform(rng.standard_normal(grid.shape)) * grid.dealias_mask
            f = ScalarField.from_coefficients(grid, coefficients)
            total = sum(dyadic_block(f, j, bank).spectral() for j in bank.block_indices)
            error = np.sqrt(np.sum(np.abs(total - coefficients) ** 2) / np.sum(np.abs(coefficients) ** 2))
            worst = max(worst, float(error))
        return worst < 1e-10, f"worst relative reconstruction error {worst:.2e}"

    return _timed("reconstruction", check)


def _heat_order_errors(grid: TorusGrid, dts: Sequence[float]) -> List[float]:
    """Errors of solve_heat against u = sin(2 x1) sin(5 t) at T = 1."""
    shape = ScalarField.from_function(grid, lambda x1, x2: np.sin(2.0 * x1))

    def forcing(t: float) -> ScalarField:
        return shape * (5.0 * math.cos(5.0 * t) + 4.0 * math.sin(5.0 * t))

    exact = shape * math.sin(5.0)
    return [lp_norm(solve_heat(ScalarField.zeros(grid), forcing, 1.0, dt).final - exact, 2) for dt in dts]


def check_heat(n_points: int = 32, dts: Sequence[float] = (0.1, 0.05, 0.025)) -> ReportModels.CheckResult:
    def check() -> Tuple[bool, str]:
        grid = TorusGrid(n_points)
        mode = ScalarField.from_function(grid, lambda x1, x2: np.sin(3.0 * x1))
        exact = mode * math.exp(-9.0 * 0.5)
        semigroup_error = lp_norm(heat_semigroup(mode, 0.5) - exact, 2) / lp_norm(exact, 2)

        shape = ScalarField.from_function(grid, lambda x1, x2: np.sin(2.0 * x1))

        def forcing(t: float) -> ScalarField:
            return shape * (math.cos(t + 1.0) + 4.0 * math.sin(t + 1.0))

        run = solve_heat(shape * math.sin(1.0), forcing, 1.0, 1e-3)
        manufactured = shape * math.sin(2.0)
        solve_error = lp_norm(run.final - manufactured, 2) / lp_norm(manufactured, 2)

        errors = _heat_order_errors(grid, dts)
        order = min(math.log2(coarse / fine) for coarse, fine in zip(errors, errors[1:]))
        passed = semigroup_error < 1e-12 and solve_error < 1e-8 and order >= 3.8
        return passed, (f"semigroup error {semigroup_error:.2e}, manufactured error {solve_error:.2e}, "
                        f"temporal order {order:.2f}")

    return _timed("heat_propagator", check)


def check_energy_identity(
    n_points: int = 128, dt: float = 1e-3, T: float = 1.0, seeds: Sequence[int] = range(5)
) -> List[ReportModels.CheckResult]:
    """Energy identity, mean preservation and solenoidality on random small data."""
    grid = TorusGrid(n_points)
    solver = MHDOperations(grid)
    results: List[Tuple[float, float, float]] = []

    def run_all() -> Tuple[bool, str]:
        worst = 0.0
        for seed in seeds:
            initial = random_solenoidal(grid, (1, 4), seed, 0.05, 0.05, solver.bank)
            result = solver.run(initial, T, dt, record_every=max(1, int(round(0.1 / dt))))
            residual = abs(energy_identity_residual(result).residual)
            record = result.record
            divergence = float(max(record.div_u.max(), record.div_b.max()))
            results.append((residual, b_mean_drift(record), divergence))
            worst = max(worst, residual)
        return worst < 1e-6, f"worst normalized residual {worst:.2e}"

    energy = _timed("energy_identity", run_all)

    def preservation() -> Tuple[bool, str]:
        if not results:
            return False, "energy runs did not complete"
        mean = max(r[1] for r in results)
        divergence = max(r[2] for r in results)
        return mean < 1e-13 and divergence < 1e-8, f"|mean b| {mean:.2e}, divergence {divergence:.2e}"

    return [energy, _timed("mean_and_solenoidality", preservation)]


def check_euler_limit(n_points: int = 128, dt: float = 1e-3, T: float = 0.5) -> ReportModels.CheckResult:
    def check() -> Tuple[bool, str]:
        grid = TorusGrid(n_points)
        solver = MHDOperations(grid)
        velocity = random_solenoidal(grid, (1, 2), 3, 0.5, 0.0, solver.bank).u
        result = solver.run(MHDState(velocity, VectorField2.zeros(grid)), T, dt, record_every=50)
        energy = result.record.column("energy")
        w_linf = result.record.column("w_linf")
        span = result.times[-1] - result.times[0]
        energy_drift = abs(energy[-1] - energy[0]) / energy[0] / span
        vorticity_drift = abs(w_linf[-1] - w_linf[0]) / w_linf[0] / span
        passed = energy_drift < 1e-6 and vorticity_drift < 1e-2
        return passed, f"energy drift {energy_drift:.2e}, vorticity sup drift {vorticity_drift:.2e} per unit time"

    return _timed("euler_limit", check)


def check_picard(
    n_points: int = 32, C: float = 1e-3, n_max: int = 6, steps: int = 32, amplitude: float = 1.0
) -> ReportModels.CheckResult:
    """
    Contraction of d_n at the guaranteed lifespan. At C=10 that lifespan is of
    order 1e-5 and d_2..d_5 sit at rounding level, so the default constant is
    small enough for unit-amplitude data to reach T0 = 1/16.
    """
    def check() -> Tuple[bool, str]:
        grid = TorusGrid(n_points)
        solver = MHDOperations(grid)
        u0 = taylor_green(grid, 1, amplitude)
        b0 = shear_pair(grid, 1, amplitude)
        T = compute_lifespan(u0, b0, 2.0, C, solver.bank).T
        dt = T / steps
        iterates = solver.picard_iterate(u0, b0, n_max, T, dt, lifespan=T)
        report = solver.picard_convergence_report(iterates)
        solution = solver.run(MHDState(u0, b0), T, dt)
        distance = solver.solution_distance(iterates, solution, n_max)
        contraction = report.contraction_holds(0.9, range(2, 6))
        measured = report.differences[2:6]
        resolved = len(measured) == 4 and min(measured) > PICARD_DIFFERENCE_FLOOR
        detail = (f"T={T:.3e}, contraction {contraction}, "
                  f"min d2..d5 {min(measured, default=0.0):.2e}, distance {distance:.2e}")
        return contraction and resolved and distance < 1e-4, detail

    return _timed("picard_convergence", check)


def check_lifespan(n_points: int = 32, C: float = 10.0) -> ReportModels.CheckResult:
    def check() -> Tuple[bool, str]:
        grid = TorusGrid(n_points)
        bank = build_filter_bank(grid)
        p = 2.0
        small = remark15_data(grid, 4, 0.1)
        small_report = compute_lifespan(small.u, small.b, p, C, bank)
        large_u, large_b = taylor_green(grid, 2, 1.0), shear_pair(grid, 2, 1.0)
        large_report = compute_lifespan(large_u, large_b, p, C, bank)
        branches = (small_report.branch == "small-data" and small_report.T == small_report.T0
                    and large_report.branch == "large-data"
                    and large_report.T == min(large_report.T0, large_report.T1, large_report.T2))

        lifespans = [compute_lifespan(large_u * c, large_b * c, p, C, bank).T for c in (1.0, 2.0, 4.0)]
        monotone = all(b <= a for a, b in zip(lifespans, lifespans[1:]))

        a = smallness_parameter(C)
        block_norms = np.array([lp_norm(dyadic_block(large_u, j, bank), p) for j in bank.block_indices])
        brute = next(j0 for j0 in range(bank.j_max + 2) if dyadic_tail(block_norms, j0, p, bank) < a / 4.0)
        exact_j0 = brute == find_j0(large_u, a, p, bank)

        T = 0.05
        quadrature = verify_semigroup_smallness(large_u, T, a, p, bank)
        times = np.linspace(0.0, T, max(101, int(math.ceil(T / 1e-4)) + 1))
        s = critical_index(p)
        high = [besov_norm(heat_semigroup(large_u, t), BesovParams(s=s + 2.0, p=p, r=1.0), bank) for t in times]
        mid = [besov_norm(heat_semigroup(large_u, t), BesovParams(s=s + 1.0, p=p, r=1.0), bank) for t in times]
        l1 = trapezoid(high, times)
        l2 = math.sqrt(trapezoid(np.square(mid), times))
        agreement = max(abs(l1 - quadrature.l1_norm) / l1, abs(l2 - quadrature.l2_norm) / l2)

        passed = branches and monotone and exact_j0 and agreement < 1e-3
        return passed, (f"branches {branches}, monotone {monotone}, j0 exact {exact_j0}, "
                        f"semigroup agreement {agreement:.2e}")

    return _timed("lifespan_formula", check)


def check_gronwall(cases: int = 20, seed: int = 11) -> ReportModels.CheckResult:
    def check() -> Tuple[bool, str]:
        rng = np.random.default_rng(seed)
        times = np.linspace(0.0, 1.0, 101)
        failures = 0
        linear_error = 0.0
        for _ in range(cases):
            rho0 = float(rng.uniform(0.0, 2.0))
            amplitude, wobble, frequency = rng.uniform(0.1, 1.0), rng.uniform(0.0, 0.1), rng.uniform(0.5, 6.0)
            gamma = amplitude + wobble * np.sin(frequency * times)
            for kind in MU_KINDS:
                oracle = comparison_ode_solution(rho0, times, gamma, kind)
                for method in ("closed-form", "osgood"):
                    bound = np.asarray(gronwall_bound(rho0, times, gamma, kind, method=method).bound)
                    if np.any(bound < oracle * (1.0 - 1e-7) - 1e-12):
                        failures += 1
            exact = rho0 * np.exp(amplitude * times)
            closed = np.asarray(gronwall_bound(rho0, times, np.full_like(times, amplitude), "linear").bound)
            scale = max(1.0, float(exact.max()))
            linear_error = max(linear_error, float(np.abs(closed - exact).max()) / scale)
        detail = f"{failures} domination failures, linear error {linear_error:.2e}"
        return failures == 0 and linear_error < 1e-10, detail

    return _timed("gronwall_domination", check)


def check_power_laws(ns: Sequence[int] = (4, 8, 16)) -> ReportModels.CheckResult:
    def check() -> Tuple[bool, str]:
        report = remark15_power_laws(ns)
        large = [v * n ** -0.5 for v, n in zip(report.norms["u_h4"], ns)]
        small = [v * n ** 0.5 for v, n in zip(report.norms["epsilon_quantity"], ns)]
        besov = [v * n ** 2.5 for v, n in zip(report.norms["u_b1inf1"], ns)]
        spreads = (_spread(large), _spread(small), _spread(besov))
        return all(s < 0.2 for s in spreads), "spreads " + ", ".join(f"{s:.3f}" for s in spreads)

    return _timed("remark15_power_laws", check)


def run_selftest() -> List[ReportModels.CheckResult]:
    results = [
        check_filter_bank(),
        check_reconstruction(),
        check_heat(),
        *check_energy_identity(),
        check_euler_limit(),
        check_picard(),
        check_lifespan(),
        check_gronwall(),
        check_power_laws(),
    ]
    failed = [r.name for r in results if not r.passed]
    if failed:
        logger.error(f"selftest failures: {failed}")
    return results
