"""
Gronwall and Osgood comparison bounds for rho' <= gamma(t) mu(rho).

Three moduli are supported:
    linear      mu(r) = r
    log-plus    mu(r) = c r (1 + ln(e + r))
    log-frac    mu(r) = r + r ln(e + c / r)

Closed forms come from the substitutions z = ln(e + rho) (log-plus) and
z = ln(1 + c / rho) (log-frac). The Osgood method inverts
M(x) = int_x^a dr / mu(r) numerically and works for every modulus.
"""

import logging
import math
from typing import Callable, Literal, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad
from scipy.optimize import brentq

from models.report_models import ReportModels
from utils.errors import GridError

logger = logging.getLogger(__name__)

MuKind = Literal["linear", "log-plus", "log-frac"]
MU_KINDS = ("linear", "log-plus", "log-frac")


def modulus(mu_kind: str, c: float = 1.0) -> Callable[[float], float]:
    """The modulus mu for a kind and constant c."""
    if mu_kind == "linear":
        return lambda r: r
    if mu_kind == "log-plus":
        return lambda r: c * r * (1.0 + math.log(math.e + r))
    if mu_kind == "log-frac":
        return lambda r: 0.0 if r <= 0 else r + r * math.log(math.e + c / r)
    raise GridError(f"unknown modulus kind {mu_kind!r}, expected one of {MU_KINDS}")


def _validate(rho0: float, times: np.ndarray, gamma: np.ndarray) -> None:
    if rho0 < 0:
        raise GridError(f"rho0 must be >= 0, got {rho0}")
    if times.ndim != 1 or times.shape != gamma.shape:
        raise GridError("times and gamma must be one-dimensional and of equal length")
    if np.any(gamma < 0):
        raise GridError("gamma must be nonnegative")
    if times.size and np.any(np.diff(times) <= 0):
        raise GridError("times must be strictly increasing")


def _closed_form(rho0: float, Gamma: np.ndarray, mu_kind: str, c: float) -> np.ndarray:
    if mu_kind == "linear":
        return rho0 * np.exp(Gamma)
    if mu_kind == "log-plus":
        E = np.exp(c * Gamma)
        return (math.e + rho0) ** E * np.exp(E - 1.0) - math.e
    if rho0 == 0.0:
        return np.zeros_like(Gamma)
    z0 = math.log1p(c / rho0)
    exponent = (2.0 + z0) * np.exp(-Gamma) - 2.0
    bound = np.full_like(Gamma, math.inf)
    defined = exponent > 0
    bound[defined] = c / np.expm1(exponent[defined])
    return bound


def _osgood_inverse(rho0: float, Gamma: np.ndarray, mu: Callable[[float], float]) -> np.ndarray:
    """Largest rho with M(rho0) - M(rho) <= Gamma, M(x) = int_x^1 dr / mu(r)."""
    if rho0 == 0.0:
        return np.zeros_like(Gamma)

    def integrand(s: float) -> float:
        r = math.exp(s)
        return r / mu(r)

    def distance(x: float) -> float:
        # int_{rho0}^{x} dr / mu(r) on a log scale
        value, _ = quad(integrand, math.log(rho0), math.log(x), limit=200, epsabs=1e-14, epsrel=1e-12)
        return value

    bound = np.empty_like(Gamma)
    for i, target in enumerate(Gamma):
        if target <= 0:
            bound[i] = rho0
            continue
        upper = max(2.0 * rho0, rho0 + 1.0)
        while distance(upper) < target:
            upper *= 2.0
            if upper > 1e300:
                break
        if upper > 1e300:
            bound[i] = math.inf
            continue
        bound[i] = brentq(lambda x: distance(x) - target, rho0, upper, xtol=1e-14 * upper, rtol=1e-13)
    return bound


def gronwall_bound(
    rho0: float,
    times: Sequence[float],
    gamma: Sequence[float],
    mu_kind: MuKind,
    c: float = 1.0,
    method: Literal["closed-form", "osgood"] = "closed-form",
) -> ReportModels.GronwallBound:
    """
    Upper bound for any rho with rho' <= gamma mu(rho), rho(times[0]) = rho0.

    gamma is sampled at `times` and integrated with the trapezoid rule. A
    log-frac closed form that stops being defined is reported as inf from that
    time on, with truncated=True and undefined_after set.
    """
    times = np.asarray(times, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    _validate(rho0, times, gamma)
    mu = modulus(mu_kind, c)
    Gamma = cumulative_trapezoid(gamma, x=times, initial=0.0)

    if method == "closed-form":
        bound = _closed_form(rho0, Gamma, mu_kind, c)
    elif method == "osgood":
        bound = _osgood_inverse(rho0, Gamma, mu)
    else:
        raise GridError(f"unknown method {method!r}")

    infinite = np.flatnonzero(~np.isfinite(bound))
    truncated = bool(infinite.size)
    undefined_after = float(times[infinite[0]]) if truncated else None
    if truncated:
        bound[infinite[0]:] = math.inf
        logger.info(f"{mu_kind} bound undefined from t={undefined_after:.6g}")

    return ReportModels.GronwallBound(
        times=times.tolist(),
        bound=bound.tolist(),
        mu_kind=mu_kind,
        method=method,
        truncated=truncated,
        undefined_after=undefined_after,
    )


def comparison_ode_solution(
    rho0: float,
    times: Sequence[float],
    gamma: Sequence[float],
    mu_kind: MuKind,
    c: float = 1.0,
    substeps: int = 16,
) -> np.ndarray:
    """
    RK4 solution of rho' = gamma(t) mu(rho) at `times`, with gamma linearly
    interpolated between samples.
    """
    times = np.asarray(times, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    _validate(rho0, times, gamma)
    mu = modulus(mu_kind, c)

    def rate(t: float, rho: float) -> float:
        return float(np.interp(t, times, gamma)) * mu(max(rho, 0.0))

    solution = np.empty_like(times)
    rho = float(rho0)
    solution[0] = rho
    for i in range(1, times.size):
        h = (times[i] - times[i - 1]) / substeps
        t = times[i - 1]
        for _ in range(substeps):
            k1 = rate(t, rho)
            k2 = rate(t + 0.5 * h, rho + 0.5 * h * k1)
            k3 = rate(t + 0.5 * h, rho + 0.5 * h * k2)
            k4 = rate(t + h, rho + h * k3)
            rho += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
            t += h
        solution[i] = rho
    return solution
