"""
Dyadic filter bank, Littlewood-Paley blocks, Besov norms and Chemin-Lerner
space-time norms on the periodic grid.

The radial low-pass chi is 1 on |xi| <= 3/4 and 0 on |xi| >= 4/3, joined by the
exp(-1/t) smooth step; phi(xi) = chi(xi/2) - chi(xi) lives on 3/4 <= |xi| <= 8/3.
"""

import math
from functools import lru_cache
from typing import List, Sequence

import numpy as np
from scipy.integrate import trapezoid

from models.besov_models import BesovParams, DyadicFilterBank
from models.field_models import (
    Field,
    ScalarField,
    TorusGrid,
    VectorField2,
    field_components,
    inverse_transform,
)
from operations.spectral_operations import lp_norm_values
from utils.errors import GridError

CHI_PLATEAU = 0.75
CHI_SUPPORT = 4.0 / 3.0
PHI_INNER = 0.75
PHI_OUTER = 8.0 / 3.0


def _theta(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros_like(t)
    positive = t > 0
    out[positive] = np.exp(-1.0 / t[positive])
    return out


def smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    rising = _theta(t)
    return rising / (rising + _theta(1.0 - np.asarray(t, dtype=np.float64)))


def chi_profile(r: np.ndarray) -> np.ndarray:
    """Radial low-pass chi evaluated at radius r."""
    return smooth_step((CHI_SUPPORT - np.asarray(r, dtype=np.float64)) / (CHI_SUPPORT - CHI_PLATEAU))


def phi_profile(r: np.ndarray) -> np.ndarray:
    """Radial annulus filter phi(r) = chi(r/2) - chi(r)."""
    r = np.asarray(r, dtype=np.float64)
    return chi_profile(r / 2.0) - chi_profile(r)


def _block_count(max_radius: float) -> int:
    j_max = 0
    while 2.0**j_max * PHI_OUTER <= max_radius:
        j_max += 1
    # the telescoped sum chi + phi_0 + ... + phi_J equals chi(2^{-J-1} xi)
    while CHI_PLATEAU * 2.0 ** (j_max + 1) < max_radius:
        j_max += 1
    return j_max


@lru_cache(maxsize=16)
def build_filter_bank(grid: TorusGrid) -> DyadicFilterBank:
    radius = grid.k_norm
    j_max = _block_count(grid.max_wavenumber_norm)
    raw = [phi_profile(radius / 2.0**j) for j in range(j_max + 1)]
    total = np.sum(raw, axis=0)
    resolved = (radius > 0) & (total > 0)
    phi_values = tuple(
        np.divide(values, total, out=np.zeros_like(values), where=resolved) for values in raw
    )
    chi_values = (radius == 0).astype(np.float64)
    for array in phi_values + (chi_values,):
        array.setflags(write=False)
    chi_continuous = chi_profile(radius)
    chi_continuous.setflags(write=False)
    return DyadicFilterBank(
        grid=grid, chi_values=chi_values, phi_values=phi_values, j_max=j_max, chi_continuous=chi_continuous
    )


def _check_bank(field: Field, bank: DyadicFilterBank) -> None:
    grid = field.grid
    if grid != bank.grid:
        raise GridError(f"filter bank built for n={bank.grid.n_points}, field has n={grid.n_points}")


def _apply(field: Field, multiplier: np.ndarray) -> Field:
    parts = [ScalarField.from_coefficients(c.grid, c.spectral() * multiplier) for c in field_components(field)]
    if isinstance(field, VectorField2):
        return VectorField2(parts[0], parts[1])
    return parts[0]


def dyadic_block(f: Field, j: int, bank: DyadicFilterBank) -> Field:
    """Delta_j f; j = -1 is the mean, j <= -2 is zero."""
    _check_bank(f, bank)
    return _apply(f, bank.filter(j))


def low_freq_cutoff(f: Field, j: int, bank: DyadicFilterBank) -> Field:
    """S_j f, the sum of blocks with index below j."""
    _check_bank(f, bank)
    return _apply(f, low_pass_multiplier(j, bank))


def low_pass_multiplier(j: int, bank: DyadicFilterBank) -> np.ndarray:
    multiplier = np.zeros(bank.grid.shape)
    for index in range(-1, min(j, bank.j_max + 1)):
        multiplier = multiplier + bank.filter(index)
    return multiplier


def besov_block_norms(f: Field, p: float, bank: DyadicFilterBank) -> np.ndarray:
    """||Delta_j f||_{L^p} for j = -1 .. j_max, summed over vector components."""
    _check_bank(f, bank)
    return coefficient_block_norms([c.spectral() for c in field_components(f)], p, bank)


def coefficient_block_norms(coefficients: Sequence[np.ndarray], p: float, bank: DyadicFilterBank) -> np.ndarray:
    """Block norm vector from raw component coefficient arrays."""
    if p < 1:
        raise GridError(f"L^p norms need p >= 1, got {p}")
    filters = bank.stack
    measure = bank.grid.measure
    norms = np.zeros(filters.shape[0])
    for component in coefficients:
        filtered = filters * component[None, :, :]
        if p == 2:
            norms += np.sqrt(np.sum(np.abs(filtered) ** 2, axis=(1, 2)) * measure)
        else:
            values = inverse_transform(filtered)
            norms += np.array([lp_norm_values(block, p, measure) for block in values])
    return norms


def lr_sum(sequence: np.ndarray, r: float) -> float:
    sequence = np.abs(np.asarray(sequence, dtype=np.float64))
    if sequence.size == 0:
        return 0.0
    if math.isinf(r):
        return float(sequence.max())
    if r == 1:
        return float(sequence.sum())
    return float(np.sum(sequence**r) ** (1.0 / r))


def dyadic_weights(s: float, bank: DyadicFilterBank) -> np.ndarray:
    return 2.0 ** (s * bank.weights_exponents)


def besov_from_block_norms(block_norms: np.ndarray, params: BesovParams, bank: DyadicFilterBank) -> float:
    return lr_sum(dyadic_weights(params.s, bank) * block_norms, params.r)


def besov_norm(f: Field, params: BesovParams, bank: DyadicFilterBank) -> float:
    """l^r sum over j of 2^{js} ||Delta_j f||_{L^p}."""
    return besov_from_block_norms(besov_block_norms(f, params.p, bank), params, bank)


def time_lq(times: Sequence[float], samples: np.ndarray, q: float) -> np.ndarray:
    """Temporal L^q norm along axis 0, trapezoidal for finite q."""
    if q < 1:
        raise GridError(f"temporal L^q needs q >= 1, got {q}")
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape[0] == 0:
        raise GridError("empty time series")
    if math.isinf(q):
        return samples.max(axis=0)
    if samples.shape[0] == 1:
        return np.zeros(samples.shape[1:])
    integral = trapezoid(samples**q, x=np.asarray(times, dtype=np.float64), axis=0)
    return integral ** (1.0 / q)


def block_norm_history(fields: Sequence[Field], p: float, bank: DyadicFilterBank) -> np.ndarray:
    """Matrix of block norms, one row per snapshot."""
    return np.array([besov_block_norms(f, p, bank) for f in fields])


def chemin_lerner_norm(
    times: Sequence[float], fields: Sequence[Field], q: float, params: BesovParams, bank: DyadicFilterBank
) -> float:
    """Blockwise temporal L^q, then weighted l^r over blocks."""
    if len(fields) == 0:
        raise GridError("chemin_lerner_norm needs a nonempty series")
    if len(times) != len(fields):
        raise GridError("times and fields differ in length")
    history = block_norm_history(fields, params.p, bank)
    return besov_from_block_norms(time_lq(times, history, q), params, bank)


def time_lq_besov(
    times: Sequence[float], fields: Sequence[Field], q: float, params: BesovParams, bank: DyadicFilterBank
) -> float:
    """L^q in time of the Besov norm, the Minkowski counterpart of chemin_lerner_norm."""
    if len(fields) == 0:
        raise GridError("time_lq_besov needs a nonempty series")
    series = np.array([besov_norm(f, params, bank) for f in fields])
    return float(time_lq(times, series, q))


def sobolev_norm(f: Field, s: float) -> float:
    """Inhomogeneous H^s norm with weight (1 + |k|^2)^{s/2}."""
    grid = f.grid
    weight = (1.0 + grid.k_squared) ** s
    return _weighted_l2(f, weight)


def homogeneous_sobolev_norm(f: Field, s: float) -> float:
    """Homogeneous H^s norm with weight |k|^s; the mean is dropped."""
    grid = f.grid
    weight = np.zeros(grid.shape)
    nonzero = grid.k_squared > 0
    weight[nonzero] = grid.k_squared[nonzero] ** s
    return _weighted_l2(f, weight)


def _weighted_l2(f: Field, weight: np.ndarray) -> float:
    measure = f.grid.measure
    total: List[float] = []
    for component in field_components(f):
        total.append(float(np.sqrt(np.sum(weight * np.abs(component.spectral()) ** 2) * measure)))
    return float(sum(total))
