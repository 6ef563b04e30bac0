"""
Spectral substrate: transforms, derivatives, Leray projection, curl, L^p norms
and 2/3-rule dealiasing on the 2-torus.

Two layers live here. SpectralKernel works on raw coefficient stacks of shape
(m, n, n) and is what the time steppers use. The module-level functions take
and return field objects.
"""

import logging
import math
from functools import lru_cache
from typing import Union

import numpy as np

from models.field_models import (
    Field,
    ScalarField,
    TorusGrid,
    VectorField2,
    field_components,
    forward_transform,
    inverse_transform,
)
from utils.errors import GridError

logger = logging.getLogger(__name__)

Real = Union[int, float]


class SpectralKernel:
    """Array-level spectral operators bound to one grid."""

    def __init__(self, grid: TorusGrid):
        self.grid = grid
        wavenumbers = grid.derivative_wavenumbers
        self.ik = 1j * wavenumbers
        self.wavenumbers = wavenumbers
        self.mask = grid.dealias_mask
        self.k_squared = grid.k_squared
        projected_k_squared = wavenumbers[0] ** 2 + wavenumbers[1] ** 2
        self.inverse_k_squared = np.divide(
            1.0, projected_k_squared, out=np.zeros_like(projected_k_squared), where=projected_k_squared > 0
        )

    def to_spectral(self, values: np.ndarray) -> np.ndarray:
        return forward_transform(values)

    def to_physical(self, coefficients: np.ndarray) -> np.ndarray:
        return inverse_transform(coefficients)

    def gradient(self, coefficients: np.ndarray) -> np.ndarray:
        """(m, n, n) -> (m, 2, n, n); entry [i, j] is the coefficient of d_j f_i."""
        return self.ik[None, :, :, :] * coefficients[:, None, :, :]

    def divergence(self, coefficients: np.ndarray) -> np.ndarray:
        return self.ik[0] * coefficients[0] + self.ik[1] * coefficients[1]

    def curl(self, coefficients: np.ndarray) -> np.ndarray:
        return self.ik[0] * coefficients[1] - self.ik[1] * coefficients[0]

    def gradient_part(self, coefficients: np.ndarray) -> np.ndarray:
        """Per-mode k (k . v) / |k|^2; the k = 0 mode maps to zero."""
        k_dot_v = self.wavenumbers[0] * coefficients[0] + self.wavenumbers[1] * coefficients[1]
        return self.wavenumbers * (k_dot_v * self.inverse_k_squared)[None, :, :]

    def leray(self, coefficients: np.ndarray) -> np.ndarray:
        return coefficients - self.gradient_part(coefficients)

    def dealias(self, coefficients: np.ndarray) -> np.ndarray:
        return coefficients * self.mask

    def heat_factor(self, t: float) -> np.ndarray:
        return np.exp(-self.k_squared * t)

    def advect(self, velocity_values: np.ndarray, coefficients: np.ndarray) -> np.ndarray:
        """Dealiased coefficients of (v . grad) f for each component of f."""
        gradient_values = self.to_physical(self.gradient(self.dealias(coefficients)))
        product = np.einsum("jxy,mjxy->mxy", velocity_values, gradient_values)
        return self.dealias(self.to_spectral(product))

    def stack_norm(self, coefficients: np.ndarray) -> float:
        """Coefficient l^2 norm, sqrt(sum |c|^2)."""
        return float(np.sqrt(np.sum(np.abs(coefficients) ** 2)))


@lru_cache(maxsize=16)
def kernel_for(grid: TorusGrid) -> SpectralKernel:
    return SpectralKernel(grid)


def transform_forward(f: ScalarField) -> ScalarField:
    if f.values is None:
        raise GridError("transform_forward needs collocation values")
    return ScalarField(f.grid, values=f.values, coefficients=forward_transform(f.values))


def transform_inverse(f: ScalarField) -> ScalarField:
    if f.coefficients is None:
        raise GridError("transform_inverse needs coefficients")
    return ScalarField(f.grid, values=inverse_transform(f.coefficients), coefficients=f.coefficients)


def derivative(f: ScalarField, axis: int) -> ScalarField:
    """Spectral d/dx_axis with axis in {1, 2}; Nyquist modes are zeroed."""
    if axis not in (1, 2):
        raise GridError(f"axis must be 1 or 2, got {axis}")
    kernel = kernel_for(f.grid)
    return ScalarField.from_coefficients(f.grid, kernel.ik[axis - 1] * f.spectral())


def gradient(f: ScalarField) -> VectorField2:
    return VectorField2(derivative(f, 1), derivative(f, 2))


def divergence(v: VectorField2) -> ScalarField:
    return ScalarField.from_coefficients(v.grid, kernel_for(v.grid).divergence(v.spectral()))


def laplacian(f: ScalarField) -> ScalarField:
    return ScalarField.from_coefficients(f.grid, -f.grid.k_squared * f.spectral())


def leray_project(v: VectorField2) -> VectorField2:
    """v - grad (-Delta)^{-1} div v, per mode; the mean passes through."""
    return VectorField2.from_coefficients(v.grid, kernel_for(v.grid).leray(v.spectral()))


def curl2d(v: VectorField2) -> ScalarField:
    """Scalar curl d1 v2 - d2 v1."""
    return ScalarField.from_coefficients(v.grid, kernel_for(v.grid).curl(v.spectral()))


def dealias(f: ScalarField) -> ScalarField:
    return ScalarField.from_coefficients(f.grid, f.spectral() * f.grid.dealias_mask)


def dealiased_product(f: ScalarField, g: ScalarField) -> ScalarField:
    """Collocation product of the dealiased factors, dealiased again."""
    if f.grid != g.grid:
        raise GridError("fields live on different grids")
    mask = f.grid.dealias_mask
    product = inverse_transform(f.spectral() * mask) * inverse_transform(g.spectral() * mask)
    return ScalarField.from_coefficients(f.grid, forward_transform(product) * mask)


def divergence_residual(v: VectorField2) -> float:
    """Spectral l^2 norm of div v relative to the l^2 norm of v (0 for v = 0)."""
    kernel = kernel_for(v.grid)
    coefficients = v.spectral()
    scale = kernel.stack_norm(coefficients)
    if scale == 0.0:
        return 0.0
    return kernel.stack_norm(kernel.divergence(coefficients)) / scale


def mean_value(f: ScalarField) -> float:
    return float(f.spectral()[0, 0].real)


def lp_norm_values(values: np.ndarray, p: Real, measure: float) -> float:
    """L^p norm of collocation values with quadrature weight measure / N."""
    if p < 1:
        raise GridError(f"L^p norms need p >= 1, got {p}")
    magnitude = np.abs(values)
    if math.isinf(p):
        return float(magnitude.max()) if magnitude.size else 0.0
    if p == 2:
        return float(np.sqrt(np.mean(magnitude**2) * measure))
    if p == 1:
        return float(np.mean(magnitude) * measure)
    return float((np.mean(magnitude**p) * measure) ** (1.0 / p))


def lp_norm(f: Field, p: Real) -> float:
    """L^p norm over the torus; vector fields sum their component norms."""
    total = 0.0
    for component in field_components(f):
        total += lp_norm_values(component.physical(), p, component.grid.measure)
    return total


def l2_norm_spectral(coefficients: np.ndarray, measure: float) -> float:
    """Parseval form of the L^2 norm for mean-normalized coefficients."""
    return float(np.sqrt(np.sum(np.abs(coefficients) ** 2) * measure))
