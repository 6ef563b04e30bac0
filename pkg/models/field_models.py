"""
Field value types on the periodic square [0, 2*pi)^2.

Fields are immutable. A ScalarField holds collocation values, Fourier
coefficients, or both. Coefficients use the mean normalization: the forward
transform divides by n_points**2, so the k = 0 coefficient is the spatial mean.
Axis 0 of every array runs along x1 and axis 1 along x2.
"""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterator, Optional, Tuple, Union

import numpy as np
import scipy.fft

from utils.errors import GridError
from utils.settings import fft_workers

TWO_PI = 2.0 * math.pi

Number = Union[int, float]


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def forward_transform(values: np.ndarray) -> np.ndarray:
    """Mean-normalized 2D DFT over the last two axes."""
    return scipy.fft.fft2(values, axes=(-2, -1), norm="forward", workers=fft_workers())


def inverse_transform(coefficients: np.ndarray) -> np.ndarray:
    """Inverse of forward_transform; returns the real part."""
    return scipy.fft.ifft2(coefficients, axes=(-2, -1), norm="forward", workers=fft_workers()).real


@dataclass(frozen=True)
class TorusGrid:
    """Uniform n_points x n_points collocation grid on the 2-torus."""

    n_points: int
    domain_length: float = TWO_PI

    def __post_init__(self) -> None:
        n = self.n_points
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
            raise GridError(f"n_points must be an integer, got {n!r}")
        if n < 8 or n & (n - 1):
            raise GridError(f"n_points must be a power of two >= 8, got {n}")
        if not math.isclose(self.domain_length, TWO_PI):
            raise GridError(f"domain_length is fixed at 2*pi, got {self.domain_length}")
        object.__setattr__(self, "n_points", int(n))

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.n_points, self.n_points)

    @property
    def measure(self) -> float:
        """Lebesgue measure of the torus, (2*pi)^2."""
        return self.domain_length**2

    @property
    def spacing(self) -> float:
        return self.domain_length / self.n_points

    @cached_property
    def wavenumbers_1d(self) -> np.ndarray:
        n = self.n_points
        return _frozen(np.rint(scipy.fft.fftfreq(n, d=1.0 / n)).astype(np.int64))

    @cached_property
    def k1(self) -> np.ndarray:
        return _frozen(np.broadcast_to(self.wavenumbers_1d[:, None], self.shape).copy())

    @cached_property
    def k2(self) -> np.ndarray:
        return _frozen(np.broadcast_to(self.wavenumbers_1d[None, :], self.shape).copy())

    @cached_property
    def k_squared(self) -> np.ndarray:
        return _frozen((self.k1**2 + self.k2**2).astype(np.float64))

    @cached_property
    def k_norm(self) -> np.ndarray:
        return _frozen(np.sqrt(self.k_squared))

    @cached_property
    def derivative_wavenumbers(self) -> np.ndarray:
        """(k1, k2) with the Nyquist entry of each axis set to zero, shape (2, n, n)."""
        nyquist = -self.n_points // 2
        k1 = np.where(self.k1 == nyquist, 0, self.k1).astype(np.float64)
        k2 = np.where(self.k2 == nyquist, 0, self.k2).astype(np.float64)
        return _frozen(np.stack([k1, k2]))

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True on retained modes, max(|k1|, |k2|) <= n_points / 3."""
        cutoff = self.n_points / 3.0
        return _frozen((np.abs(self.k1) <= cutoff) & (np.abs(self.k2) <= cutoff))

    @property
    def dealias_cutoff(self) -> float:
        return self.n_points / 3.0

    @cached_property
    def max_wavenumber_norm(self) -> float:
        return float(self.k_norm.max())

    @cached_property
    def coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.n_points) * self.spacing
        x1, x2 = np.meshgrid(x, x, indexing="ij")
        return _frozen(x1), _frozen(x2)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real scalar field; at least one of values / coefficients is present."""

    grid: TorusGrid
    values: Optional[np.ndarray] = None
    coefficients: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.values is None and self.coefficients is None:
            raise GridError("a ScalarField needs values or coefficients")
        for name in ("values", "coefficients"):
            array = getattr(self, name)
            if array is None:
                continue
            if array.shape != self.grid.shape:
                raise GridError(f"{name} shape {array.shape} does not match grid {self.grid.shape}")
            dtype = np.float64 if name == "values" else np.complex128
            object.__setattr__(self, name, _frozen(np.array(array, dtype=dtype, copy=True)))

    @classmethod
    def from_values(cls, grid: TorusGrid, values: np.ndarray) -> "ScalarField":
        return cls(grid, values=np.asarray(values))

    @classmethod
    def from_coefficients(cls, grid: TorusGrid, coefficients: np.ndarray) -> "ScalarField":
        return cls(grid, coefficients=np.asarray(coefficients))

    @classmethod
    def from_function(cls, grid: TorusGrid, func: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "ScalarField":
        x1, x2 = grid.coordinates
        return cls(grid, values=np.broadcast_to(func(x1, x2), grid.shape))

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "ScalarField":
        return cls(grid, values=np.zeros(grid.shape), coefficients=np.zeros(grid.shape, dtype=np.complex128))

    @classmethod
    def constant(cls, grid: TorusGrid, value: float) -> "ScalarField":
        coefficients = np.zeros(grid.shape, dtype=np.complex128)
        coefficients[0, 0] = value
        return cls(grid, values=np.full(grid.shape, float(value)), coefficients=coefficients)

    @property
    def has_values(self) -> bool:
        return self.values is not None

    @property
    def has_coefficients(self) -> bool:
        return self.coefficients is not None

    def spectral(self) -> np.ndarray:
        if self.coefficients is not None:
            return self.coefficients
        return forward_transform(self.values)

    def physical(self) -> np.ndarray:
        if self.values is not None:
            return self.values
        return inverse_transform(self.coefficients)

    def _combine(self, other: "ScalarField", op: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "ScalarField":
        if other.grid != self.grid:
            raise GridError("fields live on different grids")
        coefficients = None
        values = None
        if self.has_coefficients and other.has_coefficients:
            coefficients = op(self.coefficients, other.coefficients)
        if self.has_values and other.has_values:
            values = op(self.values, other.values)
        if coefficients is None and values is None:
            coefficients = op(self.spectral(), other.spectral())
        return ScalarField(self.grid, values=values, coefficients=coefficients)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return self._combine(other, np.add)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return self._combine(other, np.subtract)

    def __mul__(self, scalar: Number) -> "ScalarField":
        return ScalarField(
            self.grid,
            values=None if self.values is None else self.values * scalar,
            coefficients=None if self.coefficients is None else self.coefficients * scalar,
        )

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return self * -1.0


@dataclass(frozen=True, eq=False)
class VectorField2:
    """Planar vector field (x_component, y_component) on one grid."""

    x_component: ScalarField
    y_component: ScalarField

    def __post_init__(self) -> None:
        if self.x_component.grid != self.y_component.grid:
            raise GridError("vector components live on different grids")

    @property
    def grid(self) -> TorusGrid:
        return self.x_component.grid

    @property
    def components(self) -> Tuple[ScalarField, ScalarField]:
        return (self.x_component, self.y_component)

    def __iter__(self) -> Iterator[ScalarField]:
        return iter(self.components)

    @classmethod
    def from_values(cls, grid: TorusGrid, vx: np.ndarray, vy: np.ndarray) -> "VectorField2":
        return cls(ScalarField.from_values(grid, vx), ScalarField.from_values(grid, vy))

    @classmethod
    def from_coefficients(cls, grid: TorusGrid, stack: np.ndarray) -> "VectorField2":
        return cls(ScalarField.from_coefficients(grid, stack[0]), ScalarField.from_coefficients(grid, stack[1]))

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "VectorField2":
        return cls(ScalarField.zeros(grid), ScalarField.zeros(grid))

    def spectral(self) -> np.ndarray:
        """Coefficients stacked as shape (2, n, n)."""
        return np.stack([c.spectral() for c in self.components])

    def physical(self) -> np.ndarray:
        """Values stacked as shape (2, n, n)."""
        return np.stack([c.physical() for c in self.components])

    def __add__(self, other: "VectorField2") -> "VectorField2":
        return VectorField2(self.x_component + other.x_component, self.y_component + other.y_component)

    def __sub__(self, other: "VectorField2") -> "VectorField2":
        return VectorField2(self.x_component - other.x_component, self.y_component - other.y_component)

    def __mul__(self, scalar: Number) -> "VectorField2":
        return VectorField2(self.x_component * scalar, self.y_component * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "VectorField2":
        return self * -1.0


Field = Union[ScalarField, VectorField2]


def field_components(field: Field) -> Tuple[ScalarField, ...]:
    """Scalar components of a scalar or vector field."""
    if isinstance(field, VectorField2):
        return field.components
    return (field,)


def field_stack(field: Field) -> np.ndarray:
    """Coefficients of any field as shape (m, n, n)."""
    return np.stack([c.spectral() for c in field_components(field)])


def field_from_stack(grid: TorusGrid, stack: np.ndarray) -> Field:
    """Inverse of field_stack: one component gives a ScalarField, two a VectorField2."""
    if stack.shape[0] == 1:
        return ScalarField.from_coefficients(grid, stack[0])
    if stack.shape[0] == 2:
        return VectorField2.from_coefficients(grid, stack)
    raise GridError(f"cannot build a field from {stack.shape[0]} components")


@dataclass(frozen=True, eq=False)
class MHDState:
    """Velocity u and magnetic field b at time t."""

    u: VectorField2
    b: VectorField2
    t: float = 0.0

    def __post_init__(self) -> None:
        if self.u.grid != self.b.grid:
            raise GridError("u and b live on different grids")

    @property
    def grid(self) -> TorusGrid:
        return self.u.grid

    def to_stack(self) -> np.ndarray:
        """Coefficients of (u1, u2, b1, b2), shape (4, n, n)."""
        return np.concatenate([self.u.spectral(), self.b.spectral()])

    @classmethod
    def from_stack(cls, grid: TorusGrid, stack: np.ndarray, t: float = 0.0) -> "MHDState":
        return cls(VectorField2.from_coefficients(grid, stack[:2]), VectorField2.from_coefficients(grid, stack[2:]), t)

    @classmethod
    def zeros(cls, grid: TorusGrid, t: float = 0.0) -> "MHDState":
        return cls(VectorField2.zeros(grid), VectorField2.zeros(grid), t)
