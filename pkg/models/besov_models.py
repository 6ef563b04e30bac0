import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from models.field_models import TorusGrid

SPATIAL_DIMENSION = 2


class BesovParams(BaseModel):
    """Indices (s, p, r) of B^s_{p,r}; p and r accept float('inf')."""

    model_config = ConfigDict(frozen=True)

    s: float = Field(..., description="Regularity index")
    p: float = Field(default=2.0, ge=1.0, description="Integrability index, inf allowed")
    r: float = Field(default=1.0, ge=1.0, description="Summability index, inf allowed")

    def with_s(self, s: float) -> "BesovParams":
        return self.model_copy(update={"s": s})

    @property
    def critical_index(self) -> float:
        return critical_index(self.p)


def critical_index(p: float) -> float:
    """d/p for d = 2, with d/inf = 0."""
    return 0.0 if math.isinf(p) else SPATIAL_DIMENSION / p


@dataclass(frozen=True, eq=False)
class DyadicFilterBank:
    """
    Littlewood-Paley filters sampled on a grid's wavenumbers.

    chi_values is the periodic low-pass, the indicator of k = 0, so that the
    j = -1 block is the spatial mean. phi_values[j] is the annulus filter at
    scale 2^j, renormalized so that chi + sum_j phi = 1 on the lattice.
    chi_continuous keeps the raw radial chi sampled at |k| for reference.
    """

    grid: TorusGrid
    chi_values: np.ndarray
    phi_values: Tuple[np.ndarray, ...]
    j_max: int
    chi_continuous: np.ndarray

    @property
    def block_indices(self) -> range:
        return range(-1, self.j_max + 1)

    @property
    def stack(self) -> np.ndarray:
        """All filters as shape (j_max + 2, n, n), row 0 being j = -1."""
        return np.stack((self.chi_values,) + self.phi_values)

    @property
    def weights_exponents(self) -> np.ndarray:
        return np.arange(-1, self.j_max + 1, dtype=np.float64)

    def filter(self, j: int) -> np.ndarray:
        if j == -1:
            return self.chi_values
        if 0 <= j <= self.j_max:
            return self.phi_values[j]
        return np.zeros(self.grid.shape)
