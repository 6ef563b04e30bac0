"""
Containers for time-dependent results: linear propagator runs, nonlinear
trajectories with their diagnostics, Picard iterates and stability experiments.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from models.field_models import Field, MHDState

CSV_COLUMNS: Tuple[str, ...] = (
    "t",
    "energy",
    "b_l2",
    "b_linf",
    "w_linf",
    "w_b0inf1",
    "b_b0inf1",
    "run_b_b2inf1",
    "grad_b_l2_sq_int",
    "besov_u",
    "besov_b",
    "cfl",
)


@dataclass(frozen=True)
class PropagatorRun:
    """Snapshots of a linear solve at every step, t_k = k * dt."""

    times: np.ndarray
    snapshots: List[Field]
    dt: float
    t_final: float
    forcing_description: str = "none"
    forcing: Optional[Callable[[float], Field]] = None

    @property
    def initial(self) -> Field:
        return self.snapshots[0]

    @property
    def final(self) -> Field:
        return self.snapshots[-1]


@dataclass(frozen=True)
class DiagnosticsRecord:
    """
    One row per recorded time; `columns` follows the CSV schema.

    b_mean holds the spatial mean of (b1, b2) per row, div_u and div_b the
    relative divergence residuals. None of these three are written to CSV.
    """

    columns: Dict[str, np.ndarray]
    p: float
    b_mean: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    div_u: np.ndarray = field(default_factory=lambda: np.zeros(0))
    div_b: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __len__(self) -> int:
        return int(self.columns["t"].shape[0])

    def column(self, name: str) -> np.ndarray:
        return self.columns[name]

    @property
    def times(self) -> np.ndarray:
        return self.columns["t"]

    def rows(self) -> List[Tuple[float, ...]]:
        return [tuple(float(self.columns[name][i]) for name in CSV_COLUMNS) for i in range(len(self))]

    def bootstrap_quantity(self) -> np.ndarray:
        """Running sup of ||b||_{B^0_{inf,1}} plus the running B^2_{inf,1} integral."""
        return np.maximum.accumulate(self.columns["b_b0inf1"]) + self.columns["run_b_b2inf1"]

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]], p: float) -> "DiagnosticsRecord":
        data = np.asarray(rows, dtype=np.float64).reshape(-1, len(CSV_COLUMNS))
        return cls(columns={name: data[:, i].copy() for i, name in enumerate(CSV_COLUMNS)}, p=p)


@dataclass(frozen=True)
class SimulationResult:
    """Recorded states and diagnostics of one nonlinear run."""

    trajectory: List[MHDState]
    record: DiagnosticsRecord
    dt: float
    t_final: float
    terminated_early: bool = False
    termination_time: Optional[float] = None
    message: str = ""

    @property
    def final_state(self) -> MHDState:
        return self.trajectory[-1]

    @property
    def times(self) -> np.ndarray:
        return np.array([state.t for state in self.trajectory])


@dataclass(frozen=True)
class PicardIterates:
    """iterates[n] is the trajectory of the n-th approximation on `times`."""

    times: np.ndarray
    iterates: List[List[MHDState]]
    truncation_levels: List[Optional[int]]
    dt: float
    lifespan: Optional[float] = None

    def __len__(self) -> int:
        return len(self.iterates)


@dataclass(frozen=True)
class StabilityExperiment:
    """Two trajectories from nearby data and the measured difference norms."""

    base: SimulationResult
    perturbed: SimulationResult
    delta: float
    delta_weak: float
    times: np.ndarray
    du_strong: np.ndarray
    db_strong: np.ndarray
    db_strong_dissipative: np.ndarray
    du_weak: np.ndarray
    db_weak: np.ndarray
    db_weak_dissipative: np.ndarray
    norm_strong: float
    norm_weak: float
    ratio_strong: Optional[float]
    ratio_weak: Optional[float]
    a_proxy: float
    partial: bool = False
