from pathlib import Path
from typing import Any, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [item.strip() for item in value.replace(";", ",").split(",") if item.strip()]
    return value


class ExperimentModels():

    class InitialDataSpec(BaseModel):
        """Which initial state to build and how large it is"""
        model_config = ConfigDict(extra="forbid")

        kind: Literal["remark15", "random-solenoidal", "single-mode", "file"] = Field(
            default="remark15", description="Initial data family"
        )
        n: int = Field(default=4, ge=1, description="Mode number of the remark15 and single-mode families")
        scale: float = Field(default=1.0, ge=0.0, description="Amplitude, or velocity size for random data")
        magnetic_scale: Optional[float] = Field(default=None, ge=0.0, description="Magnetic amplitude, else scale")
        band: Tuple[int, int] = Field(default=(1, 4), description="Inclusive |k| band of random-solenoidal data")
        seed: Optional[int] = Field(default=None, description="Overrides the run seed for random data")
        path: Optional[Path] = Field(default=None, description="Trajectory index or snapshot directory for kind=file")

        @field_validator("band", mode="before")
        @classmethod
        def _parse_band(cls, value: Any) -> Any:
            return _split_list(value)

        @model_validator(mode="after")
        def _check(self) -> "ExperimentModels.InitialDataSpec":
            low, high = self.band
            if low < 1 or high < low:
                raise ValueError(f"band must satisfy 1 <= low <= high, got {self.band}")
            if self.kind == "file" and self.path is None:
                raise ValueError("kind=file needs a path")
            return self

        @property
        def magnetic_amplitude(self) -> float:
            return self.scale if self.magnetic_scale is None else self.magnetic_scale

    class ExperimentConfig(BaseModel):
        """Everything one command invocation needs"""
        model_config = ConfigDict(extra="forbid")

        resolution: int = Field(default=64, description="Grid points per axis, a power of two")
        dt: float = Field(default=1e-3, gt=0.0, description="Time step")
        t_max: float = Field(default=1.0, ge=0.0, description="Final time")
        record_every: int = Field(default=1, ge=1, description="Steps between recorded diagnostics rows")
        p: float = Field(default=2.0, ge=1.0, description="Integrability index of the Besov norms")
        s: float = Field(default=4.0, description="Sobolev index of the L^2 smallness condition")
        seed: int = Field(default=0, description="Seed for random initial data")
        constant_C: float = Field(default=10.0, gt=0.0, description="Constant of the lifespan formulas")
        output_dir: Path = Field(default=Path("output"), description="Directory for CSV, snapshots and reports")
        initial_data: "ExperimentModels.InitialDataSpec" = Field(
            default_factory=lambda: ExperimentModels.InitialDataSpec()
        )

        # command-specific options
        picard_iterations: int = Field(default=6, ge=0, description="Highest Picard iterate")
        picard_horizon: Optional[float] = Field(default=None, gt=0.0, description="Picard horizon, else the lifespan")
        deltas: List[float] = Field(default_factory=lambda: [1e-2, 5e-3, 2.5e-3], description="Perturbation sizes")
        perturbation_seed: int = Field(default=1, description="Seed of the perturbation direction")
        decay_window: Tuple[float, float] = Field(default=(1.0, float("inf")), description="Decay fit window")
        bootstrap_threshold: float = Field(default=4.0, gt=0.0)
        epsilon: float = Field(default=0.05, gt=0.0, description="Smallness threshold for the Besov data size")
        parallel: bool = Field(default=False, description="Run independent sweep members in threads")
        save_snapshots: bool = Field(default=True)

        @field_validator("deltas", "decay_window", mode="before")
        @classmethod
        def _parse_lists(cls, value: Any) -> Any:
            return _split_list(value)

        @field_validator("resolution")
        @classmethod
        def _power_of_two(cls, value: int) -> int:
            if value < 8 or value & (value - 1):
                raise ValueError(f"resolution must be a power of two >= 8, got {value}")
            return value

        @field_validator("deltas")
        @classmethod
        def _positive_deltas(cls, value: List[float]) -> List[float]:
            if not value or any(d <= 0 for d in value):
                raise ValueError(f"deltas must be a nonempty list of positive sizes, got {value}")
            return value

        @model_validator(mode="after")
        def _window(self) -> "ExperimentModels.ExperimentConfig":
            start, end = self.decay_window
            if not start < end:
                raise ValueError(f"decay_window must have start < end, got {self.decay_window}")
            return self


ExperimentModels.ExperimentConfig.model_rebuild()
