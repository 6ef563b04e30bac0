"""
On-disk artifacts: field snapshots, the trajectory index and CSV reports.

Snapshot file:
    BMHD1 <n_points> <scalar|vector>\n
    followed by row-major little-endian float64 collocation values, vector
    components concatenated x then y.

Trajectory index: one "<t repr> <file name>" line per snapshot file.
"""

import csv
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from models.field_models import Field, MHDState, ScalarField, TorusGrid, VectorField2, field_components
from models.report_models import ReportModels
from models.run_models import CSV_COLUMNS, DiagnosticsRecord, StabilityExperiment
from utils.errors import GridError, SnapshotFormatError

logger = logging.getLogger(__name__)

MAGIC = "BMHD1"
INDEX_FILE = "trajectory.idx"
FIELD_KINDS = ("scalar", "vector")
PICARD_COLUMNS = ("n", "d_n", "ratio", "h1_sup", "b_sup", "b_a_t")
LIFESPAN_COLUMNS = ("E0", "a", "C", "j0", "T0", "T1", "T2", "T", "branch")
STABILITY_COLUMNS = (
    "delta", "delta_weak", "norm_strong", "norm_weak", "ratio_strong", "ratio_weak", "a_proxy", "partial",
)


def _format(value: Optional[float]) -> str:
    if value is None:
        return ""
    return "%.17g" % value


class SnapshotManager:
    """Reads and writes snapshot files and the trajectory index in one directory."""

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)

    @property
    def index_path(self) -> Path:
        return self.directory / INDEX_FILE

    # Write one field as a BMHD1 file
    def write_field(self, field: Field, name: str) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        kind = "vector" if isinstance(field, VectorField2) else "scalar"
        header = f"{MAGIC} {field.grid.n_points} {kind}\n".encode("ascii")
        payload = np.concatenate([c.physical().ravel() for c in field_components(field)]).astype("<f8")
        path = self.directory / name
        with open(path, "wb") as handle:
            handle.write(header)
            handle.write(payload.tobytes())
        return path

    def read_field(self, path: Union[str, Path], grid: Optional[TorusGrid] = None) -> Field:
        path = Path(path)
        with open(path, "rb") as handle:
            header = handle.readline().decode("ascii", errors="replace").split()
            payload = handle.read()

        if len(header) != 3 or header[0] != MAGIC:
            raise SnapshotFormatError(f"{path} does not start with a {MAGIC} header")
        try:
            n_points = int(header[1])
        except ValueError as exc:
            raise SnapshotFormatError(f"{path} has a non-integer resolution {header[1]!r}") from exc
        kind = header[2]
        if kind not in FIELD_KINDS:
            raise SnapshotFormatError(f"{path} has unknown field kind {kind!r}")
        if grid is None:
            grid = TorusGrid(n_points)
        elif grid.n_points != n_points:
            raise GridError(f"{path} holds n={n_points}, expected n={grid.n_points}")

        components = 2 if kind == "vector" else 1
        expected = components * n_points * n_points * 8
        if len(payload) != expected:
            raise SnapshotFormatError(f"{path} holds {len(payload)} bytes of data, expected {expected}")
        values = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(components, n_points, n_points)
        if kind == "vector":
            return VectorField2.from_values(grid, values[0], values[1])
        return ScalarField.from_values(grid, values[0])

    def save_trajectory(self, trajectory: Sequence[MHDState]) -> Path:
        """Write u and b of every state and an index with two lines per state."""
        lines: List[str] = []
        for i, state in enumerate(trajectory):
            for label, field in (("u", state.u), ("b", state.b)):
                name = f"{label}_{i:06d}.bmhd"
                self.write_field(field, name)
                lines.append(f"{state.t!r} {name}")
        self.directory.mkdir(parents=True, exist_ok=True)
        self.index_path.write_text("\n".join(lines) + "\n", encoding="ascii")
        logger.info(f"wrote {len(trajectory)} snapshots to {self.directory}")
        return self.index_path

    def read_index(self, index_path: Optional[Union[str, Path]] = None) -> List[Tuple[float, str]]:
        path = Path(index_path) if index_path is not None else self.index_path
        entries: List[Tuple[float, str]] = []
        for number, line in enumerate(path.read_text(encoding="ascii").splitlines(), start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 2:
                raise SnapshotFormatError(f"{path}:{number} is not '<t> <file>'")
            try:
                entries.append((float(parts[0]), parts[1]))
            except ValueError as exc:
                raise SnapshotFormatError(f"{path}:{number} has a bad time {parts[0]!r}") from exc
        return entries

    def load_trajectory(self, grid: Optional[TorusGrid] = None) -> List[MHDState]:
        """States in index order, pairing u_* and b_* files that share an index suffix."""
        pending: Dict[str, Tuple[float, Dict[str, Field]]] = {}
        order: List[str] = []
        for t, name in self.read_index():
            label, _, suffix = name.partition("_")
            if label not in ("u", "b") or not suffix:
                raise SnapshotFormatError(f"index entry {name!r} is neither a u_ nor a b_ snapshot")
            if suffix not in pending:
                pending[suffix] = (t, {})
                order.append(suffix)
            pending[suffix][1][label] = self.read_field(self.directory / name, grid)

        states: List[MHDState] = []
        for suffix in order:
            t, fields = pending[suffix]
            if set(fields) != {"u", "b"}:
                raise SnapshotFormatError(f"snapshot {suffix} lacks one of u, b")
            if not isinstance(fields["u"], VectorField2) or not isinstance(fields["b"], VectorField2):
                raise SnapshotFormatError(f"snapshot {suffix} is not a vector field pair")
            states.append(MHDState(fields["u"], fields["b"], t))
        return states

    def load_final_state(self, grid: Optional[TorusGrid] = None) -> MHDState:
        states = self.load_trajectory(grid)
        if not states:
            raise SnapshotFormatError(f"{self.index_path} lists no snapshots")
        return states[-1]


class DiagnosticsCsvWriter:
    """CSV and key: value report emission into an output directory."""

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)

    def _open(self, name: str):
        self.directory.mkdir(parents=True, exist_ok=True)
        return open(self.directory / name, "w", newline="", encoding="utf-8")

    def write_diagnostics(self, record: DiagnosticsRecord, name: str = "diagnostics.csv") -> Path:
        with self._open(name) as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in record.rows():
                writer.writerow([_format(value) for value in row])
        return self.directory / name

    def read_diagnostics(self, name: str = "diagnostics.csv", p: float = 2.0) -> DiagnosticsRecord:
        path = self.directory / name
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header is None or tuple(header) != CSV_COLUMNS:
                raise SnapshotFormatError(f"{path} does not carry the diagnostics header")
            rows = [[float(value) for value in row] for row in reader if row]
        return DiagnosticsRecord.from_rows(rows, p)

    def write_picard(self, report: ReportModels.PicardConvergenceReport, name: str = "picard.csv") -> Path:
        with self._open(name) as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(PICARD_COLUMNS)
            for n in range(len(report.h1_sup)):
                d_n = report.differences[n] if n < len(report.differences) else None
                ratio = report.ratios[n] if n < len(report.ratios) else None
                writer.writerow([
                    n, _format(d_n), _format(ratio),
                    _format(report.h1_sup[n]), _format(report.b_sup[n]), _format(report.b_a_t[n]),
                ])
        return self.directory / name

    def write_lifespan(self, report: ReportModels.LifespanReport, name: str = "lifespan.csv") -> Path:
        with self._open(name) as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(LIFESPAN_COLUMNS)
            writer.writerow(report.csv_row())
        return self.directory / name

    def write_stability(self, experiments: Iterable[StabilityExperiment], name: str = "stability.csv") -> Path:
        with self._open(name) as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(STABILITY_COLUMNS)
            for experiment in experiments:
                writer.writerow([
                    _format(experiment.delta), _format(experiment.delta_weak),
                    _format(experiment.norm_strong), _format(experiment.norm_weak),
                    _format(experiment.ratio_strong), _format(experiment.ratio_weak),
                    _format(experiment.a_proxy), str(experiment.partial).lower(),
                ])
        return self.directory / name

    def write_report(self, values: Mapping[str, object], name: str) -> Path:
        """Plain text report, one 'key: value' line per entry."""
        lines = []
        for key, value in values.items():
            if value is None:
                value = "none"
            elif isinstance(value, float):
                value = _format(value)
            lines.append(f"{key}: {value}")
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.directory / name
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path
