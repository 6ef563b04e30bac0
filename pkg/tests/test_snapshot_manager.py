import csv
from types import SimpleNamespace

import numpy as np
import pytest

from models.field_models import MHDState, ScalarField, TorusGrid
from models.report_models import ReportModels
from models.run_models import CSV_COLUMNS, DiagnosticsRecord
from storage.snapshot_manager import INDEX_FILE, DiagnosticsCsvWriter, SnapshotManager
from utils.errors import GridError, SnapshotFormatError


@pytest.fixture
def manager(tmp_path):
    return SnapshotManager(tmp_path / "snapshots")


class TestFieldFiles:
    """BMHD1 snapshot files"""

    def test_vector_field_is_stored_bit_exact(self, manager, small_state):
        path = manager.write_field(small_state.u, "u.bmhd")
        assert path.read_bytes().startswith(b"BMHD1 32 vector\n")
        assert path.stat().st_size == len(b"BMHD1 32 vector\n") + 2 * 32 * 32 * 8
        loaded = manager.read_field(path)
        assert np.array_equal(loaded.physical(), small_state.u.physical())

    def test_scalar_field(self, manager, grid):
        f = ScalarField.from_function(grid, lambda x1, x2: np.cos(x1) * np.sin(3.0 * x2))
        loaded = manager.read_field(manager.write_field(f, "f.bmhd"), grid)
        assert isinstance(loaded, ScalarField)
        assert np.array_equal(loaded.physical(), f.physical())

    def test_expected_grid_must_match(self, manager, grid):
        path = manager.write_field(ScalarField.zeros(grid), "f.bmhd")
        with pytest.raises(GridError, match="holds n=32"):
            manager.read_field(path, TorusGrid(16))

    @pytest.mark.parametrize(
        "content, message",
        [
            (b"NOPE 32 scalar\n", "header"),
            (b"BMHD1 3x2 scalar\n", "non-integer"),
            (b"BMHD1 8 tensor\n", "unknown field kind"),
            (b"BMHD1 8 scalar\n" + b"\x00" * 16, "bytes of data"),
        ],
    )
    def test_malformed_files(self, tmp_path, manager, content, message):
        path = tmp_path / "bad.bmhd"
        path.write_bytes(content)
        with pytest.raises(SnapshotFormatError, match=message):
            manager.read_field(path)


class TestTrajectories:
    """Trajectory index and state pairing"""

    def test_save_and_load(self, manager, small_state, magnetic_shear):
        later = MHDState(magnetic_shear.u, magnetic_shear.b, t=0.1 + 0.2)
        index = manager.save_trajectory([small_state, later])
        assert index.name == INDEX_FILE
        lines = index.read_text().splitlines()
        assert lines == ["0.0 u_000000.bmhd", "0.0 b_000000.bmhd", "0.30000000000000004 u_000001.bmhd",
                         "0.30000000000000004 b_000001.bmhd"]
        states = manager.load_trajectory()
        assert [s.t for s in states] == [0.0, 0.1 + 0.2]
        assert np.array_equal(states[1].b.physical(), magnetic_shear.b.physical())
        assert manager.load_final_state().t == 0.1 + 0.2

    def test_bad_index_line(self, manager):
        manager.directory.mkdir(parents=True)
        manager.index_path.write_text("0.0 u_000000.bmhd extra\n")
        with pytest.raises(SnapshotFormatError, match="is not"):
            manager.read_index()
        manager.index_path.write_text("zero u_000000.bmhd\n")
        with pytest.raises(SnapshotFormatError, match="bad time"):
            manager.read_index()

    def test_unpaired_snapshot(self, manager, small_state):
        manager.write_field(small_state.u, "u_000000.bmhd")
        manager.index_path.write_text("0.0 u_000000.bmhd\n")
        with pytest.raises(SnapshotFormatError, match="lacks one of u, b"):
            manager.load_trajectory()

    def test_foreign_entry(self, manager):
        manager.directory.mkdir(parents=True)
        manager.index_path.write_text("0.0 w_000000.bmhd\n")
        with pytest.raises(SnapshotFormatError, match="neither"):
            manager.load_trajectory()

    def test_empty_index(self, manager):
        manager.directory.mkdir(parents=True)
        manager.index_path.write_text("\n")
        with pytest.raises(SnapshotFormatError, match="lists no snapshots"):
            manager.load_final_state()


class TestCsvReports:
    """Diagnostics, Picard, lifespan, stability and key/value reports"""

    def test_diagnostics_are_exact(self, tmp_path):
        rows = [[0.1 * i + 1.0 / 3.0 for _ in CSV_COLUMNS] for i in range(3)]
        record = DiagnosticsRecord.from_rows(rows, p=2.0)
        writer = DiagnosticsCsvWriter(tmp_path)
        path = writer.write_diagnostics(record)
        assert path.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)
        loaded = writer.read_diagnostics()
        for name in CSV_COLUMNS:
            assert np.array_equal(loaded.column(name), record.column(name))

    def test_diagnostics_header_is_checked(self, tmp_path):
        (tmp_path / "diagnostics.csv").write_text("t,energy\n0,1\n")
        with pytest.raises(SnapshotFormatError, match="header"):
            DiagnosticsCsvWriter(tmp_path).read_diagnostics()

    def test_picard_rows(self, tmp_path):
        report = ReportModels.PicardConvergenceReport(
            differences=[1e-2, 1e-4], ratios=[1e-2], h1_sup=[1.0, 1.1, 1.1], b_sup=[0.5, 0.5, 0.5],
            b_a_t=[0.2, 0.2, 0.2], noise_floor=1e-13,
        )
        path = DiagnosticsCsvWriter(tmp_path).write_picard(report)
        with open(path, newline="") as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["n", "d_n", "ratio", "h1_sup", "b_sup", "b_a_t"]
        assert len(rows) == 4
        assert rows[1][:3] == ["0", "0.01", "0.01"]
        assert rows[3][1:3] == ["", ""]

    def test_lifespan_row(self, tmp_path):
        report = ReportModels.LifespanReport(
            E0=0.5, a=1.0 / 240.0, C=10.0, p=2.0, T0=0.0625, T=0.0625, branch="small-data",
            u0_low_norm=0.0, u0_mid_norm=0.0,
        )
        path = DiagnosticsCsvWriter(tmp_path).write_lifespan(report)
        lines = path.read_text().splitlines()
        assert lines[0] == "E0,a,C,j0,T0,T1,T2,T,branch"
        assert lines[1].endswith(",0.0625,,,0.0625,small-data")

    def test_stability_rows(self, tmp_path):
        experiment = SimpleNamespace(
            delta=0.01, delta_weak=0.005, norm_strong=0.02, norm_weak=0.01, ratio_strong=2.0, ratio_weak=None,
            a_proxy=1.5, partial=True,
        )
        path = DiagnosticsCsvWriter(tmp_path).write_stability([experiment])
        assert path.read_text().splitlines()[1] == "0.01,0.0050000000000000001,0.02,0.01,2,,1.5,true"

    def test_key_value_report(self, tmp_path):
        path = DiagnosticsCsvWriter(tmp_path / "out").write_report(
            {"T": 0.25, "branch": "small-data", "j0": None, "steps": 3}, "lifespan.txt"
        )
        assert path.read_text() == "T: 0.25\nbranch: small-data\nj0: none\nsteps: 3\n"
