"""
Unit tests for report_generator module.

Tests result loading, the comparison table and HTML rendering.
"""

import pytest
from unittest.mock import patch

import yaml

from src.errors import DataError
from src.experiment import write_sweep_csv
from src.report_generator import (
    build_comparison, format_comparison_table, generate_html_report, load_results,
)


def sweep_row(solver, data_error, photon_flux=1.0, error=""):
    return {
        "image": "disc", "n": 16, "reference": "ura", "gap": 16,
        "oversampling_x": 2.0, "oversampling_y": 2.0, "beamstop": 0,
        "photon_flux": photon_flux, "seed": 1, "solver": solver,
        "data_error": data_error, "truth_error": None if error else 0.5,
        "iterations": 10, "converged": True, "wall_time": 0.1, "error": error,
    }


@pytest.fixture
def sweep_csv(tmp_path):
    rows = [
        sweep_row("cg", 0.1),
        sweep_row("inverse", None, error="GeometryUnsupportedError"),
        sweep_row("wiener", 0.4),
        sweep_row("cg", 0.02, photon_flux=100.0),
        sweep_row("inverse", None, photon_flux=100.0, error="GeometryUnsupportedError"),
        sweep_row("wiener", 0.01, photon_flux=100.0),
    ]
    return write_sweep_csv(tmp_path / "sweep.csv", rows)


@pytest.mark.unit
class TestLoadResults:
    """Test reading sweep CSVs and error files."""

    def test_sweep_csv(self, sweep_csv):
        """Test one normalized row per CSV line with cell labels."""
        rows = load_results([sweep_csv])

        assert len(rows) == 6
        assert rows[0]["solver"] == "cg"
        assert rows[0]["data_error"] == pytest.approx(0.1)
        assert rows[1]["error"] == "GeometryUnsupportedError"
        assert rows[1]["data_error"] is None
        assert rows[0]["cell"] == rows[2]["cell"] != rows[3]["cell"]
        assert rows[0]["grid"] is None

    def test_grid_attached_when_present(self, sweep_csv):
        """Test that existing cell grids are linked by cell order."""
        grid = sweep_csv.parent / "grids" / "cell-001.png"
        grid.parent.mkdir()
        grid.write_bytes(b"png")
        rows = load_results([sweep_csv])

        assert rows[3]["grid"] == grid
        assert rows[0]["grid"] is None

    def test_errors_file(self, tmp_path):
        """Test a reconstruct errors.yaml."""
        path = tmp_path / "errors.yaml"
        path.write_text(yaml.safe_dump({
            "data_relative_error": 0.25, "truth_relative_error": None, "masked": False,
            "solver": "admm", "measurement": "data/measurement.holoml", "photon_flux": 1.0,
        }))
        (row,) = load_results([path])

        assert row["solver"] == "admm"
        assert row["cell"] == "data/measurement.holoml"
        assert row["truth_error"] is None

    def test_not_a_results_file(self, tmp_path):
        """Test that foreign files raise DataError."""
        csv_path = tmp_path / "other.csv"
        csv_path.write_text("a,b\n")
        yaml_path = tmp_path / "other.yaml"
        yaml_path.write_text("colour: red\n")

        for path in (csv_path, yaml_path):
            with pytest.raises(DataError):
                load_results([path])

    def test_missing_file(self, tmp_path):
        """Test that a missing path raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            load_results([tmp_path / "absent.csv"])


@pytest.mark.unit
class TestComparison:
    """Test the per-cell pivot and text table."""

    def test_best_per_cell(self, sweep_csv):
        """Test that the lowest numeric error wins and failures are tagged."""
        solvers, table = build_comparison(load_results([sweep_csv]))

        assert solvers == ["cg", "inverse", "wiener"]
        assert len(table) == 2
        assert table[0]["best"] == "cg"
        assert table[1]["best"] == "wiener"
        assert table[0]["errors"]["inverse"] == "GeometryUnsupportedError"

    def test_all_failed(self):
        """Test no winner when every run failed."""
        rows = [{"cell": "a", "solver": "inverse", "data_error": None, "error": "DataError", "grid": None}]
        _, table = build_comparison(rows)
        assert table[0]["best"] is None

    def test_format(self, sweep_csv):
        """Test a header, a rule and the best value starred."""
        text = format_comparison_table(*build_comparison(load_results([sweep_csv])))
        lines = text.splitlines()

        assert lines[0].split() == ["cell", "cg", "inverse", "wiener"]
        assert set(lines[1].replace(" ", "")) == {"-"}
        assert "0.1*" in lines[2]
        assert "GeometryUnsupportedError" in lines[2]
        assert "0.01*" in lines[3]

    def test_missing_solver_shown_as_dash(self):
        """Test a placeholder where a solver did not run on a cell."""
        rows = [
            {"cell": "a", "solver": "cg", "data_error": 0.1, "error": "", "grid": None},
            {"cell": "b", "solver": "wiener", "data_error": 0.2, "error": "", "grid": None},
        ]
        text = format_comparison_table(*build_comparison(rows))
        assert " - " in text.splitlines()[2] + " "


@pytest.mark.unit
class TestHtmlReport:
    """Test HTML rendering."""

    @patch('src.figure_generator.plt.savefig')
    def test_generate(self, mock_savefig, sweep_csv, tmp_path):
        """Test that the report names every solver, cell and failure."""
        path = generate_html_report(load_results([sweep_csv]), tmp_path / "report")
        html = path.read_text(encoding="utf-8")

        assert path.name == "holoml-report.html"
        for solver in ("cg", "inverse", "wiener"):
            assert f"<th>{solver}</th>" in html
        assert "2 data cells" in html
        assert "GeometryUnsupportedError" in html
        assert "error-vs-photon-flux.png" in html
        mock_savefig.assert_called_once()

    @patch('src.figure_generator.plt.savefig')
    def test_relative_grid_links(self, mock_savefig, sweep_csv):
        """Test that grid images are linked relative to the report."""
        grid = sweep_csv.parent / "grids" / "cell-000.png"
        grid.parent.mkdir()
        grid.write_bytes(b"png")
        html = generate_html_report(load_results([sweep_csv]), sweep_csv.parent).read_text(encoding="utf-8")

        assert 'src="grids/cell-000.png"' in html
