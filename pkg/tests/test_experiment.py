"""
Unit tests for experiment module.

Tests cell expansion, seed derivation, per-cell runs and the sweep CSV.
"""

import dataclasses
from unittest.mock import patch

import numpy as np
import pytest

from src.config_manager import RunConfig
from src.errors import DataError
from src.experiment import (
    SWEEP_COLUMNS, SWEEP_HEADER, Cell, cell_seed, expand_cells, read_sweep_csv, run_cell,
    run_sweep, write_sweep_csv,
)
from src.solvers import SolverConfig


def small_cell(**overrides):
    values = dict(
        image="disc", n=16, reference="ura", pinhole_radius=None, gap=16,
        oversampling=(2.0, 2.0), beamstop=0, photon_flux=10.0,
        solvers=("cg", "admm", "inverse", "wiener"),
        solver_settings=SolverConfig(max_iters=20),
    )
    values.update(overrides)
    return Cell(**values)


def small_config(tmp_path, **overrides):
    values = dict(
        image="disc", n=16, photon_flux=[10, 1], solvers=["cg", "wiener"],
        solver={"max_iters": 20}, output=tmp_path / "results",
    )
    values.update(overrides)
    return RunConfig(**values)


def numeric_columns(rows):
    return [{k: v for k, v in row.items() if k != "wall_time"} for row in rows]


@pytest.mark.unit
class TestExpandCells:
    """Test the sweep's Cartesian product."""

    def test_photon_flux_cells(self):
        """Test five fluxes × four solvers = five cells, twenty runs."""
        cells = expand_cells(RunConfig(photon_flux=[1000, 100, 10, 1, 0.1]))

        assert len(cells) == 5
        assert sum(len(c.solvers) for c in cells) == 20
        assert [c.photon_flux for c in cells] == [1000.0, 100.0, 10.0, 1.0, 0.1]

    def test_axis_order(self):
        """Test that photon flux varies fastest and the image slowest."""
        cells = expand_cells(RunConfig(phantoms=["disc", "texture"], beamstops=[0, 7], photon_flux=[1, 10]))

        assert len(cells) == 8
        assert [c.image for c in cells[:4]] == ["disc"] * 4
        assert [(c.beamstop, c.photon_flux) for c in cells[:4]] == [(0, 1.0), (0, 10.0), (7, 1.0), (7, 10.0)]
        assert [c.index for c in cells] == list(range(8))

    def test_gaps_resolved(self):
        """Test that fractional gaps become pixel counts."""
        cells = expand_cells(RunConfig(n=64, gaps=[0, "0.25n", "n"]))
        assert [c.gap for c in cells] == [0, 16, 64]

    def test_settings_attached(self):
        """Test that solver overrides reach every cell."""
        cells = expand_cells(RunConfig(solver={"max_iters": 7}))
        assert cells[0].solver_settings.max_iters == 7


@pytest.mark.unit
class TestCellSeed:
    """Test order-independent seed derivation."""

    def test_deterministic(self):
        """Test equal seeds for equal inputs."""
        assert cell_seed(0, small_cell()) == cell_seed(0, small_cell())

    def test_depends_on_master_seed(self):
        """Test that the master seed changes every cell seed."""
        assert cell_seed(0, small_cell()) != cell_seed(1, small_cell())

    def test_depends_on_measurement(self):
        """Test that different measurement parameters give different seeds."""
        assert cell_seed(0, small_cell()) != cell_seed(0, small_cell(photon_flux=1.0))
        assert cell_seed(0, small_cell()) != cell_seed(0, small_cell(beamstop=3))

    def test_ignores_position_and_solvers(self):
        """Test that index and solver list do not affect the seed."""
        base = cell_seed(0, small_cell())
        assert cell_seed(0, small_cell(index=5)) == base
        assert cell_seed(0, small_cell(solvers=("cg",))) == base

    def test_fits_uint64(self):
        """Test a seed usable by numpy.random.default_rng."""
        seed = cell_seed(3, small_cell())
        assert 0 <= seed < 2 ** 64
        np.random.default_rng(seed)


@pytest.mark.unit
class TestRunCell:
    """Test one measurement with every solver."""

    def test_all_solvers(self):
        """Test one finite row per solver sharing the same measurement."""
        outcome = run_cell(small_cell())

        assert [r["solver"] for r in outcome.rows] == ["cg", "admm", "inverse", "wiener"]
        assert len({r["seed"] for r in outcome.rows}) == 1
        for row in outcome.rows:
            assert row["error"] == ""
            assert np.isfinite(row["data_error"]) and np.isfinite(row["truth_error"])
        assert set(outcome.images) == {"cg", "admm", "inverse", "wiener"}
        assert outcome.truth.shape == (16, 16)

    def test_baseline_refusal_becomes_row(self):
        """Test that OS < 2 tags the baselines and still runs CG."""
        outcome = run_cell(small_cell(oversampling=(1.5, 1.5), solvers=("cg", "inverse")))
        cg, inverse = outcome.rows

        assert cg["error"] == ""
        assert inverse["error"] == "GeometryUnsupportedError"
        assert inverse["data_error"] is None

    def test_reference_free_cg_leaves_start(self):
        """Test that CG without a reference does not stop on the zero start."""
        outcome = run_cell(small_cell(
            reference="none", solvers=("cg",), solver_settings=SolverConfig(max_iters=150),
        ))
        row = outcome.rows[0]

        assert row["error"] == ""
        assert row["iterations"] > 0
        assert np.any(outcome.images["cg"] != 0)

    def test_missing_image_fails_every_row(self, tmp_path):
        """Test that an unreadable specimen tags every solver."""
        outcome = run_cell(small_cell(image=str(tmp_path / "absent.png"), solvers=("cg", "wiener")))

        assert [r["error"] for r in outcome.rows] == ["FileNotFoundError"] * 2
        assert outcome.truth is None

    def test_reproducible(self):
        """Test identical rows for identical cells."""
        a = run_cell(small_cell(solvers=("cg", "wiener")))
        b = run_cell(small_cell(solvers=("cg", "wiener")))
        assert numeric_columns(a.rows) == numeric_columns(b.rows)


@pytest.mark.unit
class TestSweepCsv:
    """Test the sweep table format."""

    def test_round_trip(self, tmp_path):
        """Test the versioned header, column order and blank error values."""
        rows = run_cell(small_cell(oversampling=(1.5, 1.5), solvers=("cg", "inverse"))).rows
        path = write_sweep_csv(tmp_path / "sweep.csv", rows)

        lines = path.read_text().splitlines()
        assert lines[0] == SWEEP_HEADER
        assert lines[1].split(",") == SWEEP_COLUMNS

        loaded = read_sweep_csv(path)
        assert [r["solver"] for r in loaded] == ["cg", "inverse"]
        assert loaded[1]["data_error"] == ""
        assert float(loaded[0]["data_error"]) == pytest.approx(rows[0]["data_error"])

    def test_missing_header(self, tmp_path):
        """Test that an unversioned CSV raises DataError."""
        path = tmp_path / "other.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(DataError):
            read_sweep_csv(path)


@pytest.mark.unit
class TestRunSweep:
    """Test the full sweep driver."""

    @patch('src.figure_generator.plt.savefig')
    def test_outputs(self, mock_savefig, tmp_path, capsys):
        """Test the CSV, config snapshot and one figure per cell plus the curve."""
        config = small_config(tmp_path)
        csv_path = run_sweep(config)

        rows = read_sweep_csv(csv_path)
        assert len(rows) == 4
        assert (config.output / "run-config.yaml").exists()
        assert mock_savefig.call_count == 3
        assert "Sweep complete" in capsys.readouterr().out

    @patch('src.figure_generator.plt.savefig')
    def test_failed_runs_warned(self, mock_savefig, tmp_path, capsys):
        """Test a warning when some runs fail."""
        config = small_config(tmp_path, oversampling=1.5, photon_flux=[1], solvers=["cg", "wiener"])
        rows = read_sweep_csv(run_sweep(config))

        assert rows[1]["error"] == "GeometryUnsupportedError"
        assert "Warning" in capsys.readouterr().out

    @patch('src.figure_generator.plt.savefig')
    def test_repeatable(self, mock_savefig, tmp_path):
        """Test numerically identical columns from repeated sweeps."""
        first = read_sweep_csv(run_sweep(small_config(tmp_path), tmp_path / "a"))
        second = read_sweep_csv(run_sweep(small_config(tmp_path), tmp_path / "b"))
        assert numeric_columns(first) == numeric_columns(second)

    @patch('src.figure_generator.plt.savefig')
    def test_workers_do_not_change_results(self, mock_savefig, tmp_path):
        """Test that a process pool gives the same table as a serial run."""
        serial = read_sweep_csv(run_sweep(small_config(tmp_path), tmp_path / "serial"))
        pooled = read_sweep_csv(run_sweep(dataclasses.replace(small_config(tmp_path), workers=2),
                                          tmp_path / "pooled"))
        assert numeric_columns(serial) == numeric_columns(pooled)
