"""
Parameter sweeps over acquisition geometry, photon flux and solver.

A *data cell* fixes everything that determines the measurement (image,
reference, oversampling, gap, beamstop, Np). Every requested solver runs on
the same measurement, so errors within a cell are directly comparable.
Each cell's noise seed is derived from the master seed and the cell's
parameters alone, so results do not depend on cell order or worker count.
"""

import csv
import hashlib
import time
from dataclasses import dataclass, field
from itertools import product
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from src.baselines import FilterConfig, inverse_filter, wiener_filter
from src.config_manager import RunConfig, filter_config, save_config, solver_config
from src.detector import simulate
from src.errors import DataError, HoloError
from src.figure_generator import generate_error_curve, generate_image_grid
from src.layout import Layout
from src.metrics import data_relative_error, truth_relative_error
from src.objective import Problem
from src.phantoms import load_specimen
from src.references import ReferenceSpec, generate
from src.solvers import SolverConfig, solve

SWEEP_HEADER = "# holoml-sweep v1"
SWEEP_COLUMNS = [
    "image", "n", "reference", "gap", "oversampling_x", "oversampling_y",
    "beamstop", "photon_flux", "seed", "solver", "data_error", "truth_error",
    "iterations", "converged", "wall_time", "error",
]


@dataclass(frozen=True)
class Cell:
    """
    One measurement plus the solvers to run on it.

    :param index: Position in the sweep (for grid file names)
    :param master_seed: Run seed the cell seed is derived from
    """
    image: str
    n: int
    reference: str
    pinhole_radius: Optional[int]
    gap: int
    oversampling: Tuple[float, float]
    beamstop: int
    photon_flux: float
    solvers: Tuple[str, ...]
    master_seed: int = 0
    index: int = 0
    solver_settings: SolverConfig = field(default_factory=SolverConfig)
    filter_settings: FilterConfig = field(default_factory=FilterConfig)

    @property
    def key(self) -> str:
        """Canonical text identifying the measurement (solvers excluded)."""
        return (
            f"image={self.image}|n={self.n}|reference={self.reference}"
            f"|pinhole_radius={self.pinhole_radius}|gap={self.gap}"
            f"|oversampling={self.oversampling[0]!r},{self.oversampling[1]!r}"
            f"|beamstop={self.beamstop}|photon_flux={self.photon_flux!r}"
        )

    @property
    def label(self) -> str:
        return (f"{self.image} {self.reference} OS={self.oversampling[0]:g}×{self.oversampling[1]:g} "
                f"d={self.gap} k={self.beamstop} Np={self.photon_flux:g}")


@dataclass
class CellOutcome:
    """Rows for one cell plus the images behind them."""
    cell: Cell
    rows: List[Dict[str, Any]]
    truth: Optional[np.ndarray] = None
    images: Dict[str, np.ndarray] = field(default_factory=dict)


def expand_cells(config: RunConfig) -> List[Cell]:
    """
    Cartesian product image × reference × oversampling × gap × beamstop × Np.

    The order is fixed (last axis fastest) so sweep CSVs line up between runs.

    :param config: Run configuration
    :type config: RunConfig
    :return: Data cells
    :rtype: List[Cell]
    :raises ConfigError: If the solver or filter overrides are invalid

    :Example:

    >>> config = RunConfig(photon_flux=[1000, 100, 10, 1, 0.1])
    >>> len(expand_cells(config))
    5
    """
    solver_settings = solver_config(config)
    filter_settings = filter_config(config)
    axes = product(
        config.image_axis,
        config.reference_axis,
        config.oversampling_axis,
        config.gap_axis,
        config.beamstop_axis,
        config.photon_flux,
    )
    return [
        Cell(
            image=image,
            n=config.n,
            reference=reference,
            pinhole_radius=config.pinhole_radius,
            gap=gap,
            oversampling=tuple(oversampling),
            beamstop=beamstop,
            photon_flux=float(flux),
            solvers=tuple(config.solvers),
            master_seed=config.seed,
            index=index,
            solver_settings=solver_settings,
            filter_settings=filter_settings,
        )
        for index, (image, reference, oversampling, gap, beamstop, flux) in enumerate(axes)
    ]


def cell_seed(master_seed: int, cell: Cell) -> int:
    """
    Noise seed for a cell: SHA-256 of its key mixed with the master seed.

    :Example:

    >>> cell_seed(0, cell) == cell_seed(0, cell)
    True
    """
    digest = hashlib.sha256(cell.key.encode("utf-8")).digest()
    words = np.frombuffer(digest, dtype="<u4")
    sequence = np.random.SeedSequence([int(master_seed), *words.tolist()])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def _base_row(cell: Cell, seed: Optional[int]) -> Dict[str, Any]:
    return {
        "image": cell.image,
        "n": cell.n,
        "reference": cell.reference,
        "gap": cell.gap,
        "oversampling_x": cell.oversampling[0],
        "oversampling_y": cell.oversampling[1],
        "beamstop": cell.beamstop,
        "photon_flux": cell.photon_flux,
        "seed": seed,
    }


def _error_row(base: Dict[str, Any], solver: str, error: Exception) -> Dict[str, Any]:
    return dict(base, solver=solver, data_error=None, truth_error=None,
                iterations=None, converged=None, wall_time=None, error=type(error).__name__)


def run_cell(cell: Cell) -> CellOutcome:
    """
    Simulate one measurement and run every requested solver on it.

    Baseline geometry refusals and other per-solver failures become rows
    with the exception class in the ``error`` column.

    :param cell: Data cell
    :type cell: Cell
    :return: One row per solver, plus the truth and reconstructions
    :rtype: CellOutcome
    """
    seed = cell_seed(cell.master_seed, cell)
    base = _base_row(cell, seed)
    try:
        reference_spec = ReferenceSpec.parse(cell.reference, cell.pinhole_radius)
        specimen = load_specimen(cell.image, cell.n)
        layout = Layout(
            specimen=specimen,
            reference=generate(reference_spec, cell.n),
            gap_width=cell.gap,
            oversampling_x=cell.oversampling[0],
            oversampling_y=cell.oversampling[1],
        )
        measurement = simulate(layout, reference_spec, cell.photon_flux, seed, beamstop=cell.beamstop)
        problem = Problem.from_measurement(measurement)
    except (HoloError, OSError) as e:
        return CellOutcome(cell, [_error_row(base, s, e) for s in cell.solvers])

    rows, images = [], {}
    for name in cell.solvers:
        start = time.perf_counter()
        try:
            if name in ("cg", "admm"):
                result = solve(problem, name, cell.solver_settings)
                x_hat, iterations, converged = result.x_hat, result.iterations, result.converged
            else:
                baseline = inverse_filter if name == "inverse" else wiener_filter
                x_hat = baseline(measurement, layout, cell.filter_settings)
                iterations, converged = 0, True
            data_error = data_relative_error(x_hat, measurement, problem.operator)
            truth_error = truth_relative_error(x_hat, specimen)
        except HoloError as e:
            rows.append(_error_row(base, name, e))
            continue

        images[name] = x_hat.values
        rows.append(dict(
            base,
            solver=name,
            data_error=data_error,
            truth_error=truth_error,
            iterations=iterations,
            converged=converged,
            wall_time=time.perf_counter() - start,
            error="",
        ))

    return CellOutcome(cell, rows, specimen.values, images)


def write_sweep_csv(path: Union[str, Path], rows: List[Dict[str, Any]]) -> Path:
    """Write sweep rows under a versioned header comment."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(f"{SWEEP_HEADER}\n")
        writer = csv.DictWriter(f, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: "" if row.get(k) is None else row.get(k) for k in SWEEP_COLUMNS})
    return path


def read_sweep_csv(path: Union[str, Path]) -> List[Dict[str, str]]:
    """
    Read a sweep CSV written by :func:`write_sweep_csv`.

    :raises DataError: If the version header is missing
    """
    with open(path, newline="", encoding="utf-8") as f:
        header = f.readline().strip()
        if header != SWEEP_HEADER:
            raise DataError(f"{path} is not a holoml sweep file (header '{header}')")
        return list(csv.DictReader(f))


def run_sweep(config: RunConfig, output: Optional[Union[str, Path]] = None) -> Path:
    """
    Run every cell of the configured sweep and write the results.

    Writes ``sweep.csv``, ``run-config.yaml``, an error curve and one image
    grid per cell under ``grids/``. With ``workers > 1`` cells run in a
    process pool; results keep cell order either way.

    :param config: Run configuration
    :type config: RunConfig
    :param output: Output directory (None → ``config.output``)
    :return: Path to the sweep CSV
    :rtype: Path
    """
    output = Path(output or config.output)
    cells = expand_cells(config)
    total = len(cells)
    print(f"🔄 Running {total} cells × {len(config.solvers)} solvers "
          f"({config.workers} worker{'s' if config.workers > 1 else ''})...")

    outcomes: List[CellOutcome] = []
    if config.workers > 1:
        with Pool(config.workers) as pool:
            for i, outcome in enumerate(pool.imap(run_cell, cells), 1):
                print(f"   [{i}/{total}] {outcome.cell.label}")
                outcomes.append(outcome)
    else:
        for i, cell in enumerate(cells, 1):
            print(f"   [{i}/{total}] {cell.label}")
            outcomes.append(run_cell(cell))

    rows = [row for outcome in outcomes for row in outcome.rows]
    failed = [row for row in rows if row["error"]]
    if failed:
        print(f"⚠️  Warning: {len(failed)} solver runs failed (see the error column)")

    csv_path = write_sweep_csv(output / "sweep.csv", rows)
    save_config(config, output)

    for outcome in outcomes:
        if outcome.truth is None:
            continue
        errors = {r["solver"]: r["data_error"] for r in outcome.rows if not r["error"]}
        generate_image_grid(
            outcome.images,
            errors,
            output / "grids" / f"cell-{outcome.cell.index:03d}.png",
            truth=outcome.truth,
            title=outcome.cell.label,
        )
    generate_error_curve(rows, output / "error-vs-photon-flux.png")

    print(f"✅ Sweep complete: {csv_path}")
    return csv_path
