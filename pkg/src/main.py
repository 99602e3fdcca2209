"""
HoloML command-line interface.

Simulates holographic CDI measurements, reconstructs specimens with the
HoloML solvers or the deconvolution baselines, sweeps experiment
parameters and compares results.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import yaml

from src.baselines import inverse_filter, wiener_filter
from src.config_manager import (
    RunConfig, apply_overrides, filter_config, load_config, save_config, solver_config,
)
from src.detector import load_measurement, save_measurement, simulate
from src.errors import HoloError
from src.experiment import run_sweep
from src.figure_generator import generate_trace_chart
from src.imaging import write_image, write_log_preview
from src.layout import Layout, compose
from src.metrics import error_report
from src.objective import Problem
from src.phantoms import load_specimen
from src.references import ReferenceSpec, generate
from src.report_generator import (
    build_comparison, format_comparison_table, generate_html_report, load_results,
)
from src.solvers import solve, write_trace_csv

MEASUREMENT_NAME = "measurement.holoml"
SPECIMEN_SIDECAR = "specimen.npy"


def parse_arguments(argv: Optional[List[str]] = None):
    """
    Parse command-line arguments.

    :return: Parsed arguments
    """
    parser = argparse.ArgumentParser(
        prog="holoml",
        description="""
HoloML - Holographic phase retrieval under Poisson shot noise

Simulates and reconstructs holographic coherent diffraction imaging data:
  • Specimen/gap/reference layouts with URA, block, pinhole or no reference
  • Oversampled detector intensities with beamstop and Poisson noise
  • Maximum-likelihood reconstruction (conjugate gradient, ADMM)
  • Inverse and Wiener filtering baselines
  • Parameter sweeps with CSV tables, image grids and HTML reports
        """,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  holoml simulate                              # Default scene → results/
  holoml simulate --photon-flux 0.1 -o data/   # Low-photon measurement
  holoml reconstruct data/measurement.holoml --solver cg
  holoml reconstruct data/measurement.holoml --solver wiener
  holoml sweep --config configs/photon-sweep.yaml --workers 4
  holoml compare results/sweep.csv --html      # Side-by-side error table

Configuration:
  Edit config.yaml (or config.local.yaml) to customize:
    - image / n / reference / gap / oversampling / beamstop
    - photon_flux: Np values
    - solvers: cg, admm, inverse, wiener
    - solver / filter: tuning overrides
  Plural keys (phantoms, references, gaps, oversamplings, beamstops) are
  sweep axes. Ready-made sweeps live in configs/.

Exit codes:
  0 success, 2 configuration or input error,
  3 geometry unsupported by a baseline, 4 data or numeric failure
        """
    )
    parser.add_argument(
        "--version", "-v",
        action="version",
        version="HoloML 1.0.0"
    )

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", "-c",
        type=str,
        default="config.yaml",
        metavar="FILE",
        help="YAML configuration (default: config.local.yaml if present, else config.yaml)"
    )
    common.add_argument(
        "--output", "-o",
        type=str,
        metavar="DIR",
        help="Output directory (overrides config.yaml setting)"
    )
    common.add_argument("--seed", type=int, help="Master random seed")

    scene = argparse.ArgumentParser(add_help=False)
    scene.add_argument("--image", type=str, help="Phantom name or grayscale image path")
    scene.add_argument("--n", type=int, help="Specimen side length in pixels")
    scene.add_argument("--reference", type=str, choices=["none", "pinhole", "block", "ura"])
    scene.add_argument("--gap", type=str, help="Gap width d (pixels, or fraction like 0.25n)")
    scene.add_argument("--oversampling", type=float, nargs=2, metavar=("X", "Y"))
    scene.add_argument("--beamstop", type=int, help="Odd beamstop block size k (0 = none)")
    scene.add_argument("--photon-flux", type=float, nargs="+", dest="photon_flux", metavar="NP")

    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    commands.add_parser(
        "simulate", parents=[common, scene],
        help="Generate a noisy measurement and previews"
    )

    recon = commands.add_parser(
        "reconstruct", parents=[common],
        help="Reconstruct a specimen from a measurement file"
    )
    recon.add_argument("measurement", type=str, help="Measurement file written by 'simulate'")
    recon.add_argument("--solver", type=str, default="cg", choices=["cg", "admm", "inverse", "wiener"])
    recon.add_argument("--max-iters", type=int, dest="max_iters")
    recon.add_argument("--rho", type=float, help="ADMM penalty")
    recon.add_argument("--init", type=str, choices=["zeros", "wiener"], help="Solver start point")
    recon.add_argument("--verbose", action="store_true", help="Print solver progress")

    sweep = commands.add_parser(
        "sweep", parents=[common, scene],
        help="Run every configured cell and write sweep.csv"
    )
    sweep.add_argument("--workers", type=int, help="Parallel worker processes")
    sweep.add_argument("--solvers", type=str, nargs="+", choices=["cg", "admm", "inverse", "wiener"])

    compare = commands.add_parser(
        "compare",
        help="Side-by-side error table from existing results"
    )
    compare.add_argument("results", type=str, nargs="+", help="sweep.csv or errors.yaml files")
    compare.add_argument("--html", action="store_true", help="Also render an HTML report")
    compare.add_argument("--output", "-o", type=str, metavar="DIR", help="Report directory")

    return parser.parse_args(argv)


def _resolve_config(args) -> RunConfig:
    config = load_config(args.config)
    flags = {
        "output": getattr(args, "output", None),
        "seed": getattr(args, "seed", None),
        "image": getattr(args, "image", None),
        "n": getattr(args, "n", None),
        "reference": getattr(args, "reference", None),
        "gap": getattr(args, "gap", None),
        "oversampling": getattr(args, "oversampling", None),
        "beamstop": getattr(args, "beamstop", None),
        "photon_flux": getattr(args, "photon_flux", None),
        "workers": getattr(args, "workers", None),
        "solvers": getattr(args, "solvers", None),
    }
    return apply_overrides(config, **flags)


def cmd_simulate(config: RunConfig) -> Path:
    """
    Write a measurement, its previews and the ground-truth sidecar.

    Uses the first photon flux value and the master seed as noise seed.

    :return: Path to the measurement file
    """
    output = config.output
    reference_spec = ReferenceSpec.parse(config.reference, config.pinhole_radius)
    specimen = load_specimen(config.image, config.n)
    layout = Layout(
        specimen=specimen,
        reference=generate(reference_spec, config.n),
        gap_width=config.gap_width,
        oversampling_x=config.oversampling[0],
        oversampling_y=config.oversampling[1],
    )
    photon_flux = config.photon_flux[0]
    print(f"🔄 Simulating {config.image} ({config.n}×{config.n}, {reference_spec.kind.value} reference, "
          f"Np={photon_flux:g})...")

    measurement = simulate(layout, reference_spec, photon_flux, config.seed, beamstop=config.beamstop)
    path = save_measurement(output / MEASUREMENT_NAME, measurement)
    np.save(output / SPECIMEN_SIDECAR, specimen.values)
    write_log_preview(output / "intensity-preview.png", measurement.noisy_intensity)
    write_image(output / "composite.png", compose(layout).values)
    save_config(config, output)

    m1, m2 = measurement.shape
    print(f"✅ Measurement written: {path} ({m1}×{m2} detector)")
    return path


def cmd_reconstruct(args, config: RunConfig) -> Path:
    """
    Reconstruct from a measurement file and write image, trace and errors.

    :return: Output directory
    """
    measurement_path = Path(args.measurement)
    measurement = load_measurement(measurement_path)
    layout = measurement.layout()
    problem = Problem.from_measurement(measurement)

    output = Path(args.output) if args.output else config.output / f"{measurement_path.stem}-{args.solver}"
    print(f"🔄 Reconstructing {measurement_path} with {args.solver}...")

    settings = dict(config.solver)
    for key, value in (("max_iters", args.max_iters), ("admm_rho", args.rho), ("init_mode", args.init)):
        if value is not None:
            settings[key] = value
    if args.verbose:
        settings["verbose"] = True
    config = apply_overrides(config, solver=settings)

    result = None
    if args.solver in ("cg", "admm"):
        result = solve(problem, args.solver, solver_config(config))
        x_hat = result.x_hat
    elif args.solver == "inverse":
        x_hat = inverse_filter(measurement, layout, filter_config(config))
    else:
        x_hat = wiener_filter(measurement, layout, filter_config(config))

    sidecar = measurement_path.parent / SPECIMEN_SIDECAR
    truth = np.load(sidecar) if sidecar.exists() else None
    report = error_report(x_hat, measurement, problem.operator, truth)

    output.mkdir(parents=True, exist_ok=True)
    np.save(output / "reconstruction.npy", x_hat.values)
    write_image(output / "reconstruction.png", x_hat.values)
    errors = dict(
        report.as_dict(),
        solver=args.solver,
        measurement=str(measurement_path),
        photon_flux=measurement.photon_flux,
    )
    if result is not None:
        write_trace_csv(output / "trace.csv", result)
        generate_trace_chart(result.trace, output / "trace.png", args.solver)
        errors.update(iterations=result.iterations, converged=result.converged, reason=result.reason)
        if not result.converged:
            print(f"⚠️  Warning: {args.solver} stopped without converging ({result.reason})")
    with open(output / "errors.yaml", 'w') as f:
        yaml.safe_dump(errors, f, sort_keys=False)
    save_config(config, output)

    print(f"✅ Data-space relative error: {report.data_relative_error:.6g}")
    if report.truth_relative_error is not None:
        print(f"   Ground-truth relative error: {report.truth_relative_error:.6g}")
    print(f"   Results written to {output}")
    return output


def cmd_sweep(config: RunConfig) -> Path:
    """
    Run the configured sweep.

    Failed solver runs are recorded per row and do not stop the sweep.

    :return: Path to sweep.csv
    """
    return run_sweep(config)


def cmd_compare(args) -> Optional[Path]:
    """Print the comparison table and optionally render the HTML report."""
    rows = load_results(args.results)
    solvers, table = build_comparison(rows)
    print(format_comparison_table(solvers, table))

    if args.html:
        output_dir = Path(args.output) if args.output else Path(args.results[0]).parent
        path = generate_html_report(rows, output_dir)
        print(f"✅ HTML report generated: {path}")
        print(f"   Open in browser: file://{path.absolute()}")
        return path
    return None


def main(argv: Optional[List[str]] = None):
    """
    Main entry point for the holoml command.

    Exits with the error's exit code on failure: 2 configuration or input
    error, 3 unsupported geometry, 4 data or numeric failure.
    """
    args = parse_arguments(argv)

    try:
        if args.command == "compare":
            cmd_compare(args)
        else:
            config = _resolve_config(args)
            if args.command == "simulate":
                cmd_simulate(config)
            elif args.command == "reconstruct":
                cmd_reconstruct(args, config)
            else:
                cmd_sweep(config)
    except HoloError as e:
        print(f"❌ Error: {e}")
        sys.exit(e.exit_code)
    except (OSError, yaml.YAMLError) as e:
        #: Missing or unreadable inputs and malformed YAML
        print(f"❌ Error: {e}")
        sys.exit(2)


if __name__ == "__main__":
    main()
