"""
Figure generation for HoloML results using matplotlib.

All figures are static PNG images suitable for HTML embedding.
"""

import matplotlib
matplotlib.use('Agg')  # Non-interactive backend for server/CLI use

import matplotlib.pyplot as plt
import numpy as np
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

#: Consistent styling across all figures
FIGURE_STYLE = {
    "figure.dpi": 150,
    "font.family": "sans-serif",
    "font.size": 10,
    "axes.titlesize": 10,
    "axes.titleweight": "bold",
    "axes.labelsize": 11,
    "legend.fontsize": 9,
    "savefig.bbox": "tight",
    "savefig.pad_inches": 0.2,
    "savefig.facecolor": "white"
}

#: One colour per method, matching the HTML report
COLOR_PALETTE = {
    "cg": "#27AE60",
    "admm": "#9B59B6",
    "inverse": "#E74C3C",
    "wiener": "#F39C12",
}


def setup_figure_style():
    """Apply consistent styling to all figures."""
    plt.rcParams.update(FIGURE_STYLE)


def _save(fig, output_file: Path) -> Path:
    output_file = Path(output_file)
    output_file.parent.mkdir(parents=True, exist_ok=True)
    plt.savefig(output_file)
    plt.close(fig)
    return output_file


def generate_image_grid(
    images: Mapping[str, Any],
    errors: Mapping[str, Optional[float]],
    output_file: Path,
    truth=None,
    title: str = "",
) -> Path:
    """
    Side-by-side grayscale panels: ground truth first, then one per method.

    Panels are clamped to [0, 1]; each method title carries its data-space
    relative error.

    :param images: Method name → n×n reconstruction
    :type images: Mapping[str, Any]
    :param errors: Method name → data-space error (None if unavailable)
    :param output_file: PNG destination
    :type output_file: Path
    :param truth: Ground-truth specimen (omitted if None)
    :param title: Figure title, e.g. the cell parameters
    :return: Path to saved PNG file
    :rtype: Path

    :Example:

    >>> path = generate_image_grid(
    ...     {'cg': x_cg, 'wiener': x_w}, {'cg': 0.12, 'wiener': 0.41},
    ...     Path('results/grids/cell-000.png'), truth=x_true
    ... )
    """
    setup_figure_style()

    panels = []
    if truth is not None:
        panels.append(("ground truth", truth))
    for name, image in images.items():
        err = errors.get(name)
        label = name if err is None else f"{name}\nerror {err:.3g}"
        panels.append((label, image))

    fig, axes = plt.subplots(1, max(1, len(panels)), figsize=(2.2 * max(1, len(panels)), 2.6))
    axes = np.atleast_1d(axes)
    for ax, (label, image) in zip(axes, panels):
        ax.imshow(np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0),
                  cmap="gray", vmin=0.0, vmax=1.0)
        ax.set_title(label)
        ax.axis("off")
    if title:
        fig.suptitle(title, fontsize=9)

    return _save(fig, output_file)


def generate_error_curve(
    rows: List[Dict[str, Any]],
    output_file: Path,
    x_key: str = "photon_flux",
) -> Path:
    """
    Data-space error against a sweep parameter, one line per method.

    Rows with an ``error`` tag or no data error are skipped.

    :param rows: Sweep rows (``solver``, ``data_error`` and ``x_key`` keys)
    :param output_file: PNG destination
    :param x_key: Row key for the horizontal axis
    :return: Path to saved PNG file
    :rtype: Path
    """
    setup_figure_style()
    fig, ax = plt.subplots(figsize=(6, 4))

    by_solver: Dict[str, Dict[float, List[float]]] = {}
    for row in rows:
        if row.get("error") or row.get("data_error") in (None, ""):
            continue
        points = by_solver.setdefault(row["solver"], {})
        points.setdefault(float(row[x_key]), []).append(float(row["data_error"]))

    for solver, points in by_solver.items():
        xs = sorted(points)
        #: Average over images and other axes
        ys = [float(np.mean(points[x])) for x in xs]
        ax.plot(xs, ys, marker="o", label=solver, color=COLOR_PALETTE.get(solver))

    if x_key == "photon_flux":
        ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(x_key.replace("_", " "))
    ax.set_ylabel("data-space relative error")
    if by_solver:
        ax.legend()
    ax.grid(True, alpha=0.3)

    return _save(fig, output_file)


def generate_trace_chart(trace, output_file: Path, method: str = "") -> Path:
    """
    Objective and residual against iteration for one solver run.

    :param trace: Sequence of rows with ``iter``, ``objective`` and ``residual``
    :param output_file: PNG destination
    :param method: Solver name for the title
    :return: Path to saved PNG file
    :rtype: Path
    """
    setup_figure_style()
    iters = [row.iter for row in trace]
    fig, (ax_obj, ax_res) = plt.subplots(1, 2, figsize=(9, 3.5))

    ax_obj.plot(iters, [row.objective for row in trace], color=COLOR_PALETTE.get(method, "#3498DB"))
    ax_obj.set_xlabel("iteration")
    ax_obj.set_ylabel("objective")

    residuals = [row.residual for row in trace]
    ax_res.semilogy(iters, residuals, color=COLOR_PALETTE.get(method, "#3498DB"))
    ax_res.set_xlabel("iteration")
    ax_res.set_ylabel("gradient norm" if method == "cg" else "primal residual")

    if method:
        fig.suptitle(f"{method} convergence")
    plt.tight_layout()

    return _save(fig, output_file)
