"""
Side-by-side comparison of reconstruction errors.

Reads sweep CSVs and ``reconstruct`` error files, tabulates the data-space
error per (data cell, solver), and optionally renders an HTML report with
Jinja2 and the matplotlib figures.
"""

import os
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml
from jinja2 import Environment, FileSystemLoader, select_autoescape

from src.errors import DataError
from src.experiment import SWEEP_HEADER, read_sweep_csv
from src.figure_generator import generate_error_curve

#: Columns that identify a data cell in a sweep CSV
CELL_KEYS = ["image", "reference", "gap", "oversampling_x", "oversampling_y", "beamstop", "photon_flux"]

TEMPLATE_DIR = Path(__file__).resolve().parent.parent / "templates"


def _float_or_none(value) -> Optional[float]:
    if value in (None, ""):
        return None
    return float(value)


def _cell_label(row: Dict[str, Any]) -> str:
    return (f"{row['image']} · {row['reference']} · OS {float(row['oversampling_x']):g}×"
            f"{float(row['oversampling_y']):g} · d={row['gap']} · k={row['beamstop']} · "
            f"Np={float(row['photon_flux']):g}")


def _load_errors_file(path: Path) -> Dict[str, Any]:
    with open(path, 'r') as f:
        data = yaml.safe_load(f) or {}
    if "solver" not in data or "data_relative_error" not in data:
        raise DataError(f"{path} is not a holoml errors file")
    return {
        "cell": data.get("measurement", str(path.parent)),
        "solver": data["solver"],
        "data_error": _float_or_none(data.get("data_relative_error")),
        "truth_error": _float_or_none(data.get("truth_relative_error")),
        "photon_flux": data.get("photon_flux"),
        "error": "",
        "grid": None,
    }


def load_results(paths: List[Union[str, Path]]) -> List[Dict[str, Any]]:
    """
    Normalize sweep CSV rows and ``errors.yaml`` files into one row list.

    Each row carries ``cell``, ``solver``, ``data_error``, ``truth_error``,
    ``photon_flux``, ``error`` and ``grid`` (image grid path, if any).

    :param paths: Sweep CSVs (``# holoml-sweep v1``) or reconstruct error files
    :return: Normalized rows in input order
    :rtype: List[Dict[str, Any]]
    :raises FileNotFoundError: If a path does not exist
    :raises DataError: If a file is not a recognised results file
    """
    rows = []
    for path in map(Path, paths):
        if not path.exists():
            raise FileNotFoundError(f"Results file not found: {path}")

        if path.suffix in (".yaml", ".yml"):
            rows.append(_load_errors_file(path))
            continue

        with open(path, 'r', encoding='utf-8') as f:
            if f.readline().strip() != SWEEP_HEADER:
                raise DataError(f"{path} is neither a sweep CSV nor an errors file")

        sweep_rows = read_sweep_csv(path)
        labels = list(dict.fromkeys(_cell_label(r) for r in sweep_rows))
        for row in sweep_rows:
            label = _cell_label(row)
            grid = path.parent / "grids" / f"cell-{labels.index(label):03d}.png"
            rows.append({
                "cell": label,
                "solver": row["solver"],
                "data_error": _float_or_none(row["data_error"]),
                "truth_error": _float_or_none(row["truth_error"]),
                "photon_flux": float(row["photon_flux"]),
                "error": row["error"],
                "grid": grid if grid.exists() else None,
            })
    return rows


def build_comparison(rows: List[Dict[str, Any]]) -> Tuple[List[str], List[Dict[str, Any]]]:
    """
    Pivot rows into one entry per data cell with one error per solver.

    :return: (solver names in first-seen order, table entries with ``cell``,
        ``errors`` {solver: data error or error tag}, ``best`` and ``grid``)

    :Example:

    >>> solvers, table = build_comparison([
    ...     {'cell': 'a', 'solver': 'cg', 'data_error': 0.1, 'error': '', 'grid': None},
    ...     {'cell': 'a', 'solver': 'wiener', 'data_error': 0.4, 'error': '', 'grid': None},
    ... ])
    >>> solvers, table[0]['best']
    (['cg', 'wiener'], 'cg')
    """
    solvers = list(dict.fromkeys(r["solver"] for r in rows))
    table: Dict[str, Dict[str, Any]] = {}
    for row in rows:
        entry = table.setdefault(row["cell"], {"cell": row["cell"], "errors": {}, "grid": None})
        entry["errors"][row["solver"]] = row["error"] or row["data_error"]
        if row.get("grid") is not None:
            entry["grid"] = row["grid"]

    for entry in table.values():
        numeric = {s: e for s, e in entry["errors"].items() if isinstance(e, float)}
        entry["best"] = min(numeric, key=numeric.get) if numeric else None
    return solvers, list(table.values())


def _format_cell_value(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def format_comparison_table(solvers: List[str], table: List[Dict[str, Any]]) -> str:
    """
    Plain-text table, one row per data cell, one column per solver.

    The lowest error in each row is marked with ``*``.
    """
    header = ["cell"] + solvers
    body = []
    for entry in table:
        cells = [entry["cell"]]
        for solver in solvers:
            text = _format_cell_value(entry["errors"].get(solver))
            if solver == entry["best"]:
                text += "*"
            cells.append(text)
        body.append(cells)

    widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for cells in body:
        lines.append("  ".join(c.ljust(w) for c, w in zip(cells, widths)))
    return "\n".join(lines)


def generate_html_report(rows: List[Dict[str, Any]], output_dir: Path) -> Path:
    """
    Render the comparison table, image grids and error curve as HTML.

    :param rows: Rows from :func:`load_results`
    :type rows: List[Dict[str, Any]]
    :param output_dir: Directory to save the report and figures
    :type output_dir: Path
    :return: Path to generated HTML file
    :rtype: Path

    :Example:

    >>> rows = load_results(['results/sweep.csv'])
    >>> path = generate_html_report(rows, Path('results'))
    >>> path.name
    'holoml-report.html'
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    solvers, table = build_comparison(rows)

    curve_rows = [r for r in rows if r.get("photon_flux") is not None]
    charts = {}
    if curve_rows:
        curve = generate_error_curve(curve_rows, output_dir / "error-vs-photon-flux.png")
        charts["error_curve"] = curve.name

    for entry in table:
        grid = entry["grid"]
        entry["grid"] = os.path.relpath(grid, output_dir) if grid else None
        entry["formatted"] = {s: _format_cell_value(entry["errors"].get(s)) for s in solvers}

    report_data = {
        "generation_timestamp": datetime.now().strftime("%Y-%m-%d %H:%M:%S"),
        "solvers": solvers,
        "table": table,
        "cell_count": len(table),
        "failures": sum(1 for r in rows if r["error"]),
    }

    html_content = _render_template(report_data, charts)
    return _save_report(html_content, output_dir)


def _render_template(report_data: Dict[str, Any], chart_paths: Dict[str, str]) -> str:
    """
    Load Jinja2 template and render with data and charts.

    :param report_data: Template data dictionary
    :param chart_paths: Dict mapping chart names to relative paths
    :return: Rendered HTML string
    """
    env = Environment(
        loader=FileSystemLoader(str(TEMPLATE_DIR)),
        autoescape=select_autoescape(['html'])
    )
    template = env.get_template('report.html')
    return template.render(**report_data, charts=chart_paths)


def _save_report(html_content: str, output_dir: Path) -> Path:
    output_path = output_dir / "holoml-report.html"
    with open(output_path, 'w', encoding='utf-8') as f:
        f.write(html_content)
    return output_path
