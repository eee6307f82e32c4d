"""
Run artifacts: diagnostics and snapshot CSVs, tables and the run manifest.

Everything written here is a function of the inputs and the installed
versions only, so repeated runs produce byte-identical files.
"""

import csv
import json
import logging
import platform
from importlib.metadata import PackageNotFoundError, version

import django
import numpy as np
import scipy

from core.conf import all_solver_settings
from solver.diagnostics import DiagnosticsRow
from state.snapshots import format_float, write_snapshots

logger = logging.getLogger(__name__)

DIAGNOSTICS_FILE = "diagnostics.csv"
SNAPSHOTS_FILE = "snapshots.csv"
DEFECT_SNAPSHOTS_FILE = "defect_snapshots.csv"
MANIFEST_FILE = "manifest.json"


def json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def dump_json(document):
    return json.dumps(document, indent=2, sort_keys=True, default=json_default) + "\n"


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, bool | np.bool_):
        return "1" if value else "0"
    if isinstance(value, int | np.integer):
        return str(value)
    if isinstance(value, float | np.floating):
        return format_float(value)
    return str(value)


def write_table(path, rows, columns=None):
    """Write dict rows as CSV; columns default to the keys of the first row."""
    rows = list(rows)
    columns = columns or (list(rows[0]) if rows else [])
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(column)) for column in columns])
    logger.info(f"Wrote {len(rows)} rows to {path}")


def write_diagnostics(path, diagnostics):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(DiagnosticsRow.columns())
        for row in diagnostics:
            writer.writerow(row.as_csv_row())
    logger.info(f"Wrote {len(diagnostics)} diagnostics rows to {path}")


def versions():
    try:
        package = version("coagdiff")
    except PackageNotFoundError:
        package = "unknown"
    return {
        "coagdiff": package,
        "python": platform.python_version(),
        "django": django.get_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def build_manifest(trajectory, forced=False):
    """Everything needed to reconstruct the run, without timestamps or absolute paths."""
    scenario = trajectory.scenario
    files = [DIAGNOSTICS_FILE]
    if scenario.snapshots:
        files += [SNAPSHOTS_FILE, DEFECT_SNAPSHOTS_FILE]
    return {
        "scenario": scenario.to_dict(),
        "settings": all_solver_settings(),
        "versions": versions(),
        "horizon": trajectory.horizon.to_dict(),
        "admissibility": trajectory.report.to_dict(),
        "forced": forced,
        "output_times": len(trajectory.times),
        "clip_mass": trajectory.clip_mass,
        "accepted": trajectory.accepted,
        "files": files,
    }


def write_run_outputs(trajectory, output_dir, forced=False):
    """Write the artifacts of one run into output_dir; returns the written paths."""
    output_dir.mkdir(parents=True, exist_ok=True)
    written = [output_dir / DIAGNOSTICS_FILE]
    write_diagnostics(written[0], trajectory.diagnostics)
    if trajectory.scenario.snapshots:
        grid = trajectory.grid
        written.append(output_dir / SNAPSHOTS_FILE)
        write_snapshots(written[-1], zip(trajectory.times, trajectory.kappa, strict=True), grid)
        written.append(output_dir / DEFECT_SNAPSHOTS_FILE)
        write_snapshots(written[-1], zip(trajectory.times, trajectory.lam, strict=True), grid)
    written.append(output_dir / MANIFEST_FILE)
    written[-1].write_text(dump_json(build_manifest(trajectory, forced)))
    logger.info(f"Run artifacts for {trajectory.scenario.name} in {output_dir}")
    return written
