"""
Snapshot CSV: one row per (time, class, cell) with a non-zero density.

Columns: time, class, cell_0[, cell_1[, cell_2]], density[, provenance].
"""

import csv
import logging

import numpy as np
from django.core.exceptions import ValidationError

logger = logging.getLogger(__name__)


def format_float(value):
    """Round-trippable, locale-free float text."""
    return f"{float(value):.17g}"


def snapshot_header(grid, provenance=False):
    header = ["time", "class", *(f"cell_{axis}" for axis in range(grid.dim)), "density"]
    if provenance:
        header.append("provenance")
    return header


def snapshot_rows(time, density, grid, provenance=None):
    """Yield CSV rows for the non-zero entries of one density, classes 1-based."""
    indices = grid.cell_indices()
    classes, cells = np.nonzero(density)
    for i, cell in zip(classes, cells, strict=True):
        row = [format_float(time), str(i + 1), *(str(k) for k in indices[cell]), format_float(density[i, cell])]
        if provenance is not None:
            row.append(provenance)
        yield row


def write_snapshots(path, frames, grid, provenance=None):
    """Write (time, density) frames; returns the number of data rows."""
    count = 0
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(snapshot_header(grid, provenance is not None))
        for time, density in frames:
            for row in snapshot_rows(time, density, grid, provenance):
                writer.writerow(row)
                count += 1
    logger.debug(f"Wrote {count} snapshot rows to {path}")
    return count


def load_snapshot(path, grid, num_classes):
    """
    Read the earliest time in a snapshot file as a (num_classes, cells) density.

    Missing rows are zero density.
    """
    density = np.zeros((num_classes, grid.num_cells))
    cell_columns = [f"cell_{axis}" for axis in range(grid.dim)]
    try:
        with open(path, newline="") as handle:
            rows = list(csv.DictReader(handle))
    except OSError as e:
        raise ValidationError(f"Cannot read snapshot file {path}: {e}") from e
    if not rows:
        return density
    missing = {"time", "class", "density", *cell_columns} - set(rows[0])
    if missing:
        raise ValidationError(f"Snapshot file {path} lacks columns: {', '.join(sorted(missing))}")
    try:
        first = min(float(row["time"]) for row in rows)
        for row in rows:
            if float(row["time"]) != first:
                continue
            i = int(row["class"])
            index = tuple(int(row[column]) for column in cell_columns)
            if not 1 <= i <= num_classes:
                raise ValidationError(f"Snapshot class {i} outside 1..{num_classes}")
            if any(not 0 <= k < grid.cells_per_axis for k in index):
                raise ValidationError(f"Snapshot cell {index} outside the {grid.shape} grid")
            density[i - 1, np.ravel_multi_index(index, grid.shape)] = float(row["density"])
    except (TypeError, ValueError) as e:
        raise ValidationError(f"Malformed snapshot file {path}: {e}") from e
    if np.any(density < 0) or not np.all(np.isfinite(density)):
        raise ValidationError(f"Snapshot file {path} holds negative or non-finite densities")
    return density
