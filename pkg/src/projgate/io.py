"""CSV reading and writing for curve/observation matrices.

Layout: comma separated, ``.`` decimal point, one observation per row.

* A leading row-name column is detected when the first cell of the last row
  is not a number.
* Row 0 is a header when any of its value cells is not a number, when its
  row-name cell is blank, or when ``header="grid"`` is requested.
* A header whose value cells are numbers in strictly increasing order is a
  grid of abscissae and switches on functional mode.
"""

from __future__ import annotations

import csv
import io
import math
import sys

import numpy as np

from .core import Grid, ObservationSet


class DataError(ValueError):
    """Malformed input data; the CLI maps it to exit status 2."""


def _num(cell):
    try:
        v = float(cell)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def _read_text(path):
    if str(path) == "-":
        return sys.stdin.read()
    with open(path, newline="", encoding="utf-8") as fh:
        return fh.read()


def parse_observations(text, header="auto"):
    if header not in ("auto", "grid", "none"):
        raise ValueError("header must be auto, grid or none")
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    rows = [[c.strip() for c in r] for r in rows]
    if not rows:
        raise DataError("no data rows")
    has_names = _num(rows[-1][0]) is None
    off = 1 if has_names else 0

    head = None
    if header == "grid":
        head = rows.pop(0)
    elif header == "auto" and len(rows) > 1:
        first = rows[0]
        if any(_num(c) is None for c in first[off:]) or (has_names and first[0] == ""):
            head = rows.pop(0)
    if not rows:
        raise DataError("header present but no data rows")
    line0 = 2 if head is not None else 1

    width = len(rows[0])
    if width - off < 1:
        raise DataError(f"row {line0}: no numeric columns")
    if head is not None and len(head) != width:
        raise DataError(f"header has {len(head)} cells but row {line0} has {width}")
    values = np.empty((len(rows), width - off))
    names = []
    for i, r in enumerate(rows):
        line = line0 + i
        if len(r) != width:
            raise DataError(f"row {line}: expected {width} cells, got {len(r)}")
        if has_names:
            if _num(r[0]) is not None or r[0] == "":
                raise DataError(f"row {line}, column 1: expected a row name, got {r[0]!r}")
            names.append(r[0])
        for j, c in enumerate(r[off:]):
            v = _num(c)
            if v is None:
                raise DataError(f"row {line}, column {j + off + 1}: not a finite number: {c!r}")
            values[i, j] = v

    grid = None
    if head is not None:
        pts = [_num(c) for c in head[off:]]
        if all(p is not None for p in pts):
            if len(pts) < 2 or any(b <= a for a, b in zip(pts, pts[1:])):
                if header == "grid":
                    raise DataError("grid header must be strictly increasing with at least 2 points")
            else:
                grid = Grid(pts)
        elif header == "grid":
            raise DataError("grid header contains non-numeric cells")
    return ObservationSet(values, grid=grid, row_names=tuple(names) if has_names else None)


def read_observations(path, header="auto"):
    try:
        text = _read_text(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    return parse_observations(text, header)


def fmt(x):
    """Shortest text that parses back to the same float."""
    return repr(float(x))


def write_observations(path, data):
    """Write ``data`` so that :func:`read_observations` restores it exactly."""
    names = data.row_names or tuple(f"r{i + 1}" for i in range(data.n))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if data.grid is not None:
            w.writerow([""] + [fmt(p) for p in data.grid.points])
        for name, row in zip(names, data.values):
            w.writerow([name] + [fmt(v) for v in row])


def write_weights(path, weights, row_names=None):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "name", "weight"])
        for i, wt in enumerate(weights):
            w.writerow([i + 1, row_names[i] if row_names else "", int(wt)])


def read_weights(path):
    """Weights from a ``row,name,weight`` file or a single 0/1 column."""
    try:
        text = _read_text(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    if not rows:
        raise DataError("weights file is empty")
    col = 0
    if "weight" in [c.strip() for c in rows[0]]:
        col = [c.strip() for c in rows[0]].index("weight")
        rows = rows[1:]
    out = []
    for i, r in enumerate(rows):
        v = _num(r[col]) if col < len(r) else None
        if v not in (0.0, 1.0):
            raise DataError(f"weights row {i + 1}: expected 0 or 1, got {r!r}")
        out.append(int(v))
    return np.array(out, dtype=np.int8)
