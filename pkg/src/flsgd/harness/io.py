"""CSV emission and curve ingestion."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..errors import GridMismatch, ParseError
from ..grid import DiscreteFunction, Grid


def fmt(x) -> str:
    """Shortest repr that round-trips exactly."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if x is None:
        return ""
    return repr(float(x))


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def export_curves(path: str | Path, pairs: Sequence[tuple[DiscreteFunction, float]], grid: Grid) -> Path:
    header = ["y"] + [f"x_{i}" for i in range(1, grid.size + 1)]
    return write_csv(path, header, ([y, *X.values] for X, y in pairs))


def ingest_curves(path: str | Path, grid: Grid) -> list[tuple[DiscreteFunction, float]]:
    """Read ``y,x_1,...,x_m`` rows into (X, Y) pairs on ``grid``."""
    m = grid.size
    out: list[tuple[DiscreteFunction, float]] = []
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return out
        if not header or header[0].strip() != "y":
            raise ParseError("header must start with 'y'", line=1)
        if len(header) - 1 != m:
            raise GridMismatch(f"file declares {len(header) - 1} grid values, grid has {m}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != m + 1:
                raise ParseError(f"line {lineno}: expected {m + 1} fields, got {len(row)}", line=lineno)
            try:
                vals = [float(v) for v in row]
            except ValueError as exc:
                raise ParseError(f"line {lineno}: {exc}", line=lineno) from exc
            if not np.all(np.isfinite(vals)):
                raise ParseError(f"line {lineno}: non-finite value", line=lineno)
            out.append((DiscreteFunction(vals[1:], grid), vals[0]))
    return out
