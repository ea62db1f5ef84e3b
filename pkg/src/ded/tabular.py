"""CSV ingestion and emission, plus crash-safe file writes."""

from __future__ import annotations

import csv
import math
import os
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np


class IngestError(ValueError):
    pass


@dataclass
class Dataset:
    points: np.ndarray
    columns: Optional[list[str]] = None
    transform: Optional[dict] = None

    @property
    def d(self) -> int:
        return self.points.shape[1]


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_matrix(path) -> tuple[np.ndarray, Optional[list[str]]]:
    """Parse a numeric CSV; a first row with any non-numeric cell is a header."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [(lineno, row) for lineno, row in enumerate(csv.reader(fh), start=1) if row and any(c.strip() for c in row)]
    if not rows:
        raise IngestError(f"{path}: no data rows")
    header = None
    if not all(_is_number(c) for c in rows[0][1]):
        header = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
    if not rows:
        raise IngestError(f"{path}: no data rows")
    width = len(header) if header else len(rows[0][1])
    data = np.empty((len(rows), width))
    bad_lines = []
    for r, (lineno, row) in enumerate(rows):
        if len(row) != width:
            raise IngestError(f"{path}: line {lineno} has {len(row)} columns, expected {width}")
        for c, cell in enumerate(row):
            try:
                data[r, c] = float(cell)
            except ValueError:
                raise IngestError(f"{path}: line {lineno} column {c + 1} is not numeric: {cell.strip()!r}") from None
        if not np.all(np.isfinite(data[r])):
            bad_lines.append(lineno)
    if bad_lines:
        raise IngestError(f"{path}: non-finite values on lines {bad_lines}")
    return data, header


def ingest(path, rescale: bool = False) -> Dataset:
    """Load points; with ``rescale`` map each column min-max onto [0, 1]."""
    X, header = read_matrix(path)
    if not rescale:
        return Dataset(X, header)
    lo, hi = X.min(axis=0), X.max(axis=0)
    flat = np.flatnonzero(hi <= lo)
    if flat.size:
        j = int(flat[0])
        name = header[j] if header else f"column {j + 1}"
        raise IngestError(f"{path}: {name} is constant, cannot rescale")
    transform = {"min": lo.tolist(), "max": hi.tolist()}
    return Dataset(apply_transform(X, transform), header, transform)


def apply_transform(X, transform: Optional[dict]) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if not transform:
        return X
    lo, hi = np.asarray(transform["min"]), np.asarray(transform["max"])
    return (X - lo) / (hi - lo)


def transform_jacobian(transform: Optional[dict]) -> float:
    """Volume factor from raw coordinates to the unit cube."""
    if not transform:
        return 1.0
    return float(np.prod(1.0 / (np.asarray(transform["max"]) - np.asarray(transform["min"]))))


def fmt(v: float) -> str:
    return "%.17g" % v


def matrix_to_csv(X, header: Optional[Sequence[str]] = None) -> str:
    lines = []
    if header:
        lines.append(",".join(header))
    for row in np.atleast_2d(X):
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def rows_to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    def cell(v):
        if isinstance(v, float):
            return fmt(v) if math.isfinite(v) else str(v)
        return "" if v is None else str(v)

    lines = [",".join(header)]
    lines += [",".join(cell(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


@contextmanager
def atomic_outputs():
    """Collect ``(path, text)`` writes and publish them only if the block succeeds.

    Each file is written to a temporary sibling and renamed into place; on any
    exception the temporaries are removed and nothing is published.
    """
    staged: list[tuple[Path, str]] = []
    yield staged
    temps = []
    try:
        for path, text in staged:
            path = Path(path)
            fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
            temps.append((tmp, path))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        for tmp, path in temps:
            os.replace(tmp, path)
    except BaseException:
        for tmp, _ in temps:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise
