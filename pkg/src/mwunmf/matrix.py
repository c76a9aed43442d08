"""Dense real matrices: validated float64 arrays with fixed-order products and CSV I/O.

Matrices are plain 2-D ``numpy.ndarray`` objects (C order, float64). The
constructor :func:`dense` validates shape and finiteness and returns a
read-only array, so a validated matrix can be shared freely.
"""

from __future__ import annotations

import csv
import math
import os
from pathlib import Path

import numpy as np

from ._backend import core


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class CsvParseError(ValueError):
    """A matrix file is empty or ragged, or holds a non-numeric token."""

    def __init__(self, message, row=None, col=None):
        loc = ""
        if row is not None:
            loc = f" (row {row}" + (f", column {col}" if col is not None else "") + ")"
        super().__init__(message + loc)
        self.row = row
        self.col = col


def dense(data, *, writeable=False) -> np.ndarray:
    """Build a validated 2-D float64 matrix from ``data``.

    Raises ValueError on NaN/Inf or empty dimensions and DimensionError if
    ``data`` is not two-dimensional.
    """
    a = np.array(data, dtype=np.float64, order="C", copy=True)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"matrix dimensions must be positive, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    a.flags.writeable = writeable
    return a


def identity(n: int) -> np.ndarray:
    return dense(np.eye(n))


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with index-ascending accumulation (bit-reproducible)."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return core.matmul(_c(a), _c(b))


def sequential_sum(a: np.ndarray) -> float:
    """Row-major left-to-right sum of all entries."""
    a = _c(a)
    return core.seqsum(a.reshape(1, -1) if a.ndim != 2 else a)


def frobenius_norm(a: np.ndarray) -> float:
    a = _c(a)
    return math.sqrt(core.seqsum(a * a))


def read_csv(path: str | os.PathLike) -> np.ndarray:
    """Read a headerless numeric CSV into a matrix.

    Blank trailing lines are ignored; anything else that breaks the
    rectangular, all-numeric layout raises :class:`CsvParseError` naming the
    offending 1-based row (and column for bad tokens).
    """
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, fields in enumerate(csv.reader(fh), start=1):
            if not fields or (len(fields) == 1 and not fields[0].strip()):
                continue
            row = []
            for colno, tok in enumerate(fields, start=1):
                try:
                    x = float(tok)
                except ValueError:
                    raise CsvParseError(f"non-numeric token {tok.strip()!r}", lineno, colno) from None
                if not math.isfinite(x):
                    raise CsvParseError(f"non-finite value {tok.strip()!r}", lineno, colno)
                row.append(x)
            if rows and len(row) != len(rows[0]):
                raise CsvParseError(
                    f"ragged row: expected {len(rows[0])} columns, found {len(row)}", lineno
                )
            rows.append(row)
    if not rows:
        raise CsvParseError(f"empty matrix file {os.fspath(path)!r}")
    return dense(rows)


def format_matrix(a: np.ndarray) -> str:
    # repr() of a Python float is the shortest string that round-trips
    return "".join(",".join(repr(float(x)) for x in row) + "\n" for row in np.asarray(a))


def write_csv(a: np.ndarray, path: str | os.PathLike) -> None:
    Path(path).write_text(format_matrix(a), encoding="utf-8", newline="\n")
