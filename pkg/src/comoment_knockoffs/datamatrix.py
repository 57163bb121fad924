"""Observation matrix with column labels, plus deterministic CSV round-tripping.

All numeric output uses Python's shortest round-trip ``repr`` so that a file
written twice from the same array is byte-identical and re-reads to the exact
same floats.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def default_columns(p):
    return [f"x{i + 1}" for i in range(p)]


@dataclass
class DataMatrix:
    """An n-observations x p-features real matrix.

    values : ndarray, shape (n, p)
    columns : list of p column names (defaults to x1..xp)
    """

    values: np.ndarray
    columns: list = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {self.values.shape}")
        if self.columns is None:
            self.columns = default_columns(self.values.shape[1])
        if len(self.columns) != self.values.shape[1]:
            raise ValueError(
                f"{len(self.columns)} column names for {self.values.shape[1]} columns"
            )
        if not np.isfinite(self.values).all():
            raise ValueError("data matrix contains non-finite values")

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    def column(self, j):
        return self.values[:, j]

    def copy(self):
        return DataMatrix(self.values.copy(), list(self.columns))

    def with_values(self, values):
        """Same column metadata, new values (shape must match)."""
        values = np.asarray(values, dtype=float)
        if values.shape != self.values.shape:
            raise ValueError(f"shape {values.shape} != {self.values.shape}")
        return DataMatrix(values, list(self.columns))

    def to_csv(self, path):
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in self.values:
                writer.writerow([repr(float(v)) for v in row])
        return path

    @classmethod
    def from_csv(cls, path):
        with Path(path).open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [[float(v) for v in row] for row in reader if row]
        if not rows:
            raise ValueError(f"{path}: no data rows")
        return cls(np.array(rows, dtype=float), header)
