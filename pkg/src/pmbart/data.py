"""Tabular data ingestion, cutpoint grids and outcome transforms."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import ndtri


class DataError(ValueError):
    """Raised when input data violates a model's requirements."""


@dataclass(frozen=True)
class Dataset:
    """Covariate matrix ``X`` (n x P), outcome ``y`` and column names."""

    X: np.ndarray
    y: np.ndarray
    column_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DataError(f"X must be a non-empty n x P matrix, got shape {X.shape}")
        if y.shape[0] != X.shape[0]:
            raise DataError(f"X has {X.shape[0]} rows but y has {y.shape[0]} values")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DataError("missing or non-finite values are not supported")
        names = tuple(self.column_names) or tuple(f"x{p}" for p in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DataError(f"{len(names)} column names for {X.shape[1]} covariates")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def P(self) -> int:
        return self.X.shape[1]

    def check_binary(self):
        bad = ~np.isin(self.y, (0.0, 1.0))
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise DataError(
                f"probit models need a 0/1 outcome; row {i} has value {float(self.y[i])!r}"
            )


@dataclass(frozen=True)
class CutpointGrid:
    """Per-covariate strictly increasing candidate split values."""

    cuts: tuple[np.ndarray, ...]

    def __len__(self):
        return len(self.cuts)

    def __getitem__(self, p):
        return self.cuts[p]

    def sizes(self) -> np.ndarray:
        return np.array([len(c) for c in self.cuts], dtype=np.int64)

    def to_lists(self) -> list[list[float]]:
        return [c.tolist() for c in self.cuts]

    @classmethod
    def from_lists(cls, lists) -> CutpointGrid:
        return cls(tuple(np.asarray(c, dtype=float) for c in lists))


@dataclass(frozen=True)
class OutcomeScaling:
    """Affine map between the original outcome and the [-0.5, 0.5] scale."""

    shift: float
    scale: float

    def forward(self, y):
        return (np.asarray(y, dtype=float) - self.shift) / self.scale

    def inverse(self, z):
        return np.asarray(z, dtype=float) * self.scale + self.shift


def load_csv(path, outcome_column: str) -> Dataset:
    """Read a headed, comma-separated numeric table.

    Every column other than `outcome_column` becomes a covariate, in file
    order.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"data file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        if outcome_column not in header:
            raise DataError(
                f"outcome column {outcome_column!r} not found in {path} "
                f"(columns: {', '.join(header)})"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            values = []
            for name, cell in zip(header, row):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"{path}:{lineno}: non-numeric value {cell!r} in column {name!r}"
                    ) from None
            rows.append(values)
    if not rows:
        raise DataError(f"{path} has no data rows")
    table = np.array(rows, dtype=float)
    j = header.index(outcome_column)
    covariates = [h for h in header if h != outcome_column]
    if not covariates:
        raise DataError(f"{path} has no covariate columns")
    X = np.delete(table, j, axis=1)
    return Dataset(X, table[:, j], tuple(covariates))


def make_cutpoint_grid(d: Dataset, num_cut: int = 100) -> CutpointGrid:
    """Equally spaced interior cutpoints between each covariate's min and max."""
    if num_cut < 1:
        raise ValueError("num_cut must be >= 1")
    cuts = []
    for p in range(d.P):
        lo, hi = d.X[:, p].min(), d.X[:, p].max()
        if hi > lo:
            step = (hi - lo) / (num_cut + 1)
            c = lo + step * np.arange(1, num_cut + 1)
            c = np.unique(c[(c > lo) & (c < hi)])
        else:
            c = np.empty(0)
        cuts.append(c)
    return CutpointGrid(tuple(cuts))


def scale_outcome(d: Dataset) -> tuple[Dataset, OutcomeScaling]:
    y = d.y
    lo, hi = float(y.min()), float(y.max())
    if not hi > lo:
        raise DataError("cannot rescale a constant outcome")
    scaling = OutcomeScaling(shift=(lo + hi) / 2, scale=hi - lo)
    return Dataset(d.X, scaling.forward(y), d.column_names), scaling


def compute_offset(y) -> float:
    """Probit offset ``Phi^{-1}(ybar)``, with ``ybar`` clamped to [1/(n+1), n/(n+1)]."""
    y = np.asarray(y, dtype=float)
    n = y.size
    if n == 0:
        raise DataError("empty outcome")
    lo, hi = 1 / (n + 1), n / (n + 1)
    ones = float(np.count_nonzero(y == 1)) if np.isin(y, (0.0, 1.0)).all() else float(y.sum())
    p1 = min(max(ones / n, lo), hi)
    p0 = min(max((n - ones) / n, lo), hi)
    # evaluate on the smaller side so that swapping the labels flips the sign exactly
    return float(ndtri(p1)) if p1 <= p0 else -float(ndtri(p0))
