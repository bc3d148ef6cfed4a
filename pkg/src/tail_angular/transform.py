"""Marginal standardisation to unit-Pareto scale.

The rank transform uses the training empirical CDFs, scaled by ``n/(n+1)`` so
that the column maximum maps to ``n + 1`` instead of infinity::

    v_hat_j(t) = 1 / (1 - n/(n+1) * F_hat_j(t)) = (n + 1) / (n + 1 - count_j(t))

where ``count_j(t)`` is the number of training values ``<= t`` in column j.
Counts are exact integers, so the output depends on the data only through
component-wise ranks.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class Dataset:
    """``n x d`` matrix of observations with optional labels in ``{-1, +1}``."""

    X: np.ndarray
    y: np.ndarray | None = None

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        if X.shape[0] < 1:
            raise ValueError("dataset needs at least one row")
        object.__setattr__(self, "X", X)
        if self.y is not None:
            y = np.asarray(self.y, dtype=int)
            if y.shape != (X.shape[0],):
                raise ValueError("labels must be a vector with one entry per row")
            if not np.all((y == 1) | (y == -1)):
                raise ValueError("labels must be -1 or +1")
            object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class RankModel:
    """Per-column sorted training values; evaluates ``F_hat_j`` by binary search."""

    sorted_columns: np.ndarray  # shape (d, n)

    @property
    def n(self) -> int:
        return self.sorted_columns.shape[1]

    @property
    def d(self) -> int:
        return self.sorted_columns.shape[0]

    def counts(self, X) -> np.ndarray:
        """Number of training values ``<= x_j`` per coordinate."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.d:
            raise ValueError(f"expected {self.d} columns, got {X.shape[1]}")
        out = np.empty(X.shape, dtype=np.int64)
        for j in range(self.d):
            out[:, j] = np.searchsorted(self.sorted_columns[j], X[:, j], side="right")
        return out

    def cdf(self, X) -> np.ndarray:
        return self.counts(X) / self.n

    def transform(self, X) -> np.ndarray:
        c = self.counts(X)
        n1 = self.n + 1
        return n1 / (n1 - c).astype(float)


def fit_ranks(data: Dataset | np.ndarray) -> RankModel:
    X = data.X if isinstance(data, Dataset) else np.atleast_2d(np.asarray(data, dtype=float))
    if X.shape[0] < 1:
        raise ValueError("cannot fit ranks on an empty dataset")
    return RankModel(np.sort(X, axis=0).T.copy())


def transform_hat(model: RankModel, X) -> np.ndarray:
    return model.transform(X)


class Margins:
    """Known marginal distributions; ``standardize`` maps to unit-Pareto scale."""

    def standardize(self, X) -> np.ndarray:
        raise NotImplementedError


class UnitParetoMargins(Margins):
    """``F(x) = 1 - 1/x`` on ``[1, inf)``: the standardisation is the identity there."""

    def standardize(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.maximum(X, 1.0)


class CdfMargins(Margins):
    """Margins given as one CDF callable per column."""

    def __init__(self, cdfs: Sequence[Callable[[np.ndarray], np.ndarray]]):
        self.cdfs = list(cdfs)

    def standardize(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        F = np.column_stack([np.asarray(f(X[:, j]), dtype=float) for j, f in enumerate(self.cdfs)])
        with np.errstate(divide="ignore"):
            return np.where(F >= 1.0, math.inf, 1.0 / (1.0 - F))


def transform_oracle(X, margins: Margins) -> np.ndarray:
    """Exact probability-integral standardisation; ``F_j = 1`` maps to ``inf``."""
    return margins.standardize(X)


def read_dataset(path: str | Path, labeled: bool = False) -> Dataset:
    """Headerless CSV; with ``labeled`` the last column holds ``-1``/``1``."""
    rows, labels = [], []
    with open(path, newline="") as fh:
        for line_no, rec in enumerate(csv.reader(fh), start=1):
            if not rec:
                continue
            if labeled:
                lab = rec[-1].strip()
                if lab not in ("-1", "1"):
                    raise ValueError(f"{path}:{line_no}: label must be -1 or 1, got {lab!r}")
                labels.append(int(lab))
                rec = rec[:-1]
            rows.append([float(v) for v in rec])
    if not rows:
        raise ValueError(f"{path}: no rows")
    return Dataset(np.array(rows), np.array(labels) if labeled else None)


def write_dataset(data: Dataset, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for i in range(data.n):
            row = [repr(float(v)) for v in data.X[i]]
            if data.y is not None:
                row.append(str(int(data.y[i])))
            w.writerow(row)
