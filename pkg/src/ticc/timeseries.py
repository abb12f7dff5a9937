"""Raw multivariate time-series ingestion and subsequence stacking.

A time series is a T x n matrix of sequential observations. The clustering
pipeline never works on single observations directly: each point x_t is
replaced by the stacked window [x_{t-w+1}; ...; x_t] of the w most recent
observations, giving a T x (n*w) subsequence matrix with one row per point.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TimeSeries:
    """A T x n matrix of raw sequential observations, row t = x_t."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=float)
        if d.ndim != 2:
            raise ValueError(f"time series data must be 2-d, got shape {d.shape}")
        if d.shape[0] < 1 or d.shape[1] < 1:
            raise ValueError(f"time series needs T >= 1 and n >= 1, got shape {d.shape}")
        if not np.all(np.isfinite(d)):
            t, j = np.argwhere(~np.isfinite(d))[0]
            raise ValueError(f"non-finite value at row {t + 1}, column {j + 1}")
        object.__setattr__(self, "data", _freeze(d))

    @property
    def T(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class SubsequenceMatrix:
    """Stacked windows: row t is the n*w vector [x_{t-w+1}; ...; x_t].

    Rows with t < w are left-padded by replicating x_1 so that every row has
    the same dimension and every point receives a cluster assignment.
    """

    rows: np.ndarray
    n: int
    w: int

    def __post_init__(self):
        r = np.asarray(self.rows, dtype=float)
        if r.ndim != 2 or r.shape[1] != self.n * self.w:
            raise ValueError(
                f"rows must be T x (n*w) = T x {self.n * self.w}, got shape {r.shape}"
            )
        object.__setattr__(self, "rows", _freeze(r))

    @property
    def T(self) -> int:
        return self.rows.shape[0]

    @property
    def nw(self) -> int:
        return self.n * self.w


@dataclass(frozen=True)
class EmpiricalStats:
    """Sample mean, biased sample covariance and member count of a cluster."""

    mean: np.ndarray
    cov: np.ndarray
    count: int

    def __post_init__(self):
        object.__setattr__(self, "mean", _freeze(self.mean))
        object.__setattr__(self, "cov", _freeze(self.cov))


def load_csv(path, has_header: bool = False) -> TimeSeries:
    """Load a time series from a CSV file.

    Parameters
    ----------
    path : str or Path
        Comma-separated file, one observation per row, row order = time order.
    has_header : bool
        If True, the first line is skipped.

    Returns
    -------
    TimeSeries

    Raises
    ------
    ValueError
        Empty file, ragged rows or non-numeric cells, with the offending
        line/column in the message. Line numbers are 1-based file positions.
    """
    rows: list[list[float]] = []
    width = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, record in enumerate(reader, start=1):
            if has_header and lineno == 1:
                continue
            if len(record) == 0:
                continue
            if width is None:
                width = len(record)
            elif len(record) != width:
                raise ValueError(
                    f"{path}: line {lineno}: expected {width} columns, found {len(record)}"
                )
            parsed = []
            for col, cell in enumerate(record, start=1):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"{path}: line {lineno}, column {col}: "
                        f"could not parse {cell.strip()!r} as a number"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise ValueError(f"{path}: file contains no data rows")
    return TimeSeries(np.array(rows, dtype=float))


def save_csv(ts: TimeSeries, path, header: list[str] | None = None) -> None:
    """Write a time series as CSV; float repr keeps values round-trip exact."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if header is not None:
            writer.writerow(header)
        for row in ts.data:
            writer.writerow([repr(float(v)) for v in row])


def stack_windows(ts: TimeSeries, w: int) -> SubsequenceMatrix:
    """Stack each observation with its w-1 predecessors.

    Row t of the result is the concatenation [x_{t-w+1}; ...; x_t]; for
    t < w the missing leading positions are filled with x_1. There is a
    bijection between rows and original points (row t <-> x_t), and the
    last n entries of row t always equal x_t.
    """
    if w < 1 or w > ts.T:
        raise ValueError(f"window size must satisfy 1 <= w <= T={ts.T}, got {w}")
    T, n = ts.T, ts.n
    rows = np.empty((T, n * w))
    for s in range(w):
        # source index for slot s of row t is max(t - w + 1 + s, 0)
        idx = np.maximum(np.arange(T) - (w - 1) + s, 0)
        rows[:, s * n:(s + 1) * n] = ts.data[idx]
    return SubsequenceMatrix(rows, n=n, w=w)


def empirical_stats(subseq: SubsequenceMatrix, members) -> EmpiricalStats:
    """Mean and biased covariance of the subsequence rows in ``members``.

    The covariance divides by the member count (maximum-likelihood form),
    so a single-member cluster has a zero covariance matrix.
    """
    idx = np.asarray(sorted(members), dtype=int)
    if idx.size == 0:
        raise ValueError("member set must be nonempty")
    pts = subseq.rows[idx]
    mean = pts.mean(axis=0)
    diff = pts - mean
    cov = diff.T @ diff / idx.size
    cov = (cov + cov.T) / 2.0
    return EmpiricalStats(mean=mean, cov=cov, count=int(idx.size))
