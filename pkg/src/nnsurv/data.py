"""Survival records, datasets, feature-space metrics, standardization and CSV I/O."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .errors import (
    DimensionMismatch,
    EmptyDataset,
    EventNotBinary,
    MissingColumn,
    NegativeTime,
    NonNumericValue,
)

logger = logging.getLogger(__name__)

_MISSING = {"", "na", "nan", "null", "none", "?"}


class SurvivalRecord(NamedTuple):
    features: np.ndarray
    observed_time: float
    event: int


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """Right-censored survival data.

    ``features`` has shape ``(n, d)``; ``times`` holds the observed times
    ``Y = min(T, C)`` and ``events`` the indicators ``1{T <= C}``.
    """

    features: np.ndarray
    times: np.ndarray
    events: np.ndarray
    feature_names: tuple = ()
    n_dropped: int = 0

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise DimensionMismatch("features must be a 2-D array")
        t = np.asarray(self.times, dtype=float).ravel()
        e = np.asarray(self.events).ravel()
        if not (len(X) == len(t) == len(e)):
            raise DimensionMismatch(
                f"features/times/events lengths differ: {len(X)}, {len(t)}, {len(e)}")
        if np.any(~np.isfinite(t)):
            raise NonNumericValue("observed times must be finite")
        if np.any(t < 0):
            raise NegativeTime("observed times must be nonnegative")
        if not np.all((e == 0) | (e == 1)):
            raise EventNotBinary("event indicators must be 0 or 1")
        names = tuple(self.feature_names) or tuple(f"x{j}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DimensionMismatch("feature_names length does not match feature dimension")
        object.__setattr__(self, "features", _frozen(X))
        object.__setattr__(self, "times", _frozen(t))
        object.__setattr__(self, "events", _frozen(e, dtype=np.int8))
        object.__setattr__(self, "feature_names", names)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def records(self) -> Iterator[SurvivalRecord]:
        for x, y, d in zip(self.features, self.times, self.events):
            yield SurvivalRecord(x, float(y), int(d))

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.features[idx], self.times[idx], self.events[idx],
                       self.feature_names)

    def with_features(self, features) -> "Dataset":
        return Dataset(features, self.times, self.events, self.feature_names)

    def flipped(self) -> "Dataset":
        """Same data with the event indicator replaced by ``1 - event``.

        Fitting any survival estimator on the flipped data estimates the
        censoring-time tail instead.
        """
        return Dataset(self.features, self.times, 1 - self.events, self.feature_names)

    def require_nonempty(self):
        if len(self) == 0:
            raise EmptyDataset("dataset has no records")
        return self


@dataclass(frozen=True)
class Metric:
    kind: str = "l2"

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in ("l1", "l2"):
            raise ValueError(f"unknown metric {self.kind!r}; expected 'l1' or 'l2'")
        object.__setattr__(self, "kind", kind)

    def __call__(self, a, b) -> float:
        return distance(self, a, b)

    def to_point(self, X, x) -> np.ndarray:
        """Distances from every row of ``X`` to the single point ``x``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        x = np.asarray(x, dtype=float).ravel()
        if X.shape[1] != x.shape[0]:
            raise DimensionMismatch(f"dimension {X.shape[1]} vs {x.shape[0]}")
        diff = np.abs(X - x)
        if self.kind == "l1":
            return diff.sum(axis=1)
        return np.sqrt((diff * diff).sum(axis=1))

    def pairwise(self, A, B) -> np.ndarray:
        """Distance matrix of shape ``(len(A), len(B))``."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        if A.shape[1] != B.shape[1]:
            raise DimensionMismatch(f"dimension {A.shape[1]} vs {B.shape[1]}")
        return cdist(A, B, metric="cityblock" if self.kind == "l1" else "euclidean")


L1 = Metric("l1")
L2 = Metric("l2")


def distance(metric: Metric, a, b) -> float:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimension {a.shape[0]} vs {b.shape[0]}")
    diff = np.abs(a - b)
    if metric.kind == "l1":
        return float(diff.sum())
    return float(math.sqrt(float((diff * diff).sum())))


@dataclass(frozen=True, eq=False)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        scale = _frozen(self.scale)
        if np.any(scale <= 0):
            raise ValueError("scale components must be strictly positive")
        object.__setattr__(self, "mean", _frozen(self.mean))
        object.__setattr__(self, "scale", scale)

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.mean.shape[0]:
            raise DimensionMismatch(f"dimension {X.shape[-1]} vs {self.mean.shape[0]}")
        return (X - self.mean) / self.scale

    def apply(self, data: Dataset) -> Dataset:
        return data.with_features(self.transform(data.features))


def fit_standardizer(data: Dataset) -> Standardizer:
    """Per-feature mean and population standard deviation.

    Constant features get scale 1 so they map to 0 instead of dividing by zero.
    """
    if len(data) == 0:
        raise EmptyDataset("cannot fit a standardizer on an empty dataset")
    X = data.features
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    # sd of a constant column can come out as a few ulps instead of 0
    tiny = 1e-12 * np.maximum(1.0, np.abs(mean))
    scale = np.where(sd > tiny, sd, 1.0)
    return Standardizer(mean, scale)


def _parse_float(raw: str, column: str, row: int) -> float | None:
    s = raw.strip()
    if s.lower() in _MISSING:
        return None
    try:
        v = float(s)
    except ValueError:
        raise NonNumericValue(f"row {row}: column {column!r} has non-numeric value {raw!r}")
    if math.isnan(v):
        return None
    return v


def load_csv(path, time_column: str = "time", event_column: str = "event") -> Dataset:
    """Read a survival dataset from CSV.

    Every numeric column other than the time and event columns becomes a
    feature, in file order. Columns holding any non-numeric text are skipped.
    Rows with any missing cell in a used column are dropped; the count is
    stored on the result as ``n_dropped``.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyDataset(f"{path}: file is empty")
        rows = [r for r in reader if any(c.strip() for c in r)]

    for col in (time_column, event_column):
        if col not in header:
            raise MissingColumn(f"{path}: column {col!r} not found (have {header})")
    ti, ei = header.index(time_column), header.index(event_column)

    feature_cols = []
    for j, name in enumerate(header):
        if j in (ti, ei):
            continue
        try:
            for r in rows:
                if j < len(r):
                    _parse_float(r[j], name, 0)
        except NonNumericValue:
            logger.info("skipping non-numeric column %r", name)
            continue
        feature_cols.append(j)

    X, T, E = [], [], []
    dropped = 0
    for lineno, r in enumerate(rows, start=2):
        r = r + [""] * (len(header) - len(r))
        t = _parse_float(r[ti], time_column, lineno)
        e = _parse_float(r[ei], event_column, lineno)
        feats = [_parse_float(r[j], header[j], lineno) for j in feature_cols]
        if t is None or e is None or any(v is None for v in feats):
            dropped += 1
            continue
        if t < 0:
            raise NegativeTime(f"row {lineno}: negative observed time {t}")
        if e not in (0.0, 1.0):
            raise EventNotBinary(f"row {lineno}: event value {r[ei]!r} is not 0/1")
        X.append(feats)
        T.append(t)
        E.append(int(e))

    if dropped:
        logger.warning("%s: dropped %d row(s) with missing values", path, dropped)
    d = len(feature_cols)
    features = np.array(X, dtype=float).reshape(len(X), d)
    return Dataset(features, T, E, tuple(header[j] for j in feature_cols), n_dropped=dropped)


def write_csv(data: Dataset, path, time_column: str = "time", event_column: str = "event",
              extra_columns: dict[str, Sequence[float]] | None = None) -> None:
    extra_columns = extra_columns or {}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([*data.feature_names, time_column, event_column, *extra_columns])
        extras = list(extra_columns.values())
        for i in range(len(data)):
            w.writerow([*(repr(float(v)) for v in data.features[i]),
                        repr(float(data.times[i])), int(data.events[i]),
                        *(repr(float(col[i])) for col in extras)])
