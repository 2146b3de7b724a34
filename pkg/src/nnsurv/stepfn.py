"""Right-continuous step functions and the product-limit / cumulative-hazard
estimators computed over arbitrary weighted subsets of subjects."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import AllWeightsZero, EmptySubset, InvalidInterval, LengthMismatch


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Piecewise-constant, right-continuous function of time.

    ``f(t) = values[j]`` for the largest ``jump_times[j] <= t`` and
    ``initial`` before the first jump.
    """

    jump_times: np.ndarray
    values: np.ndarray
    initial: float = 1.0

    def __post_init__(self):
        t = np.array(self.jump_times, dtype=float).ravel()
        v = np.array(self.values, dtype=float).ravel()
        if t.shape != v.shape:
            raise LengthMismatch("jump_times and values differ in length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("jump_times must be strictly increasing")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "jump_times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "initial", float(self.initial))

    @classmethod
    def constant(cls, value: float) -> "StepFunction":
        return cls(np.empty(0), np.empty(0), value)

    def __call__(self, t):
        """Evaluate at scalar or array ``t``."""
        t_arr = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.jump_times, t_arr, side="right")
        out = np.concatenate(([self.initial], self.values))[idx]
        return float(out) if out.ndim == 0 else out

    def left_limit(self, t):
        """``lim_{s -> t^-} f(s)``."""
        t_arr = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.jump_times, t_arr, side="left")
        out = np.concatenate(([self.initial], self.values))[idx]
        return float(out) if out.ndim == 0 else out

    def __len__(self):
        return len(self.jump_times)

    def __eq__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        return (self.initial == other.initial
                and np.array_equal(self.jump_times, other.jump_times)
                and np.array_equal(self.values, other.values))

    __hash__ = None

    def __repr__(self):
        return (f"StepFunction(initial={self.initial!r}, "
                f"jumps={list(zip(self.jump_times.tolist(), self.values.tolist()))!r})")

    def map(self, fn: Callable[[np.ndarray], np.ndarray], initial=None) -> "StepFunction":
        init = fn(np.array([self.initial]))[0] if initial is None else initial
        return StepFunction(self.jump_times, fn(self.values), init)

    def to_csv(self, path_or_file) -> None:
        """Write ``(t, value)`` pairs, starting with the value at ``t = 0``."""
        close = False
        if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
            fh = open(path_or_file, "w", newline="", encoding="utf-8")
            close = True
        else:
            fh = path_or_file
        try:
            w = csv.writer(fh)
            w.writerow(["t", "value"])
            if len(self) == 0 or self.jump_times[0] > 0:
                w.writerow([0.0, repr(self.initial)])
            for t, v in zip(self.jump_times, self.values):
                w.writerow([repr(float(t)), repr(float(v))])
        finally:
            if close:
                fh.close()


def mean_of(functions: Sequence[StepFunction]) -> StepFunction:
    """Exact pointwise mean, represented on the union of all jump times."""
    if not functions:
        raise ValueError("need at least one step function")
    if len(functions) == 1:
        return functions[0]
    grid = np.unique(np.concatenate([f.jump_times for f in functions]))
    n = len(functions)
    vals = np.zeros(len(grid))
    init = 0.0
    for f in functions:
        vals += f(grid)
        init += f.initial
    return StepFunction(grid, vals / n, init / n)


@dataclass(frozen=True, eq=False)
class RiskTable:
    """Per unique observed time: weighted deaths and weighted number at risk."""

    times: np.ndarray
    deaths: np.ndarray
    at_risk: np.ndarray

    @property
    def death_mask(self) -> np.ndarray:
        return self.deaths > 0


def _subset_arrays(times, events, subset, weights):
    times = np.asarray(times, dtype=float)
    events = np.asarray(events)
    if subset is None:
        idx = np.arange(len(times))
    else:
        idx = np.asarray(subset, dtype=int).ravel()
    if idx.size == 0:
        raise EmptySubset("subset is empty")
    if weights is None:
        w = np.ones(idx.size)
    else:
        w = np.asarray(weights, dtype=float).ravel()
        if w.shape != idx.shape:
            raise LengthMismatch("weights must match the subset length")
        if np.any(w < 0) or np.any(~np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        if not np.any(w > 0):
            raise AllWeightsZero("all weights are zero")
    # canonical order so results never depend on how the subset was listed
    order = np.argsort(idx, kind="stable")
    idx, w = idx[order], w[order]
    keep = w > 0
    return times[idx[keep]], events[idx[keep]].astype(float), w[keep]


def risk_table(times, events, subset=None, weights=None) -> RiskTable:
    y, d, w = _subset_arrays(times, events, subset, weights)
    uniq, inv = np.unique(y, return_inverse=True)
    deaths = np.bincount(inv, weights=w * d, minlength=len(uniq))
    mass = np.bincount(inv, weights=w, minlength=len(uniq))
    at_risk = np.cumsum(mass[::-1])[::-1]
    return RiskTable(uniq, deaths, at_risk)


def _unpack(data, subset, weights):
    return risk_table(data.times, data.events, subset, weights)


def kaplan_meier(data, subset=None, weights=None) -> StepFunction:
    """Kaplan-Meier survival curve restricted to ``subset``, optionally weighted.

    With weights this is the kernel product-limit form: deaths and at-risk
    counts are weight sums and zero-weight subjects drop out entirely.
    """
    return _km_from_table(_unpack(data, subset, weights))


def _km_from_table(rt: RiskTable) -> StepFunction:
    m = (rt.deaths > 0) & (rt.at_risk > 0)
    factors = 1.0 - rt.deaths[m] / rt.at_risk[m]
    surv = np.clip(np.cumprod(factors), 0.0, 1.0)
    return StepFunction(rt.times[m], surv, 1.0)


def nelson_aalen(data, subset=None, weights=None) -> StepFunction:
    """Nelson-Aalen cumulative hazard restricted to ``subset``."""
    return _na_from_table(_unpack(data, subset, weights))


def _na_from_table(rt: RiskTable) -> StepFunction:
    m = (rt.deaths > 0) & (rt.at_risk > 0)
    return StepFunction(rt.times[m], np.cumsum(rt.deaths[m] / rt.at_risk[m]), 0.0)


def empirical_cdf(samples) -> StepFunction:
    z = np.asarray(samples, dtype=float).ravel()
    if z.size == 0:
        raise EmptySubset("no samples")
    uniq, counts = np.unique(z, return_counts=True)
    return StepFunction(uniq, np.cumsum(counts) / z.size, 0.0)


def weighted_edf(samples, weights) -> StepFunction:
    """``F(t) = sum_i w_i 1{Z_i <= t} / sum_j w_j``."""
    z = np.asarray(samples, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if z.shape != w.shape:
        raise LengthMismatch("samples and weights differ in length")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if z.size == 0 or not np.any(w > 0):
        raise AllWeightsZero("weight sum must be positive")
    if np.all(w == w[0]):
        # equal weights cancel; use exact counts
        return empirical_cdf(z)
    keep = w > 0
    z, w = z[keep], w[keep]
    uniq, inv = np.unique(z, return_inverse=True)
    mass = np.bincount(inv, weights=w, minlength=len(uniq))
    cum = np.cumsum(mass)
    vals = cum / cum[-1]
    vals[-1] = 1.0
    return StepFunction(uniq, vals, 0.0)


def sup_norm_distance(f: StepFunction, g: Callable, tau: float, grid_size: int = 1000,
                      lower: float = 0.0) -> float:
    """``max |f(t) - g(t)|`` over ``[lower, tau]`` for step ``f`` and continuous ``g``.

    Checks both one-sided limits at every jump of ``f`` inside the interval,
    the endpoints, and a uniform grid of ``grid_size`` points.
    """
    if not (tau > lower) or not np.isfinite(tau):
        raise InvalidInterval(f"need {lower} < tau < inf, got tau={tau}")
    if grid_size < 2:
        raise InvalidInterval("grid_size must be at least 2")
    jt = f.jump_times[(f.jump_times >= lower) & (f.jump_times <= tau)]
    pts = np.concatenate(([lower, tau], jt, np.linspace(lower, tau, grid_size)))
    gv = np.asarray(g(pts), dtype=float)
    best = float(np.max(np.abs(f(pts) - gv)))
    if jt.size:
        gl = np.asarray(g(jt), dtype=float)
        best = max(best, float(np.max(np.abs(f.left_limit(jt) - gl))))
    return best


def union_times(functions: Iterable[StepFunction]) -> np.ndarray:
    arrs = [f.jump_times for f in functions]
    return np.unique(np.concatenate(arrs)) if arrs else np.empty(0)
