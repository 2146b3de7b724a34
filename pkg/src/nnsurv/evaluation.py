"""Harrell's c-index, risk scores from cumulative hazards, the clamped IPEC
score and integrated squared error against a known ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import Dataset
from .errors import InvalidConfig, LengthMismatch, NoComparablePairs
from .stepfn import StepFunction

DEFAULT_THETA_LB = 1e-6


def risk_scores(hazards: Sequence[StepFunction], test_times) -> np.ndarray:
    """``score_i = sum_j H_i(Y*_j)`` over the unique test observed times."""
    grid = np.unique(np.asarray(test_times, dtype=float))
    scores = np.array([math.fsum(h(grid)) for h in hazards], dtype=float)
    if not np.all(np.isfinite(scores)):
        raise ValueError("risk scores must be finite")
    return scores


def concordance_index(test: Dataset, scores) -> float:
    """Harrell's c-index; higher score means higher predicted risk.

    Pairs whose earlier time is censored are dropped; tied-time pairs are kept
    only when at least one subject had an event.
    """
    r = np.asarray(scores, dtype=float).ravel()
    y = test.times
    d = test.events.astype(bool)
    n = len(test)
    if r.shape[0] != n:
        raise LengthMismatch("one risk score per test subject required")
    if n < 2:
        raise NoComparablePairs("need at least two subjects")
    iu, ju = np.triu_indices(n, k=1)
    yi, yj, di, dj, ri, rj = y[iu], y[ju], d[iu], d[ju], r[iu], r[ju]

    # distinct times: the earlier one must be an event
    lt = yi < yj
    gt = yi > yj
    first_event = np.where(lt, di, dj)
    first_risk = np.where(lt, ri, rj)
    other_risk = np.where(lt, rj, ri)
    distinct = (lt | gt) & first_event
    s_distinct = np.where(first_risk > other_risk, 1.0,
                          np.where(first_risk == other_risk, 0.5, 0.0))[distinct]

    tied = yi == yj
    both = tied & di & dj
    s_both = np.where(ri[both] == rj[both], 1.0, 0.5)

    one = tied & (di ^ dj)
    ev_risk = np.where(di, ri, rj)[one]
    ce_risk = np.where(di, rj, ri)[one]
    s_one = np.where(ev_risk > ce_risk, 1.0, 0.5)

    total = s_distinct.size + s_both.size + s_one.size
    if total == 0:
        raise NoComparablePairs("no comparable pairs in the test set")
    return float((math.fsum(s_distinct) + math.fsum(s_both) + math.fsum(s_one)) / total)


@dataclass(frozen=True)
class IpecConfig:
    tau: float
    theta_lb: float = DEFAULT_THETA_LB

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise InvalidConfig(f"tau must be positive and finite, got {self.tau}")
        if not 0 < self.theta_lb < 1:
            raise InvalidConfig(f"theta_lb must be in (0, 1), got {self.theta_lb}")


def default_tau(train_times, percentile: float = 75.0) -> float:
    return float(np.percentile(np.asarray(train_times, dtype=float), percentile))


def _subject_ipec(y, delta, surv: StepFunction, cens: StepFunction, cfg: IpecConfig) -> float:
    tau = cfg.tau
    inner = [surv.jump_times, cens.jump_times]
    if 0 < y < tau:
        inner.append(np.array([y]))
    pts = np.unique(np.concatenate([np.array([0.0, tau]), *inner]))
    pts = pts[(pts >= 0) & (pts <= tau)]
    left, width = pts[:-1], np.diff(pts)
    # every factor is right-continuous and constant on [left, next)
    sc = cens(left)
    alive = (y > left).astype(float)
    died = (delta == 1) & (y <= left)
    sc_y_minus = cens.left_limit(y)
    w = np.where(sc >= cfg.theta_lb,
                 np.where(died, 1.0 / sc_y_minus if sc_y_minus > 0 else 0.0, 0.0)
                 + alive / np.where(sc > 0, sc, 1.0),
                 1.0 / cfg.theta_lb)
    integrand = w * (alive - surv(left)) ** 2
    return math.fsum(integrand * width)


def ipec(test: Dataset, surv_estimates: Sequence[StepFunction],
         cens_estimates: Sequence[StepFunction], cfg: IpecConfig) -> float:
    """Inverse-probability-of-censoring weighted prediction error, integrated over ``[0, tau]``.

    Weights are clamped at ``1 / theta_lb`` wherever the censoring tail
    estimate drops below ``theta_lb``. The integrand is piecewise constant, so
    the integral is summed exactly over the merged breakpoints.
    """
    n = len(test)
    if len(surv_estimates) != n or len(cens_estimates) != n:
        raise LengthMismatch("one survival and one censoring estimate per test subject")
    if n == 0:
        raise InvalidConfig("empty test set")
    parts = [_subject_ipec(float(test.times[i]), int(test.events[i]), surv_estimates[i],
                           cens_estimates[i], cfg) for i in range(n)]
    return math.fsum(parts) / n


def ipec_integrand(y, delta, surv: StepFunction, cens: StepFunction, cfg: IpecConfig):
    """Pointwise integrand ``W(t)(1{y>t} - S(t))^2`` (for quadrature checks)."""
    def f(t):
        sc = cens(t)
        if sc >= cfg.theta_lb:
            w = 1.0 / sc if y > t else (delta / cens.left_limit(y) if delta else 0.0)
        else:
            w = 1.0 / cfg.theta_lb
        return w * (float(y > t) - surv(t)) ** 2
    return f


@dataclass(frozen=True)
class MseResult:
    mse: float
    excess: float
    oracle_mse: float


def mse_vs_truth(estimates: Sequence[StepFunction], truth, points, tau: float) -> MseResult:
    """Integrated squared error of survival estimates against a known model.

    ``mse = int_0^tau mean_x [(S_hat - S)^2 + S(1 - S)] dt``; ``excess`` is
    the part above the irreducible ``int S(1 - S)``.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if len(estimates) != len(points):
        raise LengthMismatch("one estimate per point required")
    excess, oracle = [], []
    for est, x in zip(estimates, points):
        pts = np.concatenate(([0.0], est.jump_times[(est.jump_times > 0)
                                                    & (est.jump_times < tau)], [tau]))
        c = est(pts[:-1])
        sq = 0.0
        for a, b, ci in zip(pts[:-1], pts[1:], c):
            i1 = truth.survival_integral(x, a, b, 1)
            i2 = truth.survival_integral(x, a, b, 2)
            sq += ci * ci * (b - a) - 2.0 * ci * i1 + i2
        excess.append(max(sq, 0.0))
        oracle.append(truth.survival_integral(x, 0.0, tau, 1)
                      - truth.survival_integral(x, 0.0, tau, 2))
    ex = math.fsum(excess) / len(points)
    orc = math.fsum(oracle) / len(points)
    return MseResult(ex + orc, ex, orc)
