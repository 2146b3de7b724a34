"""Parameter grids, K-fold cross-validation and IPEC-based choice of k.

Candidates are put in a canonical order first (smaller ``k``, larger ``h``,
fewer trees, shallower trees) and the first candidate attaining the best mean
score wins, so the result does not depend on how the grid was listed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .data import L2, Dataset, Metric, fit_standardizer
from .errors import SurvivalError, UnTunable
from .evaluation import IpecConfig, concordance_index, default_tau, ipec
from .estimators import NeighborSurvival
from .methods import Method
from .stepfn import kaplan_meier

log = logging.getLogger(__name__)

FOREST_TREES = (50, 100, 150, 200)
FOREST_DEPTHS = (3, 4, 5, 6, 7, 8, None)
N_BANDWIDTHS = 20


@dataclass(frozen=True)
class ParamGrid:
    k_values: tuple = ()
    bandwidth_values: tuple = ()
    forest_grid: tuple = ()

    def for_method(self, method: Method) -> list:
        return list({"k": self.k_values, "h": self.bandwidth_values,
                     "forest": self.forest_grid}[method.param_kind])


def k_grid(n: int) -> tuple:
    """Powers of two from 4 up to ``n``."""
    out, k = [], 4
    while k <= n:
        out.append(k)
        k *= 2
    return tuple(out)


def bandwidth_grid(h_max: float, n_points: int = N_BANDWIDTHS) -> tuple:
    return tuple(float(h) for h in np.geomspace(0.01 * h_max, h_max, n_points))


def default_grids(train: Dataset, metric: Metric = L2) -> ParamGrid:
    train.require_nonempty()
    X = train.features
    h_max = float(metric.pairwise(X, X).max()) if len(train) > 1 else 0.0
    bw = bandwidth_grid(h_max) if h_max > 0 else ()
    forest = tuple((t, d) for t in FOREST_TREES for d in FOREST_DEPTHS)
    return ParamGrid(k_grid(len(train)), bw, forest)


def canonical_order(params, kind: str) -> list:
    """Sort candidates smoothest-first and drop duplicates."""
    uniq = list(dict.fromkeys(params))
    if kind == "k":
        return sorted(uniq)
    if kind == "h":
        return sorted(uniq, reverse=True)
    return sorted(uniq, key=lambda p: (p[0], math.inf if p[1] is None else p[1]))


def fold_indices(n: int, folds: int, seed: int) -> list:
    """Seeded partition of ``range(n)`` into ``folds`` nearly equal parts."""
    if folds < 2:
        raise UnTunable("need at least two folds")
    if n < folds:
        raise UnTunable(f"{n} records cannot fill {folds} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(p) for p in np.array_split(perm, folds)]


def censoring_curves(method: Method, train: Dataset, X, param, seed: int = 0,
                     how: str = "same"):
    """Censoring-tail estimates: the same estimator on flipped labels, or plain KM."""
    if how == "km":
        km = kaplan_meier(train.flipped())
        return [km] * len(np.atleast_2d(X))
    if how != "same":
        raise ValueError(f"unknown censoring estimator {how!r}")
    fitted = method.fit(train.flipped(), [param], seed)
    return fitted.predict(X, param, "survival")[0]


def evaluate_criterion(criterion, method, fitted, train, test, param, seed=0,
                       cens="same", theta_lb=1e-6, tau_percentile=75.0) -> float:
    if criterion == "cindex":
        return concordance_index(test, fitted.scores(test.features, param, test.times))
    if criterion == "ipec":
        surv = fitted.predict(test.features, param, "survival")[0]
        cc = censoring_curves(method, train, test.features, param, seed, cens)
        cfg = IpecConfig(default_tau(train.times, tau_percentile), theta_lb)
        return ipec(test, surv, cc, cfg)
    raise ValueError(f"unknown criterion {criterion!r}")


@dataclass
class CVResult:
    best: object
    scores: dict = field(default_factory=dict)
    failed: dict = field(default_factory=dict)
    criterion: str = "cindex"


def cross_validate(train: Dataset, method: Method, grid: ParamGrid | list | None = None,
                   folds: int = 5, criterion: str = "cindex", seed: int = 0,
                   cens: str = "same", theta_lb: float = 1e-6,
                   tau_percentile: float = 75.0) -> CVResult:
    """K-fold CV over the method's parameter grid.

    Each training fold gets its own standardizer. A parameter that raises on
    any fold is discarded with a warning. Returns the argmax c-index (or
    argmin IPEC) with ties going to the smoothest candidate.
    """
    if criterion not in ("cindex", "ipec"):
        raise ValueError(f"unknown criterion {criterion!r}")
    if grid is None:
        grid = default_grids(train, method.metric)
    params = grid.for_method(method) if isinstance(grid, ParamGrid) else list(grid)
    params = canonical_order(params, method.param_kind)
    if not params:
        raise UnTunable(f"empty parameter grid for {method.name}")
    parts = fold_indices(len(train), folds, seed)
    per_fold = {p: [] for p in params}
    failed = {}
    for f, held in enumerate(parts):
        tr_idx = np.setdiff1d(np.arange(len(train)), held)
        std = fit_standardizer(train.subset(tr_idx))
        tr, te = std.apply(train.subset(tr_idx)), std.apply(train.subset(held))
        live = [p for p in params if p not in failed]
        try:
            fitted = method.fit(tr, live, seed + f)
        except SurvivalError as exc:
            for p in live:
                failed[p] = str(exc)
            continue
        for p in live:
            try:
                per_fold[p].append(evaluate_criterion(criterion, method, fitted, tr, te, p,
                                                      seed + f, cens, theta_lb, tau_percentile))
            except SurvivalError as exc:
                failed[p] = f"fold {f}: {exc}"
                log.warning("%s: parameter %r discarded (%s)", method.name, p, failed[p])
    scores = {p: math.fsum(v) / len(v) for p, v in per_fold.items() if p not in failed}
    if not scores:
        raise UnTunable(f"every parameter failed for {method.name}")
    sign = 1.0 if criterion == "cindex" else -1.0
    best = None
    for p in params:
        if p in scores and (best is None or sign * scores[p] > sign * scores[best]):
            best = p
    return CVResult(best, scores, failed, criterion)


def select_k_by_ipec(train: Dataset, validation: Dataset, k_grid_values, cfg: IpecConfig,
                     metric: Metric = L2, seed: int = 0):
    """The ``k`` minimising validation IPEC of k-NN KM, censoring fitted on ``1 - delta``.

    Returns ``(k, {k: ipec})``; ties go to the smaller ``k``.
    """
    train.require_nonempty()
    validation.require_nonempty()
    ks = canonical_order([int(k) for k in k_grid_values], "k")
    ks = [k for k in ks if 1 <= k <= len(train)]
    if not ks:
        raise UnTunable("no admissible k in the grid")
    est = NeighborSurvival("knn", metric, seed=seed).fit(train)
    cens = NeighborSurvival("knn", metric, seed=seed).fit(train.flipped())
    table = {}
    for k in ks:
        s = est.predict(validation.features, k, "survival")[0]
        c = cens.predict(validation.features, k, "survival")[0]
        table[k] = ipec(validation, s, c, cfg)
    best = ks[0]
    for k in ks[1:]:
        if table[k] < table[best]:
            best = k
    return best, table
