"""A uniform interface over every benchmarked estimator.

A :class:`Method` names an estimator family and its fixed options; calling
:meth:`Method.fit` returns a fitted object answering ``predict`` and
``scores`` for any parameter in its grid. Forest methods fit one large forest
and answer smaller ``(n_trees, max_depth)`` settings from sub-forest views.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import L2, Dataset, Metric
from .estimators import Kernel, NeighborSurvival, kernel_by_name
from .evaluation import risk_scores
from .forest import ForestConfig, fit_forest
from .stepfn import kaplan_meier, mean_of, nelson_aalen

NEIGHBOR_KINDS = ("knn", "wknn", "radius", "kernel", "cdfreg", "cdfreg-w")
FOREST_KINDS = ("rsf", "rsf-kernel")
KERNEL_METHODS = ("kernel-box", "kernel-triangle", "kernel-epanechnikov", "kernel-tgauss")
METHOD_NAMES = NEIGHBOR_KINDS + KERNEL_METHODS + FOREST_KINDS


@dataclass(frozen=True)
class Method:
    """An estimator family plus fixed (non-tuned) options."""

    name: str
    kind: str
    kernel: Kernel | None = None
    metric: Metric = L2
    min_leaf: int = 5
    mtry: int | None = None

    @property
    def param_kind(self) -> str:
        if self.kind in FOREST_KINDS:
            return "forest"
        return "h" if self.kind in ("radius", "kernel") else "k"

    def fit(self, train: Dataset, params=(), seed: int = 0):
        """Fit for the given parameter list (forests need the largest setting)."""
        if self.kind in FOREST_KINDS:
            return _FittedForest(self, train, list(params), seed)
        est = NeighborSurvival(self.kind, self.metric, self.kernel, seed).fit(train)
        return _FittedNeighbor(est)


def method_by_name(name: str, metric: Metric = L2, kernel: Kernel | None = None,
                   min_leaf: int = 5, mtry: int | None = None) -> Method:
    """Build a method from a CLI-style name such as ``kernel-tgauss`` or ``rsf``."""
    if name in KERNEL_METHODS:
        fam = name.split("-", 1)[1]
        k = kernel if (kernel is not None and kernel.family == fam) else Kernel(fam)
        return Method(name, "kernel", k, metric)
    if name in NEIGHBOR_KINDS:
        return Method(name, name, kernel if name in ("wknn", "kernel", "cdfreg-w") else None,
                      metric)
    if name in FOREST_KINDS:
        return Method(name, name, None, metric, min_leaf, mtry)
    raise ValueError(f"unknown method {name!r}; choose from {', '.join(METHOD_NAMES)}")


class _FittedNeighbor:
    def __init__(self, est: NeighborSurvival):
        self.est = est

    def predict(self, X, param, what="both"):
        return self.est.predict(X, param, what)

    def scores(self, X, param, grid):
        _, haz = self.est.predict(X, param, "hazard")
        return risk_scores(haz, grid)


class _FittedForest:
    def __init__(self, method: Method, train: Dataset, params, seed):
        self.method = method
        self.train = train
        n_trees = max((p[0] for p in params), default=100)
        depths = [p[1] for p in params]
        depth = None if (not depths or any(d is None for d in depths)) else max(depths)
        self.model = fit_forest(train, ForestConfig(n_trees, depth, method.min_leaf,
                                                    method.mtry, seed))

    def predict(self, X, param, what="both"):
        view = self.model.view(*param)
        X = np.atleast_2d(np.asarray(X, dtype=float))
        surv, haz = [], []
        if self.method.kind == "rsf":
            leaves = view.leaves(X)
            for i in range(X.shape[0]):
                curves = [view.node_curves(b, int(leaves[b, i])) for b in range(view.n_trees)]
                if what in ("both", "survival"):
                    surv.append(mean_of([c[0] for c in curves]))
                if what in ("both", "hazard"):
                    haz.append(mean_of([c[1] for c in curves]))
        else:
            W = view.adaptive_weights(X)
            idx = np.arange(len(self.train))
            for i in range(X.shape[0]):
                if what in ("both", "survival"):
                    surv.append(kaplan_meier(self.train, idx, W[i]))
                if what in ("both", "hazard"):
                    haz.append(nelson_aalen(self.train, idx, W[i]))
        return (surv if what != "hazard" else None, haz if what != "survival" else None)

    def scores(self, X, param, grid):
        if self.method.kind != "rsf":
            _, haz = self.predict(X, param, "hazard")
            return risk_scores(haz, grid)
        # sum over the grid commutes with the tree average
        view = self.model.view(*param)
        grid = np.unique(np.asarray(grid, dtype=float))
        leaves = view.leaves(X)
        out = np.zeros(leaves.shape[1])
        for b in range(view.n_trees):
            uniq, inv = np.unique(leaves[b], return_inverse=True)
            vals = np.array([math.fsum(view.node_curves(b, int(u))[1](grid)) for u in uniq])
            out += vals[inv]
        return out / view.n_trees


def resolve_kernel(name: str | None, sigma: float | None = None) -> Kernel | None:
    return None if name is None else kernel_by_name(name, sigma)
