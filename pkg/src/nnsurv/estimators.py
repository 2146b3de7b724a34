"""Conditional survival and cumulative-hazard estimators at a query point.

Neighborhoods are found by brute force over the training set. Every mode
returns ``(indices, weights)``; the estimators then run the (weighted)
Kaplan-Meier or Nelson-Aalen computation over that neighborhood.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import L2, Dataset, Metric
from .errors import DegenerateTail, KTooLarge, NoNeighbors
from .stepfn import StepFunction, kaplan_meier, nelson_aalen

KERNEL_FAMILIES = ("box", "triangle", "epanechnikov", "tgauss")


@dataclass(frozen=True)
class Kernel:
    """Non-increasing weight function with support cutoff ``phi = 1``.

    ``tgauss`` is ``exp(-s^2 / (2 sigma^2)) 1{s <= 1}``.
    """

    family: str = "box"
    sigma: float = 1.0

    phi = 1.0

    def __post_init__(self):
        fam = self.family.lower()
        aliases = {"epa": "epanechnikov", "gauss": "tgauss", "truncated-gaussian": "tgauss",
                   "tri": "triangle"}
        fam = aliases.get(fam, fam)
        if fam not in KERNEL_FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        object.__setattr__(self, "family", fam)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        inside = s <= self.phi
        if self.family == "box":
            out = inside.astype(float)
        elif self.family == "triangle":
            out = np.where(inside, np.maximum(1.0 - s, 0.0), 0.0)
        elif self.family == "epanechnikov":
            out = np.where(inside, np.maximum(1.0 - s * s, 0.0), 0.0)
        else:
            out = np.where(inside, np.exp(-(s * s) / (2.0 * self.sigma ** 2)), 0.0)
        return float(out) if out.ndim == 0 else out

    @property
    def kappa(self) -> float:
        """``K(phi) / K(0)``; zero for kernels that vanish at the cutoff."""
        return float(self(self.phi)) / float(self(0.0))

    @property
    def name(self) -> str:
        if self.family == "tgauss":
            return f"tgauss{self.sigma:g}"
        return self.family


@dataclass(frozen=True, eq=False)
class NeighborQuery:
    """Where to estimate and how to pick the neighborhood.

    ``mode`` is one of ``knn``, ``wknn``, ``radius``, ``kernel``. ``k`` applies
    to the first two, ``h`` to the last two; ``kernel`` to ``wknn`` and
    ``kernel``.
    """

    x: np.ndarray
    mode: str = "knn"
    k: int | None = None
    h: float | None = None
    kernel: Kernel | None = None
    metric: Metric = L2
    seed: int | tuple = 0

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).ravel())
        mode = self.mode.lower()
        if mode not in ("knn", "wknn", "radius", "kernel"):
            raise ValueError(f"unknown neighbor mode {self.mode!r}")
        object.__setattr__(self, "mode", mode)
        if mode in ("knn", "wknn"):
            if self.k is None or int(self.k) < 1:
                raise ValueError("k must be a positive integer")
            object.__setattr__(self, "k", int(self.k))
        else:
            if self.h is None or not self.h > 0:
                raise ValueError("bandwidth h must be positive")
        if mode == "wknn" and self.kernel is None:
            object.__setattr__(self, "kernel", Kernel("triangle"))
        if mode == "kernel" and self.kernel is None:
            object.__setattr__(self, "kernel", Kernel("box"))


def _rng(seed):
    if isinstance(seed, (tuple, list)):
        return np.random.default_rng([int(s) for s in seed])
    return np.random.default_rng(int(seed))


def neighbors_from_distances(dist: np.ndarray, q: NeighborQuery, rng=None):
    """Neighborhood selection given precomputed distances to the query."""
    n = dist.shape[0]
    if q.mode in ("knn", "wknn"):
        if q.k > n:
            raise KTooLarge(f"k={q.k} exceeds training size {n}")
        rng = _rng(q.seed) if rng is None else rng
        # random secondary key breaks distance ties uniformly
        tiebreak = rng.permutation(n)
        order = np.lexsort((tiebreak, dist))
        idx = order[:q.k]
        if q.mode == "knn":
            return idx, np.ones(q.k)
        dk = dist[idx[-1]]
        if dk == 0:
            w = np.ones(q.k)
        else:
            w = q.kernel(dist[idx] / dk)
        keep = w > 0
        if not np.any(keep):
            raise NoNeighbors("all weighted k-NN weights are zero")
        return idx[keep], w[keep]

    if q.mode == "radius":
        idx = np.flatnonzero(dist <= q.h)
        if idx.size == 0:
            raise NoNeighbors(f"no training point within distance {q.h}")
        return idx, np.ones(idx.size)

    idx = np.flatnonzero(dist <= q.kernel.phi * q.h)
    w = q.kernel(dist[idx] / q.h) if idx.size else np.empty(0)
    keep = w > 0
    if not np.any(keep):
        raise NoNeighbors(f"no training point with positive kernel weight at h={q.h}")
    return idx[keep], w[keep]


def find_neighbors(data: Dataset, q: NeighborQuery):
    """Indices and weights of the neighborhood of ``q.x`` in ``data``."""
    dist = q.metric.to_point(data.features, q.x)
    return neighbors_from_distances(dist, q)


def estimate_survival(data: Dataset, q: NeighborQuery) -> StepFunction:
    idx, w = find_neighbors(data, q)
    return kaplan_meier(data, idx, None if q.mode in ("knn", "radius") else w)


def estimate_cum_hazard(data: Dataset, q: NeighborQuery) -> StepFunction:
    idx, w = find_neighbors(data, q)
    return nelson_aalen(data, idx, None if q.mode in ("knn", "radius") else w)


def _cdf_reg_log_survival(times, events, weights, k):
    """The two-stage estimate of ``log S(t|x)`` as a (non-increasing) step function.

    Stage 1 builds the weighted tail ``S_Y(s^-)`` of the neighbors' observed
    times; stage 2 averages the labels ``-delta_i 1{Y_i <= t} / S_Y(Y_i^-)``.
    """
    total = weights.sum()
    uniq, inv = np.unique(times, return_inverse=True)
    mass = np.bincount(inv, weights=weights, minlength=len(uniq))
    tail_left = np.cumsum(mass[::-1])[::-1] / total  # S_Y(u^-) for each unique u
    floor = 1.0 / (2 * k)
    if np.all(tail_left[inv] < floor):
        raise DegenerateTail("every neighbor's estimated tail is below the floor")
    denom = np.maximum(tail_left, floor)
    label_mass = np.bincount(inv, weights=weights * events, minlength=len(uniq)) / denom
    m = label_mass > 0
    return uniq[m], -np.cumsum(label_mass[m]) / total


def estimate_cdf_reg(data: Dataset, q: NeighborQuery) -> StepFunction:
    """k-NN CDF estimation followed by k-NN regression, exponentiated."""
    if q.mode not in ("knn", "wknn"):
        raise ValueError("CDF-REG is defined for knn and wknn neighborhoods only")
    idx, w = find_neighbors(data, q)
    t, u1 = _cdf_reg_log_survival(data.times[idx], data.events[idx].astype(float), w, q.k)
    return StepFunction(t, np.clip(np.exp(u1), 0.0, 1.0), 1.0)


def estimate_cdf_reg_cum_hazard(data: Dataset, q: NeighborQuery) -> StepFunction:
    """``-log`` of :func:`estimate_cdf_reg`, used for risk ranking."""
    if q.mode not in ("knn", "wknn"):
        raise ValueError("CDF-REG is defined for knn and wknn neighborhoods only")
    idx, w = find_neighbors(data, q)
    t, u1 = _cdf_reg_log_survival(data.times[idx], data.events[idx].astype(float), w, q.k)
    return StepFunction(t, np.maximum(-u1, 0.0), 0.0)


@dataclass
class NeighborSurvival:
    """Batch predictor wrapping the neighbor estimators for many query points.

    ``kind`` is one of ``knn``, ``wknn``, ``radius``, ``kernel``, ``cdfreg``,
    ``cdfreg-w``. Query ``i`` of a batch uses the tie-breaking seed
    ``(seed, i)``.
    """

    kind: str = "knn"
    metric: Metric = L2
    kernel: Kernel | None = None
    seed: int = 0
    train: Dataset | None = field(default=None, repr=False)

    def fit(self, train: Dataset) -> "NeighborSurvival":
        self.train = train.require_nonempty()
        return self

    @property
    def param_name(self) -> str:
        return "h" if self.kind in ("radius", "kernel") else "k"

    def _query_mode(self):
        return {"knn": "knn", "cdfreg": "knn", "wknn": "wknn", "cdfreg-w": "wknn",
                "radius": "radius", "kernel": "kernel"}[self.kind]

    def _kernel(self):
        if self.kernel is not None:
            return self.kernel
        if self.kind in ("wknn", "cdfreg-w"):
            return Kernel("triangle")
        if self.kind == "kernel":
            return Kernel("box")
        return None

    def predict(self, X, param, what: str = "both"):
        """Survival and/or cumulative-hazard curves for each row of ``X``.

        Returns ``(survival_list, hazard_list)``; the list not asked for is
        ``None``.
        """
        train = self.train
        X = np.atleast_2d(np.asarray(X, dtype=float))
        D = self.metric.pairwise(X, train.features)
        mode = self._query_mode()
        kernel = self._kernel()
        surv, haz = [], []
        for i in range(X.shape[0]):
            q = NeighborQuery(X[i], mode,
                              k=param if mode in ("knn", "wknn") else None,
                              h=param if mode in ("radius", "kernel") else None,
                              kernel=kernel, metric=self.metric, seed=(self.seed, i))
            idx, w = neighbors_from_distances(D[i], q)
            if self.kind.startswith("cdfreg"):
                t, u1 = _cdf_reg_log_survival(train.times[idx],
                                              train.events[idx].astype(float), w, q.k)
                if what in ("both", "survival"):
                    surv.append(StepFunction(t, np.clip(np.exp(u1), 0.0, 1.0), 1.0))
                if what in ("both", "hazard"):
                    haz.append(StepFunction(t, np.maximum(-u1, 0.0), 0.0))
                continue
            wts = None if mode in ("knn", "radius") else w
            if what in ("both", "survival"):
                surv.append(kaplan_meier(train, idx, wts))
            if what in ("both", "hazard"):
                haz.append(nelson_aalen(train, idx, wts))
        return (surv if what != "hazard" else None,
                haz if what != "survival" else None)


def kernel_by_name(name: str, sigma: float | None = None) -> Kernel:
    """Parse ``box``, ``triangle``, ``epanechnikov``, ``tgauss`` or ``tgauss2``."""
    name = name.lower()
    if name.startswith("tgauss") and len(name) > 6:
        return Kernel("tgauss", float(name[6:]))
    return Kernel(name, sigma if sigma is not None else 1.0)
