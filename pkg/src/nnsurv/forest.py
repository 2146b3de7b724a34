"""Random survival forests with log-rank splitting, plus the adaptive-kernel
predictor that reuses the forest's leaf co-membership as kernel weights.

Randomness is keyed per tree (bootstrap) and per node (feature sampling), so
the first ``m`` trees of a forest are exactly an ``m``-tree forest and a tree
cut at depth ``D`` is exactly the tree grown with ``max_depth=D``.
:meth:`ForestModel.view` exploits this for cheap grid search.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import Dataset
from .errors import AllWeightsZero, DimensionMismatch, IndexOutOfRange, TooFewRecords
from .stepfn import StepFunction, kaplan_meier, mean_of, nelson_aalen

_CHUNK_ELEMS = 2_000_000


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int | None = None
    min_leaf: int = 5
    mtry: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be at least 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be at least 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be nonnegative or None")
        if self.mtry is not None and self.mtry < 1:
            raise ValueError("mtry must be positive")


def logrank_scores(values, times, events, min_leaf=1):
    """Log-rank split statistic for every admissible threshold on one feature.

    Left child is ``values <= threshold``; thresholds are midpoints between
    consecutive distinct values. A split is admissible when both sides keep at
    least ``min_leaf`` samples and at least one event. Returns
    ``(thresholds, scores)``.
    """
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    v, y, e = values[order], np.asarray(times, float)[order], np.asarray(events)[order] == 1
    m = v.size
    pos = np.arange(1, m)  # left child = first p samples
    ev_left = np.cumsum(e)[:-1]
    n_events = int(e.sum())
    ok = ((v[1:] > v[:-1]) & (pos >= min_leaf) & (m - pos >= min_leaf)
          & (ev_left >= 1) & (n_events - ev_left >= 1))
    pos = pos[ok]
    if pos.size == 0:
        return np.empty(0), np.empty(0)
    thresholds = (v[pos - 1] + v[pos]) / 2.0

    u = np.unique(y[e])
    Y = (y[:, None] >= u[None, :]).sum(axis=0).astype(float)
    d = (e[:, None] & (y[:, None] == u[None, :])).sum(axis=0).astype(float)
    num = np.zeros(pos.size)
    var = np.zeros(pos.size)
    step = max(1, _CHUNK_ELEMS // max(m, 1))
    for j0 in range(0, u.size, step):
        uj = u[j0:j0 + step]
        Yj, dj = Y[j0:j0 + step], d[j0:j0 + step]
        at_risk = np.cumsum(y[:, None] >= uj[None, :], axis=0)[pos - 1].astype(float)
        deaths = np.cumsum(e[:, None] & (y[:, None] == uj[None, :]), axis=0)[pos - 1]
        frac = at_risk / Yj
        num += (deaths - frac * dj).sum(axis=1)
        corr = np.where(Yj > 1, (Yj - dj) / np.maximum(Yj - 1, 1), 0.0)
        var += (frac * (1 - frac) * corr * dj).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(var > 0, np.abs(num) / np.sqrt(var), 0.0)
    return thresholds, scores


def logrank_statistic(left_times, left_events, right_times, right_events) -> float:
    """Two-sample log-rank statistic ``|O - E| / sqrt(V)`` computed from scratch."""
    t = np.concatenate([left_times, right_times]).astype(float)
    ev = np.concatenate([left_events, right_events]) == 1
    is_left = np.r_[np.ones(len(left_times), bool), np.zeros(len(right_times), bool)]
    num = var = 0.0
    for u in np.unique(t[ev]):
        at = t >= u
        Yj = at.sum()
        dj = (ev & (t == u)).sum()
        YL = (at & is_left).sum()
        dL = (ev & (t == u) & is_left).sum()
        num += dL - YL * dj / Yj
        if Yj > 1:
            var += (YL / Yj) * (1 - YL / Yj) * ((Yj - dj) / (Yj - 1)) * dj
    return abs(num) / math.sqrt(var) if var > 0 else 0.0


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    depth: np.ndarray
    samples: list  # bootstrap indices (with repeats) reaching each node
    bootstrap: np.ndarray

    @property
    def n_nodes(self):
        return len(self.feature)

    def is_leaf(self, node, max_depth=None):
        return self.left[node] < 0 or (max_depth is not None and self.depth[node] >= max_depth)

    def apply(self, X, max_depth=None) -> np.ndarray:
        """Leaf node id reached by each row of ``X``."""
        X = np.atleast_2d(X)
        node = np.zeros(X.shape[0], dtype=int)
        active = np.ones(X.shape[0], dtype=bool)
        while True:
            internal = self.left[node] >= 0
            if max_depth is not None:
                internal &= self.depth[node] < max_depth
            active &= internal
            if not active.any():
                return node
            idx = np.flatnonzero(active)
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] <= self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])


def _grow_tree(data: Dataset, cfg: ForestConfig, tree_idx: int) -> Tree:
    n, dim = len(data), data.dim
    mtry = min(cfg.mtry or math.ceil(math.sqrt(dim)), dim)
    boot = np.random.default_rng([cfg.seed, tree_idx]).integers(0, n, n)
    X, T, E = data.features, data.times, data.events

    feature, threshold, left, right, depth, samples = [], [], [], [], [], []

    def new_node(s, dpt):
        feature.append(-1)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        depth.append(dpt)
        samples.append(s)
        return len(feature) - 1

    stack = [(new_node(boot, 0), 1)]
    while stack:
        node, path = stack.pop()
        s, dpt = samples[node], depth[node]
        if cfg.max_depth is not None and dpt >= cfg.max_depth:
            continue
        if s.size < 2 * cfg.min_leaf or E[s].sum() < 2:
            continue
        rng = np.random.default_rng([cfg.seed, tree_idx, path])
        feats = rng.choice(dim, size=mtry, replace=False) if mtry < dim else np.arange(dim)
        best = (0.0, None, None)
        for f in feats:
            thr, sc = logrank_scores(X[s, f], T[s], E[s], cfg.min_leaf)
            if sc.size and sc.max() > best[0]:
                j = int(np.argmax(sc))
                best = (float(sc[j]), int(f), float(thr[j]))
        if best[1] is None:
            continue
        _, f, thr = best
        go_left = X[s, f] <= thr
        feature[node], threshold[node] = f, thr
        li = new_node(s[go_left], dpt + 1)
        ri = new_node(s[~go_left], dpt + 1)
        left[node], right[node] = li, ri
        stack.append((ri, 2 * path + 1))
        stack.append((li, 2 * path))

    return Tree(np.array(feature, dtype=int), np.array(threshold, dtype=float),
                np.array(left, dtype=int), np.array(right, dtype=int),
                np.array(depth, dtype=int), samples, boot)


@dataclass(eq=False)
class ForestModel:
    trees: list
    train: Dataset = field(repr=False)
    config: ForestConfig = field(default_factory=ForestConfig)
    max_depth: int | None = None
    _curve_cache: dict = field(default_factory=dict, repr=False)
    _train_leaves: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_trees(self):
        return len(self.trees)

    def view(self, n_trees: int | None = None, max_depth: int | None = "same") -> "ForestModel":
        """The sub-forest of the first ``n_trees`` trees cut at ``max_depth``."""
        n_trees = self.n_trees if n_trees is None else n_trees
        if n_trees > self.n_trees:
            raise ValueError(f"only {self.n_trees} trees available")
        if max_depth == "same":
            max_depth = self.max_depth
        if self.max_depth is not None and (max_depth is None or max_depth > self.max_depth):
            raise ValueError("cannot view deeper than the fitted depth")
        cfg = ForestConfig(n_trees, max_depth, self.config.min_leaf, self.config.mtry,
                           self.config.seed)
        return ForestModel(self.trees[:n_trees], self.train, cfg, max_depth, self._curve_cache)

    def _check_x(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.train.dim:
            raise DimensionMismatch(f"expected {self.train.dim} features, got {X.shape[1]}")
        return X

    def leaves(self, X) -> np.ndarray:
        """Leaf ids, shape ``(n_trees, len(X))``."""
        X = self._check_x(X)
        return np.array([t.apply(X, self.max_depth) for t in self.trees])

    def train_leaves(self) -> np.ndarray:
        if self._train_leaves is None:
            self._train_leaves = self.leaves(self.train.features)
        return self._train_leaves

    def node_curves(self, tree_idx: int, node: int):
        key = (tree_idx, node)
        if key not in self._curve_cache:
            s = self.trees[tree_idx].samples[node]
            uniq, counts = np.unique(s, return_counts=True)
            self._curve_cache[key] = (kaplan_meier(self.train, uniq, counts.astype(float)),
                                      nelson_aalen(self.train, uniq, counts.astype(float)))
        return self._curve_cache[key]

    def leaf_members(self, tree_idx: int, node: int) -> np.ndarray:
        return np.unique(self.trees[tree_idx].samples[node])

    def adaptive_weights(self, X) -> np.ndarray:
        """``K(x, X_j)`` for each row of ``X`` against every training point."""
        test = self.leaves(X)
        tr = self.train_leaves()
        out = np.empty((test.shape[1], tr.shape[1]))
        for i in range(test.shape[1]):
            out[i] = (tr == test[:, i:i + 1]).mean(axis=0)
        return out

    def to_json(self) -> str:
        trees = [dict(feature=t.feature.tolist(), threshold=[None if math.isnan(v) else v
                                                             for v in t.threshold.tolist()],
                      left=t.left.tolist(), right=t.right.tolist(), depth=t.depth.tolist(),
                      samples=[s.tolist() for s in t.samples], bootstrap=t.bootstrap.tolist())
                 for t in self.trees]
        return json.dumps(dict(format="nnsurv-forest", version=1, config=asdict(self.config),
                               max_depth=self.max_depth, trees=trees))

    @classmethod
    def from_json(cls, text: str, train: Dataset) -> "ForestModel":
        obj = json.loads(text)
        if obj.get("format") != "nnsurv-forest" or obj.get("version") != 1:
            raise ValueError("not a version-1 forest file")
        trees = [Tree(np.array(t["feature"], int),
                      np.array([np.nan if v is None else v for v in t["threshold"]], float),
                      np.array(t["left"], int), np.array(t["right"], int),
                      np.array(t["depth"], int), [np.array(s, int) for s in t["samples"]],
                      np.array(t["bootstrap"], int)) for t in obj["trees"]]
        return cls(trees, train, ForestConfig(**obj["config"]), obj["max_depth"])


def fit_forest(data: Dataset, cfg: ForestConfig) -> ForestModel:
    """Grow ``cfg.n_trees`` log-rank survival trees on bootstrap resamples."""
    if len(data) < 2 * cfg.min_leaf or len(data) == 0:
        raise TooFewRecords(f"need at least {2 * cfg.min_leaf} records, got {len(data)}")
    if cfg.mtry is not None and cfg.mtry > data.dim:
        raise ValueError(f"mtry={cfg.mtry} exceeds feature dimension {data.dim}")
    trees = [_grow_tree(data, cfg, b) for b in range(cfg.n_trees)]
    return ForestModel(trees, data, cfg, cfg.max_depth)


def predict_forest_survival(model: ForestModel, x) -> StepFunction:
    """Mean of the leaf Kaplan-Meier curves containing ``x``."""
    leaves = model.leaves(x)[:, 0]
    return mean_of([model.node_curves(b, int(node))[0] for b, node in enumerate(leaves)])


def predict_forest_cum_hazard(model: ForestModel, x) -> StepFunction:
    """Mean of the leaf Nelson-Aalen curves containing ``x`` (ensemble hazard)."""
    leaves = model.leaves(x)[:, 0]
    return mean_of([model.node_curves(b, int(node))[1] for b, node in enumerate(leaves)])


def adaptive_kernel_weight(model: ForestModel, x, j: int) -> float:
    """Fraction of trees in which ``x`` and training point ``j`` share a leaf."""
    if not 0 <= j < len(model.train):
        raise IndexOutOfRange(f"training index {j} out of range")
    lx = model.leaves(x)[:, 0]
    return float(np.mean(model.train_leaves()[:, j] == lx))


def predict_adaptive_kernel_survival(model: ForestModel, data: Dataset, x,
                                     hazard: bool = False) -> StepFunction:
    """Weighted Kaplan-Meier (or Nelson-Aalen) with forest co-membership weights."""
    w = model.adaptive_weights(x)[0]
    if not np.any(w > 0):
        raise AllWeightsZero("x shares no leaf with any training point")
    fn = nelson_aalen if hazard else kaplan_meier
    return fn(data, np.arange(len(data)), w)
