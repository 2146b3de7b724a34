"""Benchmark, consistency and bound-verification drivers behind the CLI.

Every driver returns its table as a list of dicts and, given an output
directory, writes it as CSV together with an SVG chart rebuilt from that
table alone.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bounds import (BoundInputs, ball_mass_uniform_1d, capital_lambda, expreg_lipschitz,
                     knn_bound_rhs)
from .data import L2, Dataset, Metric, fit_standardizer, load_csv
from .errors import SurvivalError
from .estimators import Kernel, NeighborQuery, estimate_survival
from .evaluation import IpecConfig, concordance_index, default_tau, ipec, risk_scores
from .methods import method_by_name
from .plots import boxplot_svg, loglog_svg
from .selection import censoring_curves, cross_validate, default_grids
from .stepfn import sup_norm_distance
from .synthetic import GroundTruthModel, exp_regression

log = logging.getLogger(__name__)

BENCH_FIELDS = ("dataset", "split", "method", "param", "cv_score", "c_index", "ipec", "error")


@dataclass
class ExperimentSpec:
    """A benchmark run: data source, methods and the split/CV protocol."""

    source: object  # CSV path or GroundTruthModel
    methods: tuple = ("knn", "cdfreg")
    split_fraction: float = 0.7
    repeats: int = 10
    folds: int = 5
    seed: int = 0
    out_dir: str | None = None
    n: int = 500  # sample size when ``source`` is synthetic
    criterion: str = "cindex"
    cens: str = "same"
    theta_lb: float = 1e-6
    tau_percentile: float = 75.0
    metric: Metric = L2
    kernel: Kernel | None = None
    min_leaf: int = 5
    mtry: int | None = None
    grid_override: dict = field(default_factory=dict)
    time_col: str = "time"
    event_col: str = "event"
    threads: int = 1
    name: str | None = None

    def __post_init__(self):
        if not 0 < self.split_fraction < 1:
            raise ValueError("split fraction must be in (0, 1)")
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        if self.folds < 2:
            raise ValueError("folds must be at least 2")

    def dataset_name(self) -> str:
        if self.name:
            return self.name
        if isinstance(self.source, GroundTruthModel):
            return self.source.kind
        return Path(str(self.source)).stem

    def load(self) -> Dataset:
        if isinstance(self.source, GroundTruthModel):
            return self.source.sample(self.n, self.seed)
        return load_csv(self.source, self.time_col, self.event_col)


def train_test_split(data: Dataset, fraction: float, seed: int):
    perm = np.random.default_rng(seed).permutation(len(data))
    n_train = int(math.floor(fraction * len(data)))
    if n_train < 1 or n_train >= len(data):
        raise ValueError("split leaves an empty train or test set")
    return data.subset(np.sort(perm[:n_train])), data.subset(np.sort(perm[n_train:]))


def _param_str(p) -> str:
    if isinstance(p, tuple):
        return f"{p[0]}:{'none' if p[1] is None else p[1]}"
    return repr(p) if isinstance(p, float) else str(p)


def _bench_cell(spec: ExperimentSpec, data: Dataset, split: int, method_name: str) -> dict:
    seed = spec.seed + split
    row = dict(dataset=spec.dataset_name(), split=split, method=method_name, param="",
               cv_score=math.nan, c_index=math.nan, ipec=math.nan, error="")
    try:
        method = method_by_name(method_name, spec.metric, spec.kernel, spec.min_leaf, spec.mtry)
        train, test = train_test_split(data, spec.split_fraction, seed)
        std = fit_standardizer(train)
        train, test = std.apply(train), std.apply(test)
        grid = default_grids(train, spec.metric)
        params = spec.grid_override.get(method.param_kind, grid.for_method(method))
        cv = cross_validate(train, method, params, spec.folds, spec.criterion, seed, spec.cens,
                            spec.theta_lb, spec.tau_percentile)
        fitted = method.fit(train, [cv.best], seed)
        surv, haz = fitted.predict(test.features, cv.best, "both")
        c = concordance_index(test, risk_scores(haz, test.times))
        cc = censoring_curves(method, train, test.features, cv.best, seed, spec.cens)
        cfg = IpecConfig(default_tau(train.times, spec.tau_percentile), spec.theta_lb)
        row.update(param=_param_str(cv.best), cv_score=cv.scores[cv.best], c_index=c,
                   ipec=ipec(test, surv, cc, cfg))
    except (SurvivalError, ValueError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        log.warning("split %d, %s failed: %s", split, method_name, row["error"])
    return row


def _workers(threads: int) -> int:
    if threads == 0:
        return os.cpu_count() or 1
    return max(1, threads)


def run_benchmark(spec: ExperimentSpec) -> list:
    """Repeated random splits, CV-tuned methods, test c-index and IPEC.

    Rows are sorted by (split, method) before writing, so the CSV bytes do not
    depend on thread scheduling.
    """
    data = spec.load()
    cells = [(r, m) for r in range(spec.repeats) for m in spec.methods]
    n_workers = _workers(spec.threads)
    if n_workers == 1:
        rows = [_bench_cell(spec, data, r, m) for r, m in cells]
    else:
        with ThreadPoolExecutor(n_workers) as pool:
            rows = list(pool.map(lambda c: _bench_cell(spec, data, *c), cells))
    order = {m: i for i, m in enumerate(spec.methods)}
    rows.sort(key=lambda r: (r["split"], order[r["method"]]))
    if spec.out_dir:
        out = Path(spec.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_table(rows, out / "results.csv", BENCH_FIELDS)
        (out / "cindex_boxplot.svg").write_text(bench_plot(rows), encoding="utf-8")
    return rows


def bench_plot(rows) -> str:
    groups = {}
    for r in rows:
        groups.setdefault(r["method"], []).append(float(r["c_index"]))
    name = rows[0]["dataset"] if rows else ""
    return boxplot_svg(groups, title=f"test c-index, {name}")


def _cell(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return v


def write_table(rows, path, fields) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(fields), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _cell(r[k]) for k in fields})


def read_table(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def default_k_rule(n: int) -> int:
    return int(round(n ** (2.0 / 3.0)))


def run_consistency_study(model: GroundTruthModel, ns, k_rule=default_k_rule, trials: int = 10,
                          seed: int = 0, n_queries: int = 50, out_dir=None) -> list:
    """Mean sup-norm error of the k-NN KM estimator on ``[0, tau]`` for each ``n``.

    The query points are drawn once from the feature law and reused for
    every ``n``; trial ``j`` at size ``n`` draws its sample with seed
    ``(seed, n, j)``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    _, tau = model.theta_tau()
    queries = model.feature_law.sample(n_queries, np.random.default_rng([seed, 0]))
    truths = [model.survival_fn(x) for x in queries]
    rows = []
    for n in ns:
        k = k_rule(n)
        per_trial = []
        for j in range(trials):
            data = model.sample(n, [seed, n, j])
            errs = [sup_norm_distance(estimate_survival(data, NeighborQuery(x, "knn", k=k,
                                                                          seed=(seed, n, j, i))),
                                      truths[i], tau)
                    for i, x in enumerate(queries)]
            per_trial.append(math.fsum(errs) / len(errs))
        rows.append(dict(n=n, k=k, mean_error=math.fsum(per_trial) / trials,
                         sd_error=float(np.std(per_trial, ddof=1)) if trials > 1 else 0.0,
                         tau=tau))
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_table(rows, out / "consistency.csv", ("n", "k", "mean_error", "sd_error", "tau"))
        (out / "consistency.svg").write_text(
            loglog_svg([r["n"] for r in rows], [r["mean_error"] for r in rows],
                       title="k-NN sup-norm error vs n", ylabel="mean sup error"),
            encoding="utf-8")
    return rows


@dataclass(frozen=True)
class BoundSetting:
    """One Monte-Carlo check of the k-NN bound on exponential regression (d = 1)."""

    n: int
    k: int
    epsilon: float
    x: float = 0.5
    h_T0: float = 1.0
    beta_T: float = 0.001
    h_C0: float = 1.0
    beta_C: float = -0.001

    def model(self) -> GroundTruthModel:
        return exp_regression(self.h_T0, self.beta_T, self.h_C0, self.beta_C, d=1)

    def inputs(self) -> BoundInputs:
        theta, tau = self.model().theta_tau()
        lam_t, f_star = expreg_lipschitz(self.h_T0, [self.beta_T])
        lam_c, _ = expreg_lipschitz(self.h_C0, [self.beta_C])
        base = BoundInputs(self.n, self.epsilon, theta, tau, self.k, None, lam_t, lam_c, f_star)
        _, _, h_star = capital_lambda(base)
        mass = ball_mass_uniform_1d(self.x, h_star)
        return BoundInputs(self.n, self.epsilon, theta, tau, self.k, None, lam_t, lam_c,
                           f_star, 1.0, mass)


DEFAULT_BOUND_SETTINGS = (
    BoundSetting(n=80_000, k=40_000, epsilon=0.9),
    BoundSetting(n=100_000, k=50_000, epsilon=0.8),
    BoundSetting(n=120_000, k=60_000, epsilon=0.7),
)


def verify_knn_bound(settings=DEFAULT_BOUND_SETTINGS, trials: int = 200, seed: int = 0,
                     out_dir=None) -> list:
    """Empirical ``P(sup_t<=tau |S_hat - S| > eps)`` at ``x`` against the bound."""
    rows = []
    for s_i, st in enumerate(settings):
        inp = st.inputs()
        rhs = knn_bound_rhs(inp)
        model = st.model()
        truth = model.survival_fn([st.x])
        exceed = 0
        for j in range(trials):
            data = model.sample(st.n, [seed, s_i, j])
            est = estimate_survival(data, NeighborQuery([st.x], "knn", k=st.k, seed=(seed, s_i, j)))
            exceed += sup_norm_distance(est, truth, inp.tau) > st.epsilon
        freq = exceed / trials
        se = math.sqrt(max(rhs.total * (1 - rhs.total), 0.0) / trials)
        rows.append(dict(setting=f"n={st.n},k={st.k},eps={st.epsilon}", empirical_freq=freq,
                         rhs=rhs.total, binomial_se=se, preconditions_met=rhs.preconditions_met))
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_table(rows, out / "verify_bounds.csv",
                    ("setting", "empirical_freq", "rhs", "binomial_se", "preconditions_met"))
    return rows
