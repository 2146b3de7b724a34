"""Command-line entry point: ``nnsurv <subcommand> [options]``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bounds as B
from .data import L1, L2, fit_standardizer, write_csv
from .errors import (EmptyDataset, EventNotBinary, InvalidConfig, MissingColumn, NegativeTime,
                     NonNumericValue, UnTunable)
from .estimators import kernel_by_name
from .experiments import (BoundSetting, DEFAULT_BOUND_SETTINGS, ExperimentSpec, run_benchmark,
                          run_consistency_study, verify_knn_bound, write_table)
from .methods import METHOD_NAMES, method_by_name
from .selection import cross_validate
from .synthetic import model_by_name

log = logging.getLogger("nnsurv")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4
DATA_ERRORS = (MissingColumn, NonNumericValue, NegativeTime, EventNotBinary, EmptyDataset,
               FileNotFoundError, IsADirectoryError, UnicodeDecodeError)
BENCH_METHODS = ("knn", "wknn", "radius", "kernel-box", "kernel-triangle", "kernel-epanechnikov",
                 "kernel-tgauss", "cdfreg", "cdfreg-w", "rsf", "rsf-kernel")


class ConfigError(Exception):
    pass


def _common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="nnsurv_out")
    p.add_argument("--threads", type=int, default=1, help="worker threads, 0 = auto")
    p.add_argument("--debug", action="store_true", help="verbose logging")


def _data_flags(p):
    p.add_argument("--data", help="input CSV (header row required)")
    p.add_argument("--time-col", default="time")
    p.add_argument("--event-col", default="event")
    _model_flags(p, required=False)
    p.add_argument("--n", type=int, default=500, help="sample size for --model")


def _model_flags(p, required):
    p.add_argument("--model", choices=("expreg", "weibreg", "weibmix"), required=required)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--q", type=float, default=None, help="Weibull shape")
    p.add_argument("--h-t0", type=float, default=None)
    p.add_argument("--beta-t", type=float, nargs="+", default=None)
    p.add_argument("--h-c0", type=float, default=None)
    p.add_argument("--beta-c", type=float, nargs="+", default=None)
    for name in ("psi-t1", "psi-t2", "psi-c1", "psi-c2", "nu"):
        p.add_argument(f"--{name}", type=float, default=None)


def _estimator_flags(p):
    p.add_argument("--k", type=int, nargs="+", help="fix the k grid")
    p.add_argument("--bandwidth", type=float, nargs="+", help="fix the bandwidth grid")
    p.add_argument("--kernel", choices=("box", "triangle", "epanechnikov", "tgauss"))
    p.add_argument("--tgauss-sigma", type=float, choices=(1.0, 2.0, 3.0), default=1.0)
    p.add_argument("--metric", choices=("l1", "l2"), default="l2")
    p.add_argument("--n-trees", type=int, nargs="+", help="fix the forest size grid")
    p.add_argument("--max-depth", type=int, nargs="+", help="fix the depth grid (0 = unlimited)")
    p.add_argument("--min-leaf", type=int, default=5)
    p.add_argument("--mtry", type=int, default=None)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--criterion", choices=("cindex", "ipec"), default="cindex")
    p.add_argument("--splits", type=int, default=10, help="random 70/30 splits")
    p.add_argument("--split-fraction", type=float, default=0.7)
    p.add_argument("--censoring", choices=("same", "km"), default="same",
                   help="censoring-tail estimator used by IPEC")
    p.add_argument("--ipec-theta-lb", type=float, default=1e-6)
    p.add_argument("--ipec-tau-percentile", type=float, default=75.0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="nnsurv", description="Nearest-neighbor and kernel survival estimators: "
        "benchmarks, synthetic data and finite-sample bound checks.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="repeated splits, CV-tuned methods, test c-index and IPEC")
    _common(p)
    _data_flags(p)
    _estimator_flags(p)
    p.add_argument("--methods", default=",".join(BENCH_METHODS),
                   help="comma-separated method names")

    p = sub.add_parser("cv", help="cross-validate one estimator")
    _common(p)
    _data_flags(p)
    _estimator_flags(p)
    p.add_argument("--estimator", choices=METHOD_NAMES, default="knn")

    p = sub.add_parser("synth", help="sample a synthetic dataset to CSV")
    _common(p)
    _model_flags(p, required=True)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--out", required=True)
    p.add_argument("--debug-truth", action="store_true",
                   help="add true_T and true_C columns")

    p = sub.add_parser("bounds", help="term-by-term bound table")
    _common(p)
    p.add_argument("--bound", choices=sorted(B.BOUNDS), default="knn")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--lambda-t", type=float, default=0.0)
    p.add_argument("--lambda-c", type=float, default=0.0)
    p.add_argument("--f-star", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--ball-mass", type=float, default=1.0)
    p.add_argument("--kappa", type=float, default=1.0)

    p = sub.add_parser("verify-bounds", help="Monte-Carlo check of the k-NN bound")
    _common(p)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--quick", action="store_true",
                   help="one small setting (its bound may exceed 1)")

    p = sub.add_parser("consistency", help="sup-norm error of k-NN KM versus n")
    _common(p)
    _model_flags(p, required=False)
    p.add_argument("--ns", type=int, nargs="+", default=[500, 1000, 2000, 4000, 8000])
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--queries", type=int, default=50)
    return ap


def _model_from_args(a):
    name = a.model or "expreg"
    kw = {}
    if name in ("expreg", "weibreg"):
        kw["d"] = a.dim
        for flag, key in (("h_t0", "h_T0"), ("h_c0", "h_C0")):
            if getattr(a, flag) is not None:
                kw[key] = getattr(a, flag)
        for flag, key in (("beta_t", "beta_T"), ("beta_c", "beta_C")):
            v = getattr(a, flag)
            if v is not None:
                kw[key] = v[0] if len(v) == 1 else v
        if name == "weibreg" and a.q is not None:
            kw["q"] = a.q
        if name == "expreg" and a.q not in (None, 1.0):
            raise ConfigError("exponential regression has q = 1")
    else:
        for flag, key in (("psi_t1", "psi_T1"), ("psi_t2", "psi_T2"), ("psi_c1", "psi_C1"),
                          ("psi_c2", "psi_C2"), ("nu", "nu"), ("q", "q")):
            if getattr(a, flag) is not None:
                kw[key] = getattr(a, flag)
    try:
        return model_by_name(name, **kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _spec_from_args(a, methods) -> ExperimentSpec:
    if bool(a.data) == bool(a.model):
        raise ConfigError("give exactly one of --data or --model")
    source = a.data if a.data else _model_from_args(a)
    kernel = kernel_by_name(a.kernel, a.tgauss_sigma) if a.kernel else None
    grid = {}
    if a.k:
        grid["k"] = a.k
    if a.bandwidth:
        grid["h"] = a.bandwidth
    if a.n_trees or a.max_depth:
        trees = a.n_trees or [50, 100, 150, 200]
        depths = [None if d == 0 else d for d in (a.max_depth or [3, 4, 5, 6, 7, 8, 0])]
        grid["forest"] = [(t, d) for t in trees for d in depths]
    for m in methods:
        if m not in METHOD_NAMES:
            raise ConfigError(f"unknown method {m!r}; choose from {', '.join(METHOD_NAMES)}")
    try:
        return ExperimentSpec(
            source, tuple(methods), a.split_fraction, max(a.splits, 1), a.folds, a.seed,
            a.out_dir, n=a.n, criterion=a.criterion, cens=a.censoring,
            theta_lb=a.ipec_theta_lb, tau_percentile=a.ipec_tau_percentile,
            metric=L1 if a.metric == "l1" else L2, kernel=kernel, min_leaf=a.min_leaf,
            mtry=a.mtry, grid_override=grid, time_col=a.time_col, event_col=a.event_col,
            threads=a.threads)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_bench(a, methods=None):
    methods = methods or [m.strip() for m in a.methods.split(",") if m.strip()]
    spec = _spec_from_args(a, methods)
    rows = run_benchmark(spec)
    for r in rows:
        print(f"split {r['split']:>2} {r['method']:<20} param={r['param']:<12} "
              f"c={r['c_index']:.4f} ipec={r['ipec']:.4g} {r['error']}")
    log.info("wrote %s", Path(a.out_dir) / "results.csv")
    return EXIT_OK


def cmd_cv(a):
    spec = _spec_from_args(a, [a.estimator])
    data = spec.load()
    method = method_by_name(a.estimator, spec.metric, spec.kernel, a.min_leaf, a.mtry)
    std_data = fit_standardizer(data).apply(data)
    grid = spec.grid_override.get(method.param_kind)
    res = cross_validate(std_data, method, grid, a.folds, a.criterion, a.seed, a.censoring,
                         a.ipec_theta_lb, a.ipec_tau_percentile)
    Path(a.out_dir).mkdir(parents=True, exist_ok=True)
    rows = [dict(param=str(p), score=s, status="ok") for p, s in res.scores.items()]
    rows += [dict(param=str(p), score=float("nan"), status=msg) for p, msg in res.failed.items()]
    write_table(rows, Path(a.out_dir) / "cv_scores.csv", ("param", "score", "status"))
    print(f"best {method.param_kind} = {res.best} ({a.criterion} {res.scores[res.best]:.4f})")
    if a.splits > 0:
        return cmd_bench(a, [a.estimator])
    return EXIT_OK


def cmd_synth(a):
    model = _model_from_args(a)
    data, T, C = model.sample(a.n, a.seed, return_truth=True)
    extra = {"true_T": T, "true_C": C} if a.debug_truth else None
    write_csv(data, a.out, extra_columns=extra)
    print(f"wrote {a.n} records to {a.out}")
    return EXIT_OK


def cmd_bounds(a):
    try:
        inp = B.BoundInputs(a.n, a.epsilon, a.theta, a.tau, a.k, a.h, a.lambda_t, a.lambda_c,
                            a.f_star, a.alpha, a.ball_mass, a.kappa)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if a.bound.endswith("knn") and a.k is None:
        raise ConfigError("--k is required for k-NN bounds")
    lam, lam_k, h_star = B.capital_lambda(inp)
    val = B.BOUNDS[a.bound](inp)
    print(f"Lambda = {lam:.6g}   Lambda_K = {lam_k:.6g}   h* = {h_star:.6g}")
    for label, term in zip(val.labels, val.terms):
        print(f"  {label:<26} {term:.6g}")
    print(f"  {'total':<26} {val.total:.6g}")
    print(f"preconditions met: {val.preconditions_met}")
    return EXIT_OK


def cmd_verify_bounds(a):
    settings = DEFAULT_BOUND_SETTINGS
    if a.quick:
        settings = (BoundSetting(n=8_000, k=4_000, epsilon=0.9),)
    rows = verify_knn_bound(settings, a.trials, a.seed, a.out_dir)
    for r in rows:
        print(f"{r['setting']:<32} freq={r['empirical_freq']:.4f} rhs={r['rhs']:.4f}")
    return EXIT_OK


def cmd_consistency(a):
    model = _model_from_args(a)
    rows = run_consistency_study(model, a.ns, trials=a.trials, seed=a.seed,
                                 n_queries=a.queries, out_dir=a.out_dir)
    for r in rows:
        print(f"n={r['n']:<6} k={r['k']:<5} mean sup error={r['mean_error']:.5f}")
    return EXIT_OK


COMMANDS = {"bench": cmd_bench, "cv": cmd_cv, "synth": cmd_synth, "bounds": cmd_bounds,
            "verify-bounds": cmd_verify_bounds, "consistency": cmd_consistency}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if a.debug else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    log.info("config %s", json.dumps(vars(a), sort_keys=True, default=str))
    if getattr(a, "threads", 1) < 0:
        log.error("--threads must be >= 0")
        return EXIT_CONFIG
    try:
        return COMMANDS[a.command](a)
    except (ConfigError, InvalidConfig, UnTunable) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except DATA_ERRORS as exc:
        log.error("data error: %s", exc)
        return EXIT_DATA
    except ValueError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error: %s", exc)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
