import math

import numpy as np
import pytest

import nnsurv.selection as selection
from nnsurv.data import Dataset
from nnsurv.errors import UnTunable
from nnsurv.estimators import NeighborQuery, estimate_survival
from nnsurv.evaluation import IpecConfig, ipec
from nnsurv.methods import method_by_name
from nnsurv.selection import (ParamGrid, bandwidth_grid, canonical_order, cross_validate,
                              default_grids, fold_indices, k_grid, select_k_by_ipec)
from nnsurv.synthetic import exp_regression


@pytest.fixture(scope="module")
def data():
    return exp_regression(beta_T=3.0).sample(150, seed=11)


def test_k_grid_examples():
    assert k_grid(300) == (4, 8, 16, 32, 64, 128, 256)
    assert k_grid(3) == ()
    assert k_grid(4) == (4,)


def test_bandwidth_grid_spacing():
    bw = bandwidth_grid(10.0)
    assert len(bw) == 20
    assert bw[0] == pytest.approx(0.1) and bw[-1] == pytest.approx(10.0)
    ratios = np.array(bw[1:]) / np.array(bw[:-1])
    np.testing.assert_allclose(ratios, 100 ** (1 / 19), rtol=1e-12)


def test_default_grids(data):
    g = default_grids(data)
    X = data.features
    hmax = max(abs(a - b) for a in X[:, 0] for b in X[:, 0])
    assert g.bandwidth_values[-1] == pytest.approx(hmax)
    assert len(g.forest_grid) == 28 and (200, None) in g.forest_grid
    assert max(g.k_values) <= len(data)


def test_tiny_training_set_untunable():
    d = exp_regression().sample(3, seed=0)
    with pytest.raises(UnTunable):
        cross_validate(d, method_by_name("knn"), ParamGrid(k_values=k_grid(3)), folds=2)


def test_canonical_order():
    assert canonical_order([16, 4, 8, 4], "k") == [4, 8, 16]
    assert canonical_order([0.1, 1.0, 0.5], "h") == [1.0, 0.5, 0.1]
    got = canonical_order([(100, None), (50, 8), (100, 3), (50, None)], "forest")
    assert got == [(50, 8), (50, None), (100, 3), (100, None)]


def test_folds_partition():
    for n, f in [(10, 2), (23, 5), (100, 7)]:
        parts = fold_indices(n, f, seed=3)
        allidx = np.concatenate(parts)
        assert sorted(allidx.tolist()) == list(range(n))
        assert max(map(len, parts)) - min(map(len, parts)) <= 1
    with pytest.raises(UnTunable):
        fold_indices(3, 5, 0)
    with pytest.raises(UnTunable):
        fold_indices(10, 1, 0)


def test_single_parameter(data):
    r = cross_validate(data, method_by_name("knn"), [8], folds=3, seed=1)
    assert r.best == 8 and list(r.scores) == [8]


def test_duplicates_score_identically(data):
    m = method_by_name("knn")
    a = cross_validate(data, m, [8, 8, 16], folds=3, seed=1)
    b = cross_validate(data, m, [8], folds=3, seed=1)
    assert a.scores[8] == b.scores[8]


def test_grid_order_invariance(data):
    m = method_by_name("knn")
    grid = [4, 8, 16, 32, 64]
    base = cross_validate(data, m, grid, folds=4, seed=2)
    rng = np.random.default_rng(0)
    for _ in range(3):
        r = cross_validate(data, m, list(rng.permutation(grid)), folds=4, seed=2)
        assert r.best == base.best and r.scores == base.scores


def test_ties_go_to_smoother():
    # every prediction is the pooled KM when k covers the whole fold: all scores tie
    d = exp_regression().sample(40, seed=4)
    r = cross_validate(d, method_by_name("knn"), [20, 20], folds=2, seed=0)
    assert r.best == 20
    r = cross_validate(d, method_by_name("radius"), [50.0, 60.0], folds=2, seed=0)
    assert r.scores[50.0] == r.scores[60.0] and r.best == 60.0


def test_small_k_beats_full_fold(data):
    # with k equal to the fold size every subject gets the same curve, c = 0.5
    folds = 5
    fold_train = len(data) - len(data) // folds
    r = cross_validate(data, method_by_name("knn"), [4, fold_train], folds=folds, seed=0)
    assert r.scores[fold_train] == 0.5
    assert r.scores[4] > r.scores[fold_train]
    assert r.best == 4


def test_failed_parameter_discarded(data, caplog):
    # a tiny radius leaves some test points without neighbors
    m = method_by_name("radius")
    r = cross_validate(data, m, [1e-9, 5.0], folds=3, seed=0)
    assert 1e-9 in r.failed and r.best == 5.0
    assert "discarded" in caplog.text
    with pytest.raises(UnTunable):
        cross_validate(data, m, [1e-9], folds=3, seed=0)


def test_standardizer_sees_training_fold_only(monkeypatch):
    rng = np.random.default_rng(5)
    X = rng.uniform(size=(30, 1))
    X[7, 0] = 1e6  # sentinel
    d = Dataset(X, rng.exponential(size=30), np.ones(30))
    seen = []
    real = selection.fit_standardizer

    def spy(ds):
        std = real(ds)
        seen.append(ds.features.copy())
        return std

    monkeypatch.setattr(selection, "fit_standardizer", spy)
    cross_validate(d, method_by_name("knn"), [4], folds=3, seed=9)
    parts = fold_indices(30, 3, 9)
    assert len(seen) == 3
    for held, fitted_on in zip(parts, seen):
        tr = np.setdiff1d(np.arange(30), held)
        assert np.array_equal(fitted_on, X[tr])
        assert (1e6 in fitted_on) == (7 not in held)


def test_ipec_criterion_runs(data):
    r = cross_validate(data, method_by_name("knn"), [8, 32], folds=3, criterion="ipec")
    assert r.criterion == "ipec"
    assert r.best == min(r.scores, key=lambda k: (r.scores[k], k))
    with pytest.raises(ValueError):
        cross_validate(data, method_by_name("knn"), [8], criterion="brier")


def _ipec_exhaustive(train, val, k, cfg, seed):
    surv = [estimate_survival(train, NeighborQuery(x, "knn", k=k, seed=(seed, i)))
            for i, x in enumerate(val.features)]
    cens = [estimate_survival(train.flipped(), NeighborQuery(x, "knn", k=k, seed=(seed, i)))
            for i, x in enumerate(val.features)]
    return ipec(val, surv, cens, cfg)


def test_select_k_by_ipec_is_argmin():
    model = exp_regression(beta_T=2.0)
    train, val = model.sample(60, seed=1), model.sample(20, seed=2)
    cfg = IpecConfig(float(np.percentile(train.times, 75)), 1e-3)
    k, table = select_k_by_ipec(train, val, [4, 8, 16, 32, 60], cfg, seed=3)
    ref = {kk: _ipec_exhaustive(train, val, kk, cfg, 3) for kk in table}
    for kk in ref:
        assert table[kk] == pytest.approx(ref[kk], rel=1e-12)
    assert k == min(ref, key=lambda kk: (ref[kk], kk))


def test_select_k_single_and_errors():
    d = exp_regression().sample(12, seed=0)
    cfg = IpecConfig(0.5)
    assert select_k_by_ipec(d, d, [12], cfg)[0] == 12
    with pytest.raises(UnTunable):
        select_k_by_ipec(d, d, [100], cfg)


def test_cv_scores_are_fold_means(data):
    # recompute every fold by hand and average
    m = method_by_name("knn")
    r = cross_validate(data, m, [16], folds=2, seed=4)
    vals = []
    for f, held in enumerate(fold_indices(len(data), 2, 4)):
        tr_idx = np.setdiff1d(np.arange(len(data)), held)
        std = selection.fit_standardizer(data.subset(tr_idx))
        tr, te = std.apply(data.subset(tr_idx)), std.apply(data.subset(held))
        vals.append(selection.evaluate_criterion("cindex", m, m.fit(tr, [16], 4 + f), tr, te, 16))
    assert r.scores[16] == math.fsum(vals) / 2
