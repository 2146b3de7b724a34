import math

import numpy as np
import pytest
from scipy.integrate import quad

from nnsurv.data import Dataset
from nnsurv.errors import InvalidConfig, NoComparablePairs
from nnsurv.evaluation import (IpecConfig, concordance_index, default_tau, ipec, ipec_integrand,
                               mse_vs_truth, risk_scores)
from nnsurv.stepfn import StepFunction
from nnsurv.synthetic import exp_regression
from oracles import cindex_bruteforce


def _test_set(times, events):
    return Dataset(np.zeros((len(times), 1)), times, events)


ABC = _test_set([1.0, 2.0, 3.0], [1, 0, 1])


def test_cindex_examples():
    assert concordance_index(ABC, [3, 2, 1]) == 1.0
    assert concordance_index(ABC, [1, 2, 3]) == 0.0
    d = _test_set([1.0, 2.0, 3.0, 4.0], [1, 1, 1, 1])
    assert concordance_index(d, [1, 1, 1, 1]) == 0.5


def test_cindex_no_pairs():
    with pytest.raises(NoComparablePairs):
        concordance_index(_test_set([1.0, 2.0], [0, 0]), [1, 2])
    with pytest.raises(NoComparablePairs):
        concordance_index(_test_set([1.0], [1]), [1])


def test_cindex_tied_times():
    d = _test_set([2.0, 2.0], [1, 1])
    assert concordance_index(d, [1, 1]) == 1.0
    assert concordance_index(d, [1, 2]) == 0.5
    d = _test_set([2.0, 2.0], [1, 0])
    assert concordance_index(d, [2, 1]) == 1.0
    assert concordance_index(d, [1, 2]) == 0.5


def test_cindex_bruteforce(rng):
    for _ in range(300):
        n = int(rng.integers(2, 12))
        t = rng.integers(0, 5, n).astype(float)
        e = rng.integers(0, 2, n)
        r = rng.integers(0, 4, n).astype(float)
        ref = cindex_bruteforce(t.tolist(), e.tolist(), r.tolist())
        if ref is None:
            with pytest.raises(NoComparablePairs):
                concordance_index(_test_set(t, e), r)
        else:
            assert concordance_index(_test_set(t, e), r) == pytest.approx(ref, abs=1e-12)


def test_risk_scores():
    zero = StepFunction.constant(0.0)
    assert risk_scores([zero, zero], [1.0, 2.0]).tolist() == [0.0, 0.0]
    h2 = StepFunction([1.0, 2.0], [0.5, 1.0], 0.0)
    h1 = StepFunction([1.0, 2.0], [1.0, 2.0], 0.0)
    s = risk_scores([h1, h2], [1.0, 2.0, 2.0, 3.0])
    assert s[0] == 2 * s[1]
    # unique times 1, 2, 3: h1 gives 1 + 2 + 2
    assert s[0] == 5.0


def test_risk_scores_manual():
    hs = [StepFunction([0.5], [0.2], 0.0), StepFunction([1.5, 2.5], [0.1, 0.7], 0.0),
          StepFunction.constant(0.0)]
    times = [1.0, 2.0, 3.0, 1.0]
    got = risk_scores(hs, times)
    want = [sum(h(t) for t in (1.0, 2.0, 3.0)) for h in hs]
    assert got.tolist() == pytest.approx(want)


def test_ipec_one_subject():
    d = _test_set([0.5], [1])
    one = StepFunction.constant(1.0)
    assert ipec(d, [one], [one], IpecConfig(1.0)) == 0.5


def test_ipec_perfect_is_zero():
    d = _test_set([0.5, 2.0], [1, 0])
    surv = [StepFunction([0.5], [0.0], 1.0), StepFunction([2.0], [0.0], 1.0)]
    one = StepFunction.constant(1.0)
    assert ipec(d, surv, [one, one], IpecConfig(3.0)) == 0.0


def test_ipec_config_errors():
    with pytest.raises(InvalidConfig):
        IpecConfig(0.0)
    with pytest.raises(InvalidConfig):
        IpecConfig(1.0, theta_lb=0.0)


def _random_step(rng, initial, decreasing=True):
    m = int(rng.integers(0, 6))
    t = np.sort(rng.choice(np.linspace(0.05, 3, 60), m, replace=False))
    v = np.sort(rng.uniform(0, 1, m))
    if decreasing:
        v = v[::-1] * initial
    return StepFunction(t, v, initial)


def test_ipec_bound_and_quadrature(rng):
    for _ in range(40):
        n = int(rng.integers(1, 4))
        d = _test_set(rng.uniform(0.01, 3, n).round(2), rng.integers(0, 2, n))
        surv = [_random_step(rng, 1.0) for _ in range(n)]
        cens = [_random_step(rng, 1.0) for _ in range(n)]
        cfg = IpecConfig(float(rng.uniform(0.5, 3)), float(rng.choice([1e-6, 0.1, 0.3])))
        got = ipec(d, surv, cens, cfg)
        assert 0 <= got <= cfg.tau / cfg.theta_lb
        total = 0.0
        for i in range(n):
            f = ipec_integrand(d.times[i], d.events[i], surv[i], cens[i], cfg)
            brk = sorted({*surv[i].jump_times, *cens[i].jump_times, d.times[i]})
            brk = [b for b in brk if 0 < b < cfg.tau]
            total += quad(f, 0, cfg.tau, points=brk or None, limit=200, epsabs=1e-13,
                          epsrel=1e-13)[0]
        assert got == pytest.approx(total / n, abs=1e-9, rel=1e-9)


def test_default_tau():
    assert default_tau([1, 2, 3, 4, 5]) == 4.0


def test_mse_constant_one_example():
    m = exp_regression(beta_T=0.0)
    x = np.array([[0.3]])
    res = mse_vs_truth([StepFunction.constant(1.0)], m, x, 1.0)
    want = 1 - 2 * (1 - math.exp(-1)) + (1 - math.exp(-2)) / 2
    assert res.excess == pytest.approx(want, abs=1e-12)
    assert res.excess == pytest.approx(0.168, abs=1e-3)
    assert res.mse == pytest.approx(res.excess + res.oracle_mse)


def test_mse_excess_nonnegative_and_vanishes(rng):
    m = exp_regression(beta_T=0.0)
    fine = np.linspace(0, 1, 200_001)[1:]
    s = StepFunction(fine, np.exp(-fine), 1.0)
    res = mse_vs_truth([s], m, [[0.5]], 1.0)
    assert 0 <= res.excess < 1e-10
