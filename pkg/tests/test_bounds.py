import math

import numpy as np
import pytest

from nnsurv.bounds import (BOUNDS, BoundInputs, ball_mass_uniform_1d, capital_lambda,
                           critical_distance, expreg_lipschitz, kernel_bound_rhs,
                           knn_bound_rhs, knn_schedule, knn_sufficient, na_knn_bound_rhs,
                           radius_bound_rhs, weighted_edf_bound)


def test_capital_lambda_formula():
    inp = BoundInputs(n=100, epsilon=0.5, theta=0.5, tau=1.0, lambda_T=1.0, lambda_C=1.0,
                      f_T_star=1.0)
    lam, lam_k, h_star = capital_lambda(inp)
    # (2 tau / theta)(lambda_T + lambda_C) = 8 beats lambda_T tau + f* lambda_C tau^2 / 2 = 1.5
    assert lam == 8.0 and lam_k == lam
    assert h_star == pytest.approx(0.25 / 144)


def test_critical_distance_example():
    assert critical_distance(0.5, 0.5, 4.0) == pytest.approx(0.25 / 72)
    assert critical_distance(0.5, 0.5, 0.0) == math.inf


def test_kappa_scales_first_part():
    inp = BoundInputs(n=100, epsilon=0.5, theta=0.5, lambda_T=1.0, lambda_C=1.0, kappa=0.5)
    lam, lam_k, _ = capital_lambda(inp)
    assert lam_k == 2 * lam


def test_knn_bound_terms():
    inp = BoundInputs(n=4000, epsilon=0.5, theta=0.5, k=1000, ball_mass=1.0)
    v = knn_bound_rhs(inp)
    want = (math.exp(-62.5), math.exp(-500.0), 2 * math.exp(-1000 * 0.015625 / 648),
            16 * math.exp(-1000 * 0.0625 / 162))
    for got, w in zip(v.terms, want):
        assert got == pytest.approx(w, rel=1e-15)
    assert v.total == pytest.approx(math.fsum(want), abs=1e-15)


def _knn_rhs_independent(k, nb, e, th):
    a = k * th / 8.0
    b = nb / 8.0
    c = k * (e * th * th) ** 2 / 648.0
    d = k * (e * th) ** 2 / 162.0
    return math.exp(-a) + math.exp(-b) + 2 * math.exp(-c) + (8 / e) * math.exp(-d)


def test_knn_bound_second_implementation(rng):
    for _ in range(200):
        k = int(rng.integers(1, 10_000))
        e, th = rng.uniform(0.01, 0.99), rng.uniform(0.01, 0.5)
        mass = rng.uniform(0.01, 1)
        n = int(rng.integers(k, 50_000))
        v = knn_bound_rhs(BoundInputs(n, e, th, k=k, ball_mass=mass))
        assert v.total == pytest.approx(_knn_rhs_independent(k, n * mass, e, th), rel=1e-12)


def test_bound_vanishes():
    prev = math.inf
    for k in (10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6):
        v = knn_bound_rhs(BoundInputs(2 * k, 0.5, 0.5, k=k)).total
        assert v < prev
        prev = v
    assert prev < 1e-6


@pytest.mark.parametrize("name", sorted(BOUNDS))
def test_monotone(name, rng):
    fn = BOUNDS[name]
    for _ in range(50):
        e, th = rng.uniform(0.05, 0.9), rng.uniform(0.05, 0.5)
        n, k = int(rng.integers(100, 10 ** 5)), int(rng.integers(1, 1000))
        mass = rng.uniform(0.1, 1)
        kap = rng.uniform(0.1, 1)
        base = fn(BoundInputs(n, e, th, k=k, ball_mass=mass, kappa=kap)).total
        assert fn(BoundInputs(n, e, th, k=k + 50, ball_mass=mass, kappa=kap)).total <= base
        assert fn(BoundInputs(2 * n, e, th, k=k, ball_mass=mass, kappa=kap)).total <= base
        assert fn(BoundInputs(n, min(e * 1.1, 0.99), th, k=k, ball_mass=mass,
                              kappa=kap)).total <= base


def test_kernel_vs_radius_structure():
    inp = BoundInputs(5000, 0.5, 0.5, h=0.1, ball_mass=0.4, kappa=1.0)
    r, kb = radius_bound_rhs(inp), kernel_bound_rhs(inp)
    assert r.terms[:2] == kb.terms[:2]
    assert r.terms[2] != kb.terms[2]


def test_na_variant_multiplier():
    inp = BoundInputs(4000, 0.5, 0.5, k=1000)
    a, b = knn_bound_rhs(inp), na_knn_bound_rhs(inp)
    ratio = b.terms[3] / a.terms[3]
    assert ratio == pytest.approx(2 * (3 / 0.5 * math.log(2) + 1) / 16)


def test_preconditions_reported():
    assert not knn_bound_rhs(BoundInputs(100, 0.5, 0.5, k=10)).preconditions_met
    assert knn_bound_rhs(BoundInputs(10_000, 0.5, 0.5, k=1000)).preconditions_met


def test_knn_sufficient():
    lo, hi, ok = knn_sufficient(0.5, 0.25, 0.5, 10 ** 6, 1.0)
    assert lo == math.ceil(648 * 16 / 0.25 * math.log(256))
    assert hi == 500_000 and ok
    assert not knn_sufficient(0.5, 0.25, 0.5, 10 ** 6, 0.0)[2]
    _, hi2, _ = knn_sufficient(0.5, 0.25, 0.5, 2 * 10 ** 6, 1.0)
    assert hi2 == 2 * hi


def test_knn_schedule():
    assert knn_schedule(1000) == 190
    for n in (2, 10, 1000, 10 ** 6):
        assert 1 <= knn_schedule(n, alpha=1, d=5, c1=3) <= n
    # d -> 0 gives k close to n
    assert abs(knn_schedule(10 ** 4, d=1e-9) - 10 ** 4) <= 1
    with pytest.raises(ValueError):
        knn_schedule(1)


def test_ball_mass():
    assert ball_mass_uniform_1d(0.5, 0.1) == pytest.approx(0.2)
    assert ball_mass_uniform_1d(0.0, 0.1) == pytest.approx(0.1)
    assert ball_mass_uniform_1d(0.5, math.inf) == 1.0


def test_expreg_lipschitz_numeric():
    h0, beta = 0.8, np.array([0.7, -0.4])
    lam, fstar = expreg_lipschitz(h0, beta)
    # brute-force sup of ||grad_x f(t|x)|| over a grid of the box and times
    best, best_f = 0.0, 0.0
    for a in np.linspace(0, 1, 21):
        for b in np.linspace(0, 1, 21):
            r = h0 * math.exp(a * beta[0] + b * beta[1])
            for t in np.linspace(0, 3, 61):
                f = r * math.exp(-r * t)
                best = max(best, abs(f * (1 - r * t)) * np.linalg.norm(beta))
                best_f = max(best_f, f)
    assert lam == pytest.approx(best, rel=1e-12)
    assert fstar == pytest.approx(best_f, rel=1e-12)


def test_weighted_edf_bound():
    w = np.ones(200)
    assert weighted_edf_bound(0.3, w) == pytest.approx(20 * math.exp(-2 * 0.09 * 200 / 9))
    with pytest.raises(ValueError):
        weighted_edf_bound(0.3, np.zeros(3))


def test_inputs_validation():
    with pytest.raises(ValueError):
        BoundInputs(10, 1.5, 0.5)
    with pytest.raises(ValueError):
        BoundInputs(10, 0.5, 0.7)
    with pytest.raises(ValueError):
        BoundInputs(10, 0.5, 0.5, kappa=0.0)
