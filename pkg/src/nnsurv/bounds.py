"""Closed-form calculators for the nonasymptotic pointwise error bounds.

Each ``*_bound_rhs`` returns a :class:`BoundValue` holding the total and the
individual terms. Values above 1 are vacuous but returned unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BoundInputs:
    n: int
    epsilon: float
    theta: float
    tau: float = 1.0
    k: int | None = None
    h: float | None = None
    lambda_T: float = 0.0
    lambda_C: float = 0.0
    f_T_star: float = 0.0
    alpha: float = 1.0
    ball_mass: float = 1.0
    kappa: float = 1.0

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must be in (0, 1)")
        if not 0 < self.theta <= 0.5:
            raise ValueError("theta must be in (0, 1/2]")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if min(self.lambda_T, self.lambda_C, self.f_T_star) < 0:
            raise ValueError("Lipschitz constants and f_T_star must be nonnegative")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not 0 <= self.ball_mass <= 1:
            raise ValueError("ball_mass must be in [0, 1]")
        if not 0 < self.kappa <= 1:
            raise ValueError("kappa must be in (0, 1]")


@dataclass(frozen=True)
class BoundValue:
    total: float
    terms: tuple
    labels: tuple = ()
    preconditions_met: bool = True
    note: str = ""


def capital_lambda(inp: BoundInputs):
    """Return ``(Lambda, Lambda_K, h_star)``.

    ``h_star = (eps theta / (18 Lambda))^(1/alpha)`` is infinite when
    ``Lambda = 0`` (feature-independent model).
    """
    cdf_part = 2.0 * inp.tau / inp.theta * (inp.lambda_T + inp.lambda_C)
    reg_part = inp.lambda_T * inp.tau + inp.f_T_star * inp.lambda_C * inp.tau ** 2 / 2.0
    lam = max(cdf_part, reg_part)
    lam_k = max(cdf_part / inp.kappa, reg_part)
    h_star = critical_distance(inp.epsilon, inp.theta, lam, inp.alpha)
    return lam, lam_k, h_star


def critical_distance(epsilon, theta, lam, alpha=1.0) -> float:
    if lam == 0:
        return math.inf
    return (epsilon * theta / (18.0 * lam)) ** (1.0 / alpha)


def _sum(terms, labels, ok=True, note=""):
    return BoundValue(float(math.fsum(terms)), tuple(float(t) for t in terms), labels, ok, note)


_KNN_LABELS = ("few survivors past tau", "neighbors beyond h*", "CDF estimation",
               "regression")


def knn_bound_rhs(inp: BoundInputs) -> BoundValue:
    """k-NN Kaplan-Meier pointwise bound.

    Precondition ``72/(eps theta^2) <= k <= n P(B(x,h*))/2`` is reported in
    ``preconditions_met``, not enforced.
    """
    k, e, th, nb = inp.k, inp.epsilon, inp.theta, inp.n * inp.ball_mass
    terms = (math.exp(-k * th / 8.0),
             math.exp(-nb / 8.0),
             2.0 * math.exp(-k * e ** 2 * th ** 4 / 648.0),
             8.0 / e * math.exp(-k * e ** 2 * th ** 2 / 162.0))
    ok = 72.0 / (e * th ** 2) <= k <= nb / 2.0
    return _sum(terms, _KNN_LABELS, ok)


def _na_multiplier(e, th):
    return 2.0 * (3.0 / e * math.log(1.0 / th) + 1.0)


def na_knn_bound_rhs(inp: BoundInputs) -> BoundValue:
    """Nelson-Aalen k-NN bound on ``sup |H_hat - H|``."""
    k, e, th, nb = inp.k, inp.epsilon, inp.theta, inp.n * inp.ball_mass
    terms = (math.exp(-k * th / 8.0),
             math.exp(-nb / 8.0),
             2.0 * math.exp(-k * e ** 2 * th ** 4 / 648.0),
             _na_multiplier(e, th) * math.exp(-k * e ** 2 * th ** 2 / 162.0))
    ok = 72.0 / (e * th ** 2) <= k <= nb / 2.0
    return _sum(terms, _KNN_LABELS, ok)


def _radius_terms(inp, last_mult):
    e, th, nb = inp.epsilon, inp.theta, inp.n * inp.ball_mass
    return (math.exp(-nb * th / 16.0),
            math.exp(-nb / 8.0),
            2.0 * math.exp(-nb * e ** 2 * th ** 4 / 1296.0),
            last_mult * math.exp(-nb * e ** 2 * th ** 2 / 324.0))


def _radius_ok(inp):
    lam, _, h_star = capital_lambda(inp)
    return (inp.h is None or inp.h <= h_star) and \
        inp.n * inp.ball_mass >= 144.0 / (inp.epsilon * inp.theta ** 2)


def radius_bound_rhs(inp: BoundInputs) -> BoundValue:
    """Fixed-radius NN bound; ``ball_mass`` is ``P(B(x, h))``."""
    return _sum(_radius_terms(inp, 8.0 / inp.epsilon), _KNN_LABELS, _radius_ok(inp))


def na_radius_bound_rhs(inp: BoundInputs) -> BoundValue:
    return _sum(_radius_terms(inp, _na_multiplier(inp.epsilon, inp.theta)), _KNN_LABELS,
                _radius_ok(inp))


def _kernel_terms(inp, last_mult):
    e, th, kap, nb = inp.epsilon, inp.theta, inp.kappa, inp.n * inp.ball_mass
    return (math.exp(-nb * th / 16.0),
            math.exp(-nb / 8.0),
            216.0 / (e * th ** 2 * kap) * math.exp(-nb * e ** 2 * th ** 4 * kap ** 4 / 11664.0),
            last_mult * math.exp(-nb * e ** 2 * th ** 2 * kap ** 2 / 324.0))


def _kernel_ok(inp, phi=1.0):
    _, lam_k, _ = capital_lambda(inp)
    h_max = critical_distance(inp.epsilon, inp.theta, lam_k, inp.alpha) / phi
    return (inp.h is None or inp.h <= h_max) and \
        inp.n * inp.ball_mass * inp.kappa >= 144.0 / (inp.epsilon * inp.theta ** 2)


def kernel_bound_rhs(inp: BoundInputs) -> BoundValue:
    """Kernel estimator bound; ``ball_mass`` is ``P(B(x, phi h))``."""
    return _sum(_kernel_terms(inp, 8.0 / inp.epsilon), _KNN_LABELS, _kernel_ok(inp))


def na_kernel_bound_rhs(inp: BoundInputs) -> BoundValue:
    return _sum(_kernel_terms(inp, _na_multiplier(inp.epsilon, inp.theta)), _KNN_LABELS,
                _kernel_ok(inp))


BOUNDS = {
    "knn": knn_bound_rhs,
    "radius": radius_bound_rhs,
    "kernel": kernel_bound_rhs,
    "na-knn": na_knn_bound_rhs,
    "na-radius": na_radius_bound_rhs,
    "na-kernel": na_kernel_bound_rhs,
}


def knn_sufficient(epsilon, gamma, theta, n, ball_mass):
    """Smallest and largest admissible ``k`` so that the k-NN bound is at most ``gamma``.

    Returns ``(k_lo, k_hi, feasible)``.
    """
    k_lo = math.ceil(648.0 / (epsilon ** 2 * theta ** 4) * math.log(32.0 / (epsilon * gamma)))
    k_hi = math.floor(n * ball_mass / 2.0)
    return k_lo, k_hi, k_lo <= k_hi


def knn_schedule(n, alpha=1.0, d=1.0, c1=1.0, c2=1.0) -> int:
    """``floor(c1 n^(2a/(2a+d)) log(c2 n)^(d/(2a+d)))`` clamped to ``[1, n]``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    denom = 2.0 * alpha + d
    base = c1 * n ** (2.0 * alpha / denom)
    lg = math.log(c2 * n)
    k = math.floor(base * max(lg, 0.0) ** (d / denom)) if lg > 0 else math.floor(base)
    return int(min(max(k, 1), n))


def ball_mass_uniform_1d(x: float, r: float, lo: float = 0.0, hi: float = 1.0) -> float:
    """``P(|X - x| <= r)`` for ``X ~ Uniform[lo, hi]``."""
    if math.isinf(r):
        return 1.0
    left, right = max(lo, x - r), min(hi, x + r)
    return max(0.0, right - left) / (hi - lo)


def expreg_lipschitz(h0: float, beta, lo=0.0, hi=1.0):
    """Lipschitz constant in x (Euclidean) of the exponential-regression density.

    The gradient is ``f(t|x)(1 - r t) beta`` with ``r = h0 e^{x.beta}``; since
    ``|1 - u| e^{-u} <= 1`` its norm peaks at ``t = 0``, giving
    ``max_x r(x) ||beta||``. Returns ``(lambda, sup_x,t f)`` over the box.
    """
    b = np.atleast_1d(np.asarray(beta, dtype=float))
    # x.beta is maximised at the vertex matching sign(beta)
    top = float(np.sum(np.where(b > 0, b * hi, b * lo)))
    r_max = h0 * math.exp(top)
    return r_max * float(np.linalg.norm(b)), r_max


def weighted_edf_bound(epsilon: float, weights) -> float:
    """``(6/eps) exp(-2 eps^2 (sum w)^2 / (9 sum w^2))``, tail of ``sup |F_hat - F|``."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or not np.any(w > 0):
        raise ValueError("weights must be nonnegative and not all zero")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must be in (0, 1)")
    eff = w.sum() ** 2 / np.square(w).sum()
    return 6.0 / epsilon * math.exp(-2.0 * epsilon ** 2 * eff / 9.0)
