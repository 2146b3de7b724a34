"""Synthetic survival models with closed-form conditional tails.

All three models make both ``T | X = x`` and ``C | X = x`` Weibull with a
common shape ``q`` and an x-dependent rate ``lam``, i.e.
``S(t|x) = exp(-(lam(x) t)^q)``; exponential regression is ``q = 1``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import gammainc

from .data import Dataset

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class UniformBox:
    """Uniform features on ``[lo, hi]^d``."""

    d: int = 1
    lo: float = 0.0
    hi: float = 1.0

    def sample(self, n, rng):
        return rng.uniform(self.lo, self.hi, size=(n, self.d))

    def vertices(self):
        return np.array(list(itertools.product((self.lo, self.hi), repeat=self.d)), dtype=float)


@dataclass(frozen=True)
class UniformInt:
    """Uniform features on ``{lo, ..., hi}`` (one-dimensional)."""

    lo: int = 1
    hi: int = 100
    d = 1

    def sample(self, n, rng):
        return rng.integers(self.lo, self.hi + 1, size=(n, 1)).astype(float)


def _as_vec(beta, d):
    b = np.atleast_1d(np.asarray(beta, dtype=float))
    if b.size == 1 and d > 1:
        b = np.full(d, float(b[0]))
    if b.size != d:
        raise ValueError(f"coefficient vector has length {b.size}, expected {d}")
    return b


@dataclass(frozen=True, eq=False)
class GroundTruthModel:
    """Conditional Weibull survival/censoring model.

    Use the :func:`exp_regression`, :func:`weibull_regression` and
    :func:`weibull_mixture` constructors rather than building this directly.
    """

    kind: str
    params: dict = field(default_factory=dict)
    feature_law: object = field(default_factory=UniformBox)

    @property
    def q(self) -> float:
        return float(self.params.get("q", 1.0))

    def rates(self, X):
        """Rates ``(lam_T(x), lam_C(x))`` for each row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        p = self.params
        if self.kind in ("expreg", "weibreg"):
            d = X.shape[1]
            lt = p["h_T0"] * np.exp(X @ _as_vec(p["beta_T"], d))
            lc = p["h_C0"] * np.exp(X @ _as_vec(p["beta_C"], d))
            return lt, lc
        if self.kind == "weibmix":
            first = X[:, 0] <= p["nu"]
            lt = np.where(first, 1.0 / p["psi_T1"], 1.0 / p["psi_T2"])
            lc = np.where(first, 1.0 / p["psi_C1"], 1.0 / p["psi_C2"])
            return lt, lc
        raise ValueError(f"unknown model kind {self.kind!r}")

    def _tail(self, rate, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-np.power(rate * t, self.q))

    def true_survival(self, x, t):
        lt, _ = self.rates(np.reshape(x, (1, -1)))
        out = self._tail(lt[0], t)
        return float(out) if np.ndim(out) == 0 else out

    def true_censoring(self, x, t):
        _, lc = self.rates(np.reshape(x, (1, -1)))
        out = self._tail(lc[0], t)
        return float(out) if np.ndim(out) == 0 else out

    def true_cum_hazard(self, x, t):
        lt, _ = self.rates(np.reshape(x, (1, -1)))
        out = np.power(lt[0] * np.asarray(t, dtype=float), self.q)
        return float(out) if np.ndim(out) == 0 else out

    def true_observed_tail(self, x, t):
        return self.true_survival(x, t) * self.true_censoring(x, t)

    def survival_fn(self, x):
        """``t -> S(t|x)`` as a callable."""
        lt = float(self.rates(np.reshape(x, (1, -1)))[0][0])
        return lambda t: self._tail(lt, t)

    def survival_integral(self, x, a, b, power: int = 1) -> float:
        """``int_a^b S(t|x)^power dt`` in closed form."""
        lt = float(self.rates(np.reshape(x, (1, -1)))[0][0])
        q = self.q
        # S^p is Weibull with rate lam * p^(1/q)
        lam = lt * power ** (1.0 / q)
        s = 1.0 / q
        scale = gamma_fn(s) / (lam * q)
        return float(scale * (gammainc(s, (lam * b) ** q) - gammainc(s, (lam * a) ** q)))

    def sample(self, n: int, seed=0, return_truth: bool = False):
        """Draw ``n`` records by inverse-CDF sampling of T and C given X."""
        if n < 1:
            raise ValueError("n must be at least 1")
        rng = np.random.default_rng(seed)
        X = self.feature_law.sample(n, rng)
        lt, lc = self.rates(X)
        # inverse CDF of exp(-(lam t)^q)
        T = np.power(-np.log1p(-rng.random(n)), 1.0 / self.q) / lt
        C = np.power(-np.log1p(-rng.random(n)), 1.0 / self.q) / lc
        Y = np.minimum(T, C)
        delta = (T <= C).astype(int)
        names = tuple(f"x{j}" for j in range(X.shape[1]))
        data = Dataset(X, Y, delta, names)
        if return_truth:
            return data, T, C
        return data

    def theta_tau(self):
        """``(theta, tau)`` with ``theta = 1/2`` and ``tau`` the smallest median of ``Y | X``."""
        q = self.q
        if self.kind == "weibmix":
            p = self.params
            a = 1.0 / (p["psi_T1"] ** -q + p["psi_C1"] ** -q)
            b = 1.0 / (p["psi_T2"] ** -q + p["psi_C2"] ** -q)
            return 0.5, (min(a, b) * LOG2) ** (1.0 / q)
        law = self.feature_law
        if not isinstance(law, UniformBox):
            raise ValueError("tau for regression models needs a box-shaped support")
        if law.d > 20:
            raise ValueError("support corner enumeration limited to d <= 20")
        # omega'^q is a sum of exponentials of linear functions: convex, so its
        # maximum over the box sits at a vertex
        lt, lc = self.rates(law.vertices())
        omega = np.power(lt ** q + lc ** q, 1.0 / q)
        return 0.5, float(LOG2 ** (1.0 / q) / omega.max())


def exp_regression(h_T0=1.0, beta_T=0.0, h_C0=1.0, beta_C=0.0, d=1, lo=0.0, hi=1.0):
    _check_pos(h_T0=h_T0, h_C0=h_C0)
    return GroundTruthModel("expreg", dict(h_T0=h_T0, beta_T=_as_vec(beta_T, d).tolist(),
                                           h_C0=h_C0, beta_C=_as_vec(beta_C, d).tolist(), q=1.0),
                            UniformBox(d, lo, hi))


def weibull_regression(q=2.0, h_T0=1.0, beta_T=0.0, h_C0=1.0, beta_C=0.0, d=1, lo=0.0, hi=1.0):
    _check_pos(q=q, h_T0=h_T0, h_C0=h_C0)
    return GroundTruthModel("weibreg", dict(h_T0=h_T0, beta_T=_as_vec(beta_T, d).tolist(),
                                            h_C0=h_C0, beta_C=_as_vec(beta_C, d).tolist(), q=q),
                            UniformBox(d, lo, hi))


def weibull_mixture(q=2.0, psi_T1=1.0, psi_T2=2.0, psi_C1=1.0, psi_C2=2.0, nu=50.0):
    _check_pos(q=q, psi_T1=psi_T1, psi_T2=psi_T2, psi_C1=psi_C1, psi_C2=psi_C2)
    if not 1 < nu < 100:
        raise ValueError("nu must lie in (1, 100)")
    return GroundTruthModel("weibmix", dict(q=q, psi_T1=psi_T1, psi_T2=psi_T2,
                                            psi_C1=psi_C1, psi_C2=psi_C2, nu=nu),
                            UniformInt(1, 100))


def _check_pos(**kw):
    for k, v in kw.items():
        if not v > 0:
            raise ValueError(f"{k} must be positive, got {v}")


def model_by_name(name: str, **params) -> GroundTruthModel:
    builders = {"expreg": exp_regression, "weibreg": weibull_regression,
                "weibmix": weibull_mixture}
    if name not in builders:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(builders)}")
    return builders[name](**params)
