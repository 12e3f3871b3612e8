"""Likelihood models and univariate conditional posterior targets.

Three models ship: Poisson histogram smoothing (log link), Binomial
regression (logit link), and Negative-Binomial count smoothing (log link
plus an overdispersion parameter sampled on the log scale).

Each model exposes, for every sampled scalar parameter, a
:class:`ConditionalTarget` bundling the conditional log posterior and its
first two derivatives. Targets capture a read-only snapshot of the sweep
state; the sweep itself mutates one coordinate at a time and keeps the
linear predictors ``eta = B theta`` up to date with rank-one updates, so a
target evaluation costs O(points in the coefficient's support) rather than
O(n K).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import expit, gammaln

from .errors import (
    DataValidationError,
    InvalidDimensionError,
    InvalidParameterError,
    NumericFailureError,
    UnsupportedOperationError,
)
from .penalty import PenaltyModel

ETA_MAX = 700.0  # exp() overflows float64 just above 709; fail loudly before that

UNBOUNDED = (-np.inf, np.inf)


def _checked_exp(eta, where="linear predictor"):
    """exp() that raises instead of silently saturating to inf."""
    m = eta.max()
    if m > ETA_MAX:
        raise NumericFailureError(f"{where} overflow: eta={m:.3g} exceeds {ETA_MAX}", abscissa=float(m))
    return np.exp(eta)


# ---------------------------------------------------------------------------
# data containers


@dataclass(frozen=True)
class HistogramData:
    """Equal-width histogram: bin midpoints, counts, and the bin width."""

    midpoints: np.ndarray
    counts: np.ndarray
    binwidth: float

    def __post_init__(self):
        object.__setattr__(self, "midpoints", np.asarray(self.midpoints, dtype=float))
        object.__setattr__(self, "counts", np.asarray(self.counts, dtype=float))
        x, y = self.midpoints, self.counts
        if x.ndim != 1 or y.ndim != 1 or len(x) != len(y):
            raise DataValidationError("midpoints and counts must be 1-d and equal length")
        if self.binwidth <= 0:
            raise DataValidationError(f"binwidth must be positive, got {self.binwidth}")
        if len(x) > 1:
            gaps = np.diff(x)
            if np.any(gaps <= 0):
                raise DataValidationError("midpoints must be strictly increasing")
            if np.max(np.abs(gaps - self.binwidth)) > 1e-9:
                raise DataValidationError("midpoints must be equally spaced at the bin width")
        if np.any(y < 0) or np.any(y != np.round(y)):
            raise DataValidationError("counts must be nonnegative integers")

    @property
    def support(self) -> tuple[float, float]:
        """Union of the bins."""
        half = 0.5 * self.binwidth
        return float(self.midpoints[0] - half), float(self.midpoints[-1] + half)


@dataclass(frozen=True)
class BinomialData:
    """Triplets (y successes out of m trials at covariate x)."""

    x: np.ndarray
    y: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        object.__setattr__(self, "m", np.asarray(self.m, dtype=float))
        if not (len(self.x) == len(self.y) == len(self.m)):
            raise DataValidationError("x, y, m must have equal length")
        if np.any(self.m < 1) or np.any(self.m != np.round(self.m)):
            raise DataValidationError("trial counts m must be positive integers")
        if np.any(self.y < 0) or np.any(self.y != np.round(self.y)):
            raise DataValidationError("success counts y must be nonnegative integers")
        bad = np.flatnonzero(self.y > self.m)
        if bad.size:
            raise DataValidationError(f"y > m at row {bad[0]}")


@dataclass(frozen=True)
class CountSeriesData:
    """Count series with covariate x (defaults to 1..n)."""

    y: np.ndarray
    x: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        if self.y.ndim != 1 or len(self.y) < 1:
            raise DataValidationError("y must be a nonempty 1-d sequence")
        if np.any(self.y < 0) or np.any(self.y != np.round(self.y)):
            raise DataValidationError("counts must be nonnegative integers")
        x = np.arange(1, len(self.y) + 1, dtype=float) if self.x is None else np.asarray(self.x, dtype=float)
        if len(x) != len(self.y):
            raise DataValidationError("x and y must have equal length")
        object.__setattr__(self, "x", x)


@dataclass
class ModelState:
    """Current values of all sampled parameters of one chain."""

    theta: np.ndarray
    lam: float
    delta: float
    rho: Optional[float] = None

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if self.lam <= 0 or self.delta <= 0:
            raise InvalidParameterError("lam and delta must be positive")
        if self.rho is not None and self.rho <= 0:
            raise InvalidParameterError("rho must be positive")

    def copy(self) -> "ModelState":
        return ModelState(self.theta.copy(), self.lam, self.delta, self.rho)


@dataclass(frozen=True)
class ConditionalTarget:
    """Univariate log density (up to a constant) with derivatives.

    ``logpdf``, ``dlogpdf`` and ``d2logpdf`` accept scalars or arrays.
    ``support`` restricts the density to an interval; the bundled models all
    live on the whole real line. ``fused`` (scalar t -> (phi, phi', phi''))
    and ``value_grad`` (vector t -> (phi, phi')) are optional fast paths that
    share one exp() evaluation; semantics match the separate callables.
    """

    logpdf: Callable
    dlogpdf: Callable
    d2logpdf: Callable
    declared_logconcave: bool
    support: tuple[float, float] = UNBOUNDED
    fused: Optional[Callable] = None
    value_grad: Optional[Callable] = None


# ---------------------------------------------------------------------------
# models


class _SplineModel:
    """Shared machinery: per-coefficient support slices of the design matrix."""

    def __init__(self, B: np.ndarray, n: int):
        B = np.asarray(B, dtype=float)
        if B.ndim != 2 or B.shape[0] != n:
            raise DataValidationError(f"design matrix must be {n} x K, got {B.shape}")
        self.B = B
        self.K = B.shape[1]
        # basis functions have local support: keep only the rows they touch
        self._rows = [np.flatnonzero(B[:, k]) for k in range(self.K)]
        self._bvals = [np.ascontiguousarray(B[idx, k]) for k, idx in enumerate(self._rows)]

    def linear_predictor(self, theta: np.ndarray) -> np.ndarray:
        return self.B @ np.asarray(theta, dtype=float)

    def support_rows(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Row indices touched by coefficient k and the basis values there."""
        return self._rows[k], self._bvals[k]


class PoissonModel(_SplineModel):
    """Histogram smoothing: counts are independent Poisson with log-linear mean."""

    link = "log"

    def __init__(self, data: HistogramData, B: np.ndarray):
        super().__init__(B, len(data.counts))
        self.data = data
        self._sum_yb = self.B.T @ data.counts

    def loglik(self, theta: np.ndarray) -> float:
        eta = self.linear_predictor(theta)
        return float(self.data.counts @ eta - np.sum(_checked_exp(eta)))

    def _cond_loglik(self, k: int, eta_minus: np.ndarray):
        b = self._bvals[k]
        b2 = b * b
        syb = self._sum_yb[k]

        def f(t):
            t = np.asarray(t, dtype=float)
            e = _checked_exp(eta_minus + np.multiply.outer(t, b))
            return t * syb - e.sum(axis=-1)

        def f1(t):
            t = np.asarray(t, dtype=float)
            e = _checked_exp(eta_minus + np.multiply.outer(t, b))
            return syb - e @ b

        def f2(t):
            t = np.asarray(t, dtype=float)
            e = _checked_exp(eta_minus + np.multiply.outer(t, b))
            return -(e @ b2)

        def fused(t):
            e = _checked_exp(eta_minus + t * b)
            return t * syb - e.sum(), syb - e @ b, -(e @ b2)

        def value_grad(t):
            e = _checked_exp(eta_minus + np.multiply.outer(t, b))
            return t * syb - e.sum(axis=-1), syb - e @ b

        return f, f1, f2, fused, value_grad


class BinomialModel(_SplineModel):
    """Binomial regression with a logit link on the success probability."""

    link = "logit"

    def __init__(self, data: BinomialData, B: np.ndarray):
        super().__init__(B, len(data.y))
        self.data = data
        self._sum_yb = self.B.T @ data.y
        self._m_sub = [np.ascontiguousarray(data.m[idx]) for idx in self._rows]

    def loglik(self, theta: np.ndarray) -> float:
        eta = self.linear_predictor(theta)
        # log(1 + exp(eta)) via the softplus-stable branch
        return float(self.data.y @ eta - self.data.m @ np.logaddexp(0.0, eta))

    def _cond_loglik(self, k: int, eta_minus: np.ndarray):
        b = self._bvals[k]
        m = self._m_sub[k]
        mb = m * b
        mb2 = mb * b
        syb = self._sum_yb[k]

        def f(t):
            t = np.asarray(t, dtype=float)
            eta = eta_minus + np.multiply.outer(t, b)
            return t * syb - np.logaddexp(0.0, eta) @ m

        def f1(t):
            t = np.asarray(t, dtype=float)
            eta = eta_minus + np.multiply.outer(t, b)
            return syb - expit(eta) @ mb

        def f2(t):
            t = np.asarray(t, dtype=float)
            s = expit(eta_minus + np.multiply.outer(t, b))
            return -(s * (1.0 - s)) @ mb2

        def fused(t):
            eta = eta_minus + t * b
            s = expit(eta)
            return (
                t * syb - np.logaddexp(0.0, eta) @ m,
                syb - s @ mb,
                -(s * (1.0 - s)) @ mb2,
            )

        def value_grad(t):
            eta = eta_minus + np.multiply.outer(t, b)
            return t * syb - np.logaddexp(0.0, eta) @ m, syb - expit(eta) @ mb

        return f, f1, f2, fused, value_grad


class NegBinModel(_SplineModel):
    """Overdispersed count smoothing: mean mu = exp(eta), variance mu + mu^2 / rho.

    The likelihood is the unique negative-binomial parameterization with those
    first two moments; the theta- and rho-independent log(y!) term is dropped.
    """

    link = "log"

    def __init__(self, data: CountSeriesData, B: np.ndarray):
        super().__init__(B, len(data.y))
        self.data = data
        self._sum_yb = self.B.T @ data.y
        self._y_sub = [np.ascontiguousarray(data.y[idx]) for idx in self._rows]

    def loglik(self, theta: np.ndarray, rho: float) -> float:
        return float(self.loglik_rho_profile(theta, np.asarray([rho]))[0])

    def loglik_rho_profile(self, theta: np.ndarray, rhos: np.ndarray) -> np.ndarray:
        """Log likelihood at fixed theta for a vector of rho values."""
        rhos = np.asarray(rhos, dtype=float)
        if np.any(rhos <= 0):
            raise InvalidParameterError("rho must be positive")
        eta = self.linear_predictor(theta)
        if eta.max() > ETA_MAX:
            raise NumericFailureError("linear predictor overflow", abscissa=float(eta.max()))
        y = self.data.y
        r = rhos[:, None]
        ll = (
            gammaln(y + r)
            - gammaln(r)
            + r * np.log(r)
            + y * eta
            - (y + r) * np.logaddexp(np.log(r), eta)
        )
        return ll.sum(axis=1)

    def _cond_loglik(self, k: int, eta_minus: np.ndarray, rho: float):
        b = self._bvals[k]
        y = self._y_sub[k]
        syb = self._sum_yb[k]
        log_rho = np.log(rho)
        w = y + rho
        wb = w * b
        wb2 = wb * b
        shifted = eta_minus - log_rho

        def f(t):
            t = np.asarray(t, dtype=float)
            eta = eta_minus + np.multiply.outer(t, b)
            return t * syb - np.logaddexp(log_rho, eta) @ w

        def f1(t):
            t = np.asarray(t, dtype=float)
            # exp(eta) / (rho + exp(eta)) == expit(eta - log rho)
            s = expit(shifted + np.multiply.outer(t, b))
            return syb - s @ wb

        def f2(t):
            t = np.asarray(t, dtype=float)
            s = expit(shifted + np.multiply.outer(t, b))
            return -(s * (1.0 - s)) @ wb2

        def fused(t):
            eta = eta_minus + t * b
            s = expit(eta - log_rho)
            return (
                t * syb - np.logaddexp(log_rho, eta) @ w,
                syb - s @ wb,
                -(s * (1.0 - s)) @ wb2,
            )

        def value_grad(t):
            eta = eta_minus + np.multiply.outer(t, b)
            s = expit(eta - log_rho)
            return t * syb - np.logaddexp(log_rho, eta) @ w, syb - s @ wb

        return f, f1, f2, fused, value_grad


# ---------------------------------------------------------------------------
# public likelihood functions


def poisson_loglik(theta, B, data: HistogramData) -> float:
    return PoissonModel(data, B).loglik(theta)


def binom_loglik(theta, B, data: BinomialData) -> float:
    return BinomialModel(data, B).loglik(theta)


def negbin_loglik(theta, rho: float, B, data: CountSeriesData) -> float:
    return NegBinModel(data, B).loglik(theta, rho)


# ---------------------------------------------------------------------------
# conditional targets


def theta_conditional(
    model, state: ModelState, k: int, pm: PenaltyModel, eta: Optional[np.ndarray] = None
) -> ConditionalTarget:
    """Conditional posterior of coefficient ``k`` given everything else.

    The log density is the concave quadratic prior part plus the conditional
    log likelihood:  -lam z_k t^2 / 2 + lam psi_k t + loglik(t | rest).
    Passing ``eta`` (the current linear predictors) avoids recomputing
    ``B theta``; the sweep maintains it with rank-one updates.
    """
    K = model.K
    if not 0 <= k < K:
        raise InvalidDimensionError(f"coefficient index {k} out of range for K={K}")
    theta = state.theta
    if eta is None:
        eta = model.linear_predictor(theta)
    rows, b = model.support_rows(k)
    eta_minus = eta[rows] - theta[k] * b

    lam_z = state.lam * pm.z[k]
    # psi_r = z_r * conditional prior mean
    lam_psi = state.lam * pm.z[k] * float(pm.C[:, k] @ theta)

    if isinstance(model, NegBinModel):
        if state.rho is None:
            raise InvalidParameterError("NegBin state requires rho")
        f, f1, f2, lik_fused, lik_vg = model._cond_loglik(k, eta_minus, state.rho)
    else:
        f, f1, f2, lik_fused, lik_vg = model._cond_loglik(k, eta_minus)

    def logpdf(t):
        t = np.asarray(t, dtype=float)
        return -0.5 * lam_z * t * t + lam_psi * t + f(t)

    def dlogpdf(t):
        t = np.asarray(t, dtype=float)
        return -lam_z * t + lam_psi + f1(t)

    def d2logpdf(t):
        return -lam_z + f2(t)

    def fused(t):
        v, g, h = lik_fused(t)
        return (
            -0.5 * lam_z * t * t + lam_psi * t + v,
            -lam_z * t + lam_psi + g,
            -lam_z + h,
        )

    def value_grad(t):
        v, g = lik_vg(t)
        return -0.5 * lam_z * t * t + lam_psi * t + v, -lam_z * t + lam_psi + g

    return ConditionalTarget(
        logpdf, dlogpdf, d2logpdf, declared_logconcave=True,
        fused=fused, value_grad=value_grad,
    )


def rho_conditional(state: ModelState, model, a_rho: float, b_rho: float) -> ConditionalTarget:
    """Conditional posterior of log(rho) for the Negative-Binomial model.

    log density: loglik(theta, exp(t)) + a_rho t - b_rho exp(t). Log-concavity
    of this target is not established, so it is flagged for the grid sampler
    and its derivatives are central finite differences.
    """
    if not isinstance(model, NegBinModel):
        raise UnsupportedOperationError("rho is only a parameter of the NegBin model")
    theta = state.theta.copy()
    # exp(t) must stay a positive normal float; beyond these bounds the data
    # carry no information about rho anyway
    support = (-ETA_MAX, ETA_MAX)

    def logpdf(t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tv = np.atleast_1d(t)
        if tv.max() > ETA_MAX or tv.min() < -ETA_MAX:
            bad = float(tv.max() if tv.max() > ETA_MAX else tv.min())
            raise NumericFailureError("log rho outside numeric support", abscissa=bad)
        out = model.loglik_rho_profile(theta, np.exp(tv)) + a_rho * tv - b_rho * np.exp(tv)
        return float(out[0]) if scalar else out

    def dlogpdf(t):
        t = np.asarray(t, dtype=float)
        h = 1e-6 * np.maximum(1.0, np.abs(t))
        return (logpdf(t + h) - logpdf(t - h)) / (2.0 * h)

    def d2logpdf(t):
        # wider step than the gradient: second differences divide by h^2
        t = np.asarray(t, dtype=float)
        h = 1e-4 * np.maximum(1.0, np.abs(t))
        return (logpdf(t + h) - 2.0 * logpdf(t) + logpdf(t - h)) / (h * h)

    return ConditionalTarget(
        logpdf, dlogpdf, d2logpdf, declared_logconcave=False, support=support
    )
