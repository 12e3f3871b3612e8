"""Posterior summaries, fitted curves, density normalization, and Geweke checks.

Pure post-processing over an immutable chain; burn-in rows are discarded here,
not by the sampler, so trace plots can show the warm-up.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .basis import KnotVector, design_matrix
from .errors import InvalidParameterError
from .gibbs import Chain

LINKS = {
    "log": np.exp,
    "logit": expit,
    "identity": lambda x: x,
}

MIN_RETAINED = 100
QUAD_POINTS = 2001


@dataclass(frozen=True)
class ParamSummary:
    mean: float
    sd: float
    q2_5: float
    q50: float
    q97_5: float


@dataclass(frozen=True)
class FittedCurve:
    grid: np.ndarray
    estimate: np.ndarray
    lo95: np.ndarray
    hi95: np.ndarray
    link: str


def posterior_summary(chain: Chain) -> dict[str, ParamSummary]:
    """Moments and empirical quantiles of every parameter, post burn-in."""
    rows = chain.post_burnin()
    if rows.shape[0] < MIN_RETAINED:
        raise InvalidParameterError(
            f"need at least {MIN_RETAINED} retained draws, have {rows.shape[0]}"
        )
    out = {}
    q = np.percentile(rows, [2.5, 50.0, 97.5], axis=0)
    means = rows.mean(axis=0)
    sds = rows.std(axis=0, ddof=1)
    for j, name in enumerate(chain.names):
        out[name] = ParamSummary(means[j], sds[j], q[0, j], q[1, j], q[2, j])
    return out


def fitted_curve(
    chain: Chain, kv: KnotVector, link: str, grid_size: int = 200
) -> FittedCurve:
    """Posterior-mean curve through the link, with pointwise 95% bands.

    Bands are the 2.5%/97.5% quantiles of the per-draw linked curves.
    """
    if link not in LINKS:
        raise InvalidParameterError(f"unknown link {link!r}; use one of {sorted(LINKS)}")
    grid = np.linspace(kv.lower, kv.upper, grid_size)
    Bg = design_matrix(grid, kv)
    thetas = chain.theta_draws()
    curves = LINKS[link](thetas @ Bg.T)  # draws x grid
    estimate = LINKS[link](Bg @ thetas.mean(axis=0))
    lo, hi = np.percentile(curves, [2.5, 97.5], axis=0)
    return FittedCurve(grid, estimate, lo, hi, link)


def density_estimate(curve: FittedCurve, support: tuple[float, float]) -> FittedCurve:
    """Normalize a log-link curve into a density over the support.

    The normalizing constant is the midpoint-Riemann integral of the estimate
    over the support on a fixed fine grid; the same constant rescales the
    bands, so the output is invariant to positive rescaling of the input.
    """
    if curve.link != "log":
        raise InvalidParameterError("density normalization expects a log-link curve")
    lo, hi = support
    if not lo < hi:
        raise InvalidParameterError(f"empty support [{lo}, {hi}]")
    h = (hi - lo) / QUAD_POINTS
    mids = lo + h * (np.arange(QUAD_POINTS) + 0.5)
    integral = h * float(np.sum(np.interp(mids, curve.grid, curve.estimate)))
    assert integral > 0.0, "log-link curve must have positive integral"
    return FittedCurve(
        curve.grid,
        curve.estimate / integral,
        curve.lo95 / integral,
        curve.hi95 / integral,
        curve.link,
    )


def geweke_z(column: np.ndarray, frac_a: float = 0.1, frac_b: float = 0.5) -> float:
    """Geweke z-score of one chain column.

    Compares the mean of the first ``frac_a`` window against the last
    ``frac_b`` window, with long-run variances from batch means
    (sqrt(n) batches per window). A constant column scores 0 by convention.
    """
    column = np.asarray(column, dtype=float)
    n = len(column)
    na = int(frac_a * n)
    nb = int(frac_b * n)
    if na < 2 or nb < 2:
        raise InvalidParameterError("windows too small for a Geweke check")
    a, b = column[:na], column[n - nb :]
    mean_a, var_a, na_used = _batch_means_lrv(a)
    mean_b, var_b, nb_used = _batch_means_lrv(b)
    denom = var_a / na_used + var_b / nb_used
    if denom == 0.0:
        return 0.0
    return float((mean_a - mean_b) / np.sqrt(denom))


def _batch_means_lrv(window: np.ndarray) -> tuple[float, float, int]:
    """Window mean and batch-means estimate of the long-run variance."""
    n = len(window)
    n_batches = int(np.sqrt(n))
    if n_batches < 10:
        raise InvalidParameterError(
            f"window of {n} draws gives {n_batches} batches; need at least 10"
        )
    size = n // n_batches
    used = window[: n_batches * size]
    bm = used.reshape(n_batches, size).mean(axis=1)
    lrv = size * float(np.var(bm, ddof=1))
    return float(used.mean()), lrv, n_batches * size


def geweke(chain: Chain, frac_a: float = 0.1, frac_b: float = 0.5) -> dict[str, float]:
    """Geweke z-score per parameter over the post-burn-in draws."""
    rows = chain.post_burnin()
    return {
        name: geweke_z(rows[:, j], frac_a, frac_b) for j, name in enumerate(chain.names)
    }
