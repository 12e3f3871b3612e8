"""Mode location for univariate conditional targets.

For strictly log-concave targets the mode is bracketed analytically from the
gradient at zero and then found by safeguarded Newton iteration. For targets
without a concavity guarantee (the log-overdispersion conditional) a coarse
grid scan plus golden-section refinement is used instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceFailureError,
    InvalidParameterError,
    NumericFailureError,
)
from .targets import ConditionalTarget

GRAD_TOL = 1e-8
MAX_ITER = 100
GOLDEN = 0.5 * (np.sqrt(5.0) - 1.0)


@dataclass(frozen=True)
class ModeResult:
    mode: float
    sigma: float  # local curvature scale (-phi'')^(-1/2) at the mode
    iterations: int
    bracket: tuple[float, float]


def _grad(target: ConditionalTarget, t: float) -> float:
    g = float(target.dlogpdf(t))
    if not np.isfinite(g):
        raise NumericFailureError(f"non-finite gradient at {t}", abscissa=t)
    return g


def _grad_hess(target: ConditionalTarget, t: float) -> tuple[float, float]:
    if target.fused is not None:
        _, g, h = target.fused(t)
    else:
        g, h = target.dlogpdf(t), target.d2logpdf(t)
    g, h = float(g), float(h)
    if not np.isfinite(g):
        raise NumericFailureError(f"non-finite gradient at {t}", abscissa=t)
    return g, h


def bracket_mode(
    target: ConditionalTarget, lambda_z: float, kappa: float, grad0: float | None = None
) -> tuple[float, float]:
    """Interval guaranteed to contain the mode of a strictly concave log target.

    With g0 the gradient at zero: [g0 / lambda_z - kappa, 0] when g0 < 0,
    [0, g0 / lambda_z + kappa] when g0 > 0, and the degenerate [0, 0] when
    g0 == 0. If floating point leaves the gradient sign unchanged across the
    bracket, it is widened once by kappa before giving up. ``grad0`` may
    carry an already-computed gradient at zero.
    """
    if not target.declared_logconcave:
        raise InvalidParameterError("bracket_mode requires a log-concave target")
    if lambda_z <= 0 or kappa <= 0:
        raise InvalidParameterError("lambda_z and kappa must be positive")
    g0 = _grad(target, 0.0) if grad0 is None else float(grad0)
    if g0 == 0.0:
        return (0.0, 0.0)
    for widen in (0.0, kappa):
        if g0 < 0.0:
            lo, hi = g0 / lambda_z - kappa - widen, 0.0
        else:
            lo, hi = 0.0, g0 / lambda_z + kappa + widen
        ends = np.asarray(target.dlogpdf(np.array([lo, hi])), dtype=float)
        if ends[0] >= 0.0 >= ends[1]:
            return (lo, hi)
    raise NumericFailureError(
        f"gradient does not change sign over [{lo}, {hi}]", abscissa=lo
    )


def find_mode(
    target: ConditionalTarget,
    bracket: tuple[float, float],
    x0: float | None = None,
    grad0: float | None = None,
) -> ModeResult:
    """Locate the unique maximum of a strictly concave log target.

    Newton steps are accepted only when they stay inside the current bracket
    and shrink |gradient|; otherwise the step falls back to bisection, which
    converges unconditionally under strict concavity. ``grad0`` may carry an
    already-computed gradient at zero (it only sets the tolerance scale).
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if lo > hi:
        raise InvalidParameterError(f"reversed bracket [{lo}, {hi}]")
    if grad0 is None:
        grad0 = _grad(target, 0.0)
    tol = GRAD_TOL * (1.0 + abs(grad0))

    if lo == hi:
        return ModeResult(lo, _sigma_at(target, lo), 0, (lo, hi))

    x = float(np.clip(x0, lo, hi)) if x0 is not None else 0.5 * (lo + hi)
    g, h = _grad_hess(target, x)
    for it in range(1, MAX_ITER + 1):
        if abs(g) < tol:
            return ModeResult(x, _curvature_scale(h, target, x), it - 1, (lo, hi))
        if g > 0.0:
            lo = x
        else:
            hi = x
        cand = x - g / h if np.isfinite(h) and h < 0.0 else None
        if cand is not None and lo < cand < hi:
            g_cand, h_cand = _grad_hess(target, cand)
            if abs(g_cand) < abs(g):
                x, g, h = cand, g_cand, h_cand
                continue
        x = 0.5 * (lo + hi)
        g, h = _grad_hess(target, x)
    raise ConvergenceFailureError(
        f"mode search did not converge in {MAX_ITER} iterations", abscissa=x
    )


def _curvature_scale(h: float, target: ConditionalTarget, mode: float) -> float:
    if not (np.isfinite(h) and h < 0.0):
        raise NumericFailureError(
            f"second derivative {h} at mode {mode} is not negative", abscissa=mode
        )
    return (-h) ** -0.5


def _sigma_at(target: ConditionalTarget, mode: float) -> float:
    return _curvature_scale(float(target.d2logpdf(mode)), target, mode)


def grid_scan_mode(
    target: ConditionalTarget,
    lo: float = -10.0,
    hi: float = 10.0,
    points: int = 101,
    tol: float = 1e-6,
) -> ModeResult:
    """Global coarse scan then golden-section refinement; no concavity assumed.

    Used for the log-overdispersion target, where the mode may not be unique;
    the scan returns the best local maximum found on [lo, hi]. The curvature
    scale comes from a central finite difference at the refined mode.
    """
    grid = np.linspace(lo, hi, points)
    vals = np.asarray(target.logpdf(grid), dtype=float)
    if not np.all(np.isfinite(vals)):
        bad = grid[~np.isfinite(vals)][0]
        raise NumericFailureError(f"non-finite log density at {bad}", abscissa=float(bad))
    i = int(np.argmax(vals))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, points - 1)]

    # golden-section search for the maximum on [a, b]
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc = float(target.logpdf(c))
    fd = float(target.logpdf(d))
    iters = 0
    while abs(b - a) > tol * max(1.0, abs(a) + abs(b)) and iters < 200:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = float(target.logpdf(c))
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = float(target.logpdf(d))
        iters += 1
    mode = 0.5 * (a + b)

    h = 1e-4 * max(1.0, abs(mode))
    second = (
        float(target.logpdf(mode + h)) - 2.0 * float(target.logpdf(mode)) + float(target.logpdf(mode - h))
    ) / (h * h)
    sigma = (-second) ** -0.5 if second < 0.0 else 1.0
    return ModeResult(float(mode), float(sigma), iters, (float(a), float(b)))
