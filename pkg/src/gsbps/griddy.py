"""Griddy-Gibbs sampling: discrete grid approximation of a conditional posterior.

A grid grows outward from the mode in curvature-scaled steps until the log
density has dropped below the threshold ``c_f`` on both sides, is filled with
equidistant evaluation points, and one grid atom is drawn with probability
proportional to the exponentiated log density. Atoms are returned as-is; the
discretization bias is of order (hi - lo) / L.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, NumericFailureError, UnboundedTargetError
from .targets import ConditionalTarget

DEFAULT_CF = float(np.log(0.01))
DEFAULT_GRID_SIZE = 100
MAX_GROW_STEPS = 60


@dataclass(frozen=True)
class Grid:
    points: np.ndarray
    log_weights: np.ndarray  # log density shifted so the maximum is 0
    probs: np.ndarray


def grow_grid(
    target: ConditionalTarget, mode: float, sigma: float, c_f: float = DEFAULT_CF
) -> tuple[float, float]:
    """March outward from the mode until the log density drops below c_f.

    Steps have size 2^k sigma, accumulated, so the reach doubles each probe.
    Returns the first points past the threshold on each side.
    """
    if sigma <= 0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma}")
    if c_f >= 0:
        raise InvalidParameterError(f"c_f must be negative, got {c_f}")
    phi0 = float(target.logpdf(mode))
    if not np.isfinite(phi0):
        raise NumericFailureError(f"non-finite log density at mode {mode}", abscissa=mode)
    s_lo, s_hi = target.support

    def march(direction, edge):
        offset = 0.0
        for k in range(MAX_GROW_STEPS):
            offset += 2.0**k * sigma
            point = mode + direction * offset
            hit_edge = (point - edge) * direction >= 0.0
            if hit_edge:
                point = edge  # a declared support edge bounds the grid
            if hit_edge or float(target.logpdf(point)) - phi0 < c_f:
                return point
        raise UnboundedTargetError(
            f"log density never dropped {-c_f:.3g} below the mode after "
            f"{MAX_GROW_STEPS} growing steps",
            abscissa=mode + direction * offset,
        )

    return march(-1.0, s_lo), march(+1.0, s_hi)


def build_grid(target: ConditionalTarget, lo: float, hi: float, L: int = DEFAULT_GRID_SIZE) -> Grid:
    """L equidistant points on [lo, hi] with normalized atom probabilities."""
    if not lo < hi:
        raise InvalidParameterError(f"need lo < hi, got [{lo}, {hi}]")
    if L < 2:
        raise InvalidParameterError(f"need at least 2 grid points, got L={L}")
    points = np.linspace(lo, hi, L)
    lw = np.asarray(target.logpdf(points), dtype=float)
    if not np.all(np.isfinite(lw)):
        bad = points[~np.isfinite(lw)][0]
        raise NumericFailureError(f"non-finite log density at {bad}", abscissa=float(bad))
    lw = lw - np.max(lw)
    w = np.exp(lw)
    probs = w / w.sum()
    return Grid(points, lw, probs)


def griddy_sample(grid: Grid, rng) -> float:
    """Draw one grid atom by inverting the discrete CDF with a single uniform."""
    cum = np.cumsum(grid.probs)
    cum[-1] = 1.0
    j = int(np.searchsorted(cum, rng.uniform()))
    return float(grid.points[min(j, len(grid.points) - 1)])
