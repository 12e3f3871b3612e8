"""Cubic B-spline bases on a compact support.

Knots are open-uniform: equidistant interior knots with the boundary knot
repeated ``degree + 1`` times, so the basis is clamped to exactly
``[lower, upper]`` and has the requested dimension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline

from .errors import InvalidDimensionError, InvalidDomainError, OutOfSupportError

DEGREE = 3  # cubic; not a user-facing knob


@dataclass(frozen=True)
class KnotVector:
    """Clamped knot sequence for a cubic basis of dimension ``size``."""

    lower: float
    upper: float
    degree: int
    interior_count: int
    knots: np.ndarray

    @property
    def size(self) -> int:
        """Basis dimension K."""
        return len(self.knots) - self.degree - 1

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x)
        return (x >= self.lower) & (x <= self.upper)


def make_knots(lower: float, upper: float, K: int) -> KnotVector:
    """Build the open-uniform cubic knot vector of basis dimension ``K`` on [lower, upper]."""
    if K < DEGREE + 1:
        raise InvalidDimensionError(f"cubic basis needs K >= {DEGREE + 1}, got K={K}")
    if not lower < upper:
        raise InvalidDomainError(f"need lower < upper, got [{lower}, {upper}]")
    interior_count = K - DEGREE - 1
    interior = np.linspace(lower, upper, interior_count + 2)[1:-1]
    knots = np.concatenate(
        [np.full(DEGREE + 1, float(lower)), interior, np.full(DEGREE + 1, float(upper))]
    )
    return KnotVector(float(lower), float(upper), DEGREE, interior_count, knots)


def design_matrix(xs, kv: KnotVector) -> np.ndarray:
    """Evaluate the basis at each point of ``xs``; returns the dense n x K matrix."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    inside = kv.contains(xs)
    if not np.all(inside):
        bad = xs[~inside][0]
        raise OutOfSupportError(
            f"point {bad} outside basis support [{kv.lower}, {kv.upper}]"
        )
    return BSpline.design_matrix(xs, kv.knots, kv.degree).toarray()


def eval_basis(x: float, kv: KnotVector) -> np.ndarray:
    """Evaluate all K basis functions at a single point."""
    return design_matrix([x], kv)[0]
