"""Adaptive rejection sampling from univariate log-concave densities.

The sampler maintains two piecewise-linear bounds on the log target: an
upper hull made of tangents at the abscissae (intersecting at breakpoints)
and a lower hull made of chords between them. Candidates come from the
normalized exponentiated upper hull by exact inverse-CDF sampling; cheap
squeeze acceptance uses the lower hull, and every rejection inserts the
candidate into the hull, tightening both bounds.

All segment masses are kept in log space: in the tails they span hundreds
of orders of magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EnvelopeError,
    InitializationFailureError,
    InvalidParameterError,
    NumericFailureError,
    SamplerStallError,
)
from .modefind import ModeResult
from .targets import ConditionalTarget

SLOPE_TIE = 1e-12  # below this the tangent intersection is ill-conditioned
ABSCISSA_TIE = 1e-12
MAX_DOUBLINGS = 30
MAX_REJECTIONS = 1000
MAX_HULL_SIZE = 100


@dataclass(frozen=True)
class HullState:
    """Tangent/chord hulls for one target, plus segment masses.

    Segment ``l`` is owned by abscissa ``l`` and spans ``[z[l-1], z[l]]``
    (with the support edges standing in at the ends).
    """

    x: np.ndarray  # abscissae, strictly increasing
    phi: np.ndarray
    dphi: np.ndarray
    z: np.ndarray  # len(x) - 1 breakpoints
    seg_log_mass: np.ndarray
    total_log_mass: float
    cum_prob: np.ndarray
    support: tuple[float, float]


def _breakpoints(x, phi, dphi):
    num = phi[1:] - phi[:-1] + x[:-1] * dphi[:-1] - x[1:] * dphi[1:]
    den = dphi[:-1] - dphi[1:]
    tie = np.abs(den) < SLOPE_TIE
    z = np.where(tie, 0.5 * (x[:-1] + x[1:]), num / np.where(tie, 1.0, den))
    # concavity puts each intersection between its abscissae; clip FP strays
    return np.clip(z, x[:-1], x[1:])


def _exp_line_log_mass(a, b, x0, lo, hi):
    """log integral of exp(a + b (t - x0)) over [lo, hi]."""
    if hi <= lo:
        return -math.inf
    if lo == -math.inf:
        if b <= 0.0:
            return math.inf  # divergent tail; caller treats as envelope failure
        return a + b * (hi - x0) - math.log(b)
    if hi == math.inf:
        if b >= 0.0:
            return math.inf
        return a + b * (lo - x0) - math.log(-b)
    d = hi - lo
    if abs(b) < SLOPE_TIE:
        return a + b * (lo - x0) + math.log(d)
    if b > 0.0:
        return a + b * (hi - x0) + math.log1p(-math.exp(-b * d)) - math.log(b)
    return a + b * (lo - x0) + math.log1p(-math.exp(b * d)) - math.log(-b)


def _build_hull(x, phi, dphi, support) -> HullState:
    z = _breakpoints(x, phi, dphi)
    s_lo, s_hi = support
    seg = np.empty(len(x))
    left = s_lo
    for l in range(len(x)):
        right = z[l] if l < len(z) else s_hi
        seg[l] = _exp_line_log_mass(phi[l], dphi[l], x[l], left, right)
        left = right
    top = seg.max()
    if top == math.inf:
        raise EnvelopeError("upper hull has infinite mass", abscissa=float(x[0]))
    total = top + math.log(np.exp(seg - top).sum())
    if not math.isfinite(total):
        raise EnvelopeError("upper hull mass is not finite", abscissa=float(x[0]))
    cum = np.cumsum(np.exp(seg - total))
    cum[-1] = 1.0
    return HullState(x, phi, dphi, z, seg, total, cum, support)


def init_hull(target: ConditionalTarget, mode: ModeResult, c: float = 2.0, L: int = 5) -> HullState:
    """Seed the hull with L equidistant abscissae spanning mode +/- c sigma.

    An unbounded side needs an abscissa whose tangent slopes toward it
    (positive on the left, negative on the right) for the envelope to have
    finite mass; sides failing that are pushed outward by doubling c.
    """
    if c <= 0:
        raise InvalidParameterError(f"c must be positive, got {c}")
    if L < 2:
        raise InvalidParameterError(f"need at least 2 abscissae, got L={L}")
    s_lo, s_hi = target.support
    fractions = np.linspace(0.0, 1.0, L)
    c_eff = float(c)
    for _ in range(MAX_DOUBLINGS + 1):
        lo = mode.mode - c_eff * mode.sigma
        hi = mode.mode + c_eff * mode.sigma
        if lo <= s_lo:  # clip strictly inside a finite support edge
            lo = s_lo + 1e-3 * (mode.mode - s_lo)
        if hi >= s_hi:
            hi = s_hi - 1e-3 * (s_hi - mode.mode)
        x = lo + (hi - lo) * fractions
        if target.value_grad is not None:
            phi, dphi = target.value_grad(x)
        else:
            phi = target.logpdf(x)
            dphi = target.dlogpdf(x)
        phi = np.asarray(phi, dtype=float)
        dphi = np.asarray(dphi, dtype=float)
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(dphi))):
            bad = x[~np.isfinite(phi) | ~np.isfinite(dphi)][0]
            raise NumericFailureError(f"non-finite hull evaluation at {bad}", abscissa=float(bad))
        ok_left = (s_lo > -math.inf) or dphi[0] > 0.0
        ok_right = (s_hi < math.inf) or dphi[-1] < 0.0
        if ok_left and ok_right:
            return _build_hull(x, phi, dphi, (s_lo, s_hi))
        c_eff *= 2.0
    raise InitializationFailureError(
        "no abscissae on both sides of the mode after doubling the span "
        f"{MAX_DOUBLINGS} times; target may not be log-concave"
    )


def lower_hull(hs: HullState, t):
    """Chord interpolation of (abscissa, phi); -inf outside the abscissa range."""
    t = np.asarray(t, dtype=float)
    inside = (t >= hs.x[0]) & (t <= hs.x[-1])
    vals = np.interp(t, hs.x, hs.phi)
    out = np.where(inside, vals, -np.inf)
    return float(out) if out.ndim == 0 else out


def upper_hull(hs: HullState, t):
    """Tangent-line value of the segment owning t; defined on all of R."""
    t = np.asarray(t, dtype=float)
    j = np.searchsorted(hs.z, t, side="right")
    out = hs.phi[j] + (t - hs.x[j]) * hs.dphi[j]
    return float(out) if out.ndim == 0 else out


def sample_hull(hs: HullState, rng) -> float:
    """Exact inverse-CDF draw from the normalized exponentiated upper hull."""
    j = int(np.searchsorted(hs.cum_prob, rng.uniform()))
    j = min(j, len(hs.x) - 1)
    left = hs.z[j - 1] if j > 0 else hs.support[0]
    right = hs.z[j] if j < len(hs.z) else hs.support[1]
    b = hs.dphi[j]
    u = rng.uniform()
    if left == -math.inf:
        t = right + math.log(u) / b  # b > 0 guaranteed by construction
    elif right == math.inf:
        t = left + math.log1p(-u) / b  # b < 0
    elif abs(b) < SLOPE_TIE:
        t = left + u * (right - left)
    elif b > 0.0:
        t = right + math.log(u + (1.0 - u) * math.exp(-b * (right - left))) / b
    else:
        t = left + math.log(1.0 - u + u * math.exp(b * (right - left))) / b
    return float(min(max(t, left), right))


def insert_point(hs: HullState, t: float, phi_t: float, dphi_t: float) -> HullState:
    """Return a hull with (t, phi, phi') added; no-op on ties or a full hull."""
    if len(hs.x) >= MAX_HULL_SIZE:
        return hs
    scale = max(1.0, abs(t))
    if np.min(np.abs(hs.x - t)) < ABSCISSA_TIE * scale:
        return hs
    j = int(np.searchsorted(hs.x, t))
    x = np.insert(hs.x, j, t)
    phi = np.insert(hs.phi, j, phi_t)
    dphi = np.insert(hs.dphi, j, dphi_t)
    return _build_hull(x, phi, dphi, hs.support)


def ars_sample(
    target: ConditionalTarget,
    mode: ModeResult,
    rng,
    c: float = 2.0,
    L: int = 5,
) -> tuple[float, int]:
    """Draw one exact sample from the normalized target.

    Returns (value, number of log-density evaluations). Squeeze-accepted
    candidates never evaluate the target and are never inserted into the
    hull (no value to insert).
    """
    if not target.declared_logconcave:
        raise InvalidParameterError("ars_sample requires a log-concave target")
    hull = init_hull(target, mode, c=c, L=L)
    evals = 0
    for _ in range(MAX_REJECTIONS):
        t = sample_hull(hull, rng)
        u = rng.uniform()
        up = upper_hull(hull, t)
        if u <= math.exp(min(lower_hull(hull, t) - up, 0.0)):
            return t, evals
        if target.fused is not None:
            phi_t, dphi_t, _ = target.fused(t)
        else:
            phi_t, dphi_t = float(target.logpdf(t)), float(target.dlogpdf(t))
        evals += 1
        if u <= math.exp(min(phi_t - up, 0.0)):
            return t, evals
        if math.isfinite(phi_t) and math.isfinite(dphi_t):
            hull = insert_point(hull, t, phi_t, dphi_t)
    raise SamplerStallError(
        f"{MAX_REJECTIONS} rejections without acceptance", abscissa=mode.mode
    )
