"""Difference penalties and conditional-prior moments of spline coefficients.

The coefficient vector carries a Gaussian smoothness prior with precision
``lambda * P`` where ``P = D' D + eps * I`` and ``D`` is an order-r difference
matrix. The univariate conditional prior of each coefficient is Gaussian with
closed-form moments; those moments are evaluated through the matrices ``E``
(inverse diagonal of P) and ``C`` (off-diagonal part of -D'D rescaled by E),
which is cheaper and less error-prone than branching on boundary indicator
expressions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidDimensionError, InvalidParameterError

SUPPORTED_ORDERS = (2, 3)
DEFAULT_EPS = 1e-6


@dataclass(frozen=True)
class PenaltyModel:
    """Penalty matrices for one (K, r, eps) configuration.

    Immutable after construction; safe to share read-only across chains.
    """

    r: int
    eps: float
    D: np.ndarray  # (K - r) x K difference matrix
    P: np.ndarray  # K x K symmetric positive definite
    E: np.ndarray  # K x K diagonal, E[k, k] = 1 / P[k, k]
    C: np.ndarray  # K x K, column k maps theta to the k-th conditional prior mean
    z: np.ndarray = field(repr=False)  # diagonal of P, cached for the samplers

    @property
    def K(self) -> int:
        return self.P.shape[0]

    @classmethod
    def from_difference(cls, D: np.ndarray, eps: float, r: int = 0) -> "PenaltyModel":
        """Assemble P, E, C from an arbitrary difference matrix.

        ``D`` may have zero rows (ridge-only penalty), in which case
        ``P = eps * I``.
        """
        if eps <= 0.0:
            raise InvalidParameterError(f"eps must be positive, got {eps}")
        D = np.asarray(D, dtype=float)
        K = D.shape[1]
        DtD = D.T @ D
        P = DtD + eps * np.eye(K)
        z = np.diag(P).copy()
        E = np.diag(1.0 / z)
        A = -DtD
        C = (A - np.diag(np.diag(A))) @ E
        return cls(r=r, eps=float(eps), D=D, P=P, E=E, C=C, z=z)

    def quad_form(self, theta: np.ndarray) -> float:
        """theta' P theta, evaluated as ||D theta||^2 + eps ||theta||^2."""
        Dt = self.D @ theta
        return float(Dt @ Dt + self.eps * (theta @ theta))


def diff_matrix(K: int, r: int) -> np.ndarray:
    """Order-r difference matrix of shape (K - r) x K."""
    if r not in SUPPORTED_ORDERS:
        raise InvalidParameterError(f"penalty order must be in {SUPPORTED_ORDERS}, got r={r}")
    if K <= r:
        raise InvalidDimensionError(f"need K > r, got K={K}, r={r}")
    return np.diff(np.eye(K), r, axis=0)


def penalty_matrix(K: int, r: int, eps: float = DEFAULT_EPS) -> PenaltyModel:
    """Build the PenaltyModel for ``K`` coefficients and penalty order ``r``.

    Requires ``K >= 2r + 1`` so the diagonal of P has its full band structure
    (boundary, transition, and interior entries). Smaller bases are rejected
    rather than given an ad-hoc penalty.
    """
    if r not in SUPPORTED_ORDERS:
        raise InvalidParameterError(f"penalty order must be in {SUPPORTED_ORDERS}, got r={r}")
    if K < 2 * r + 1:
        raise InvalidDimensionError(f"need K >= 2r + 1 = {2 * r + 1}, got K={K}")
    return PenaltyModel.from_difference(diff_matrix(K, r), eps, r=r)


def conditional_prior_moments(
    theta: np.ndarray, k: int, lam: float, pm: PenaltyModel
) -> tuple[float, float]:
    """Mean and variance of the conditional prior of coefficient ``k`` (0-based).

    mean = psi_r(theta_-k) / z_r(k, eps), evaluated as the k-th row of C'
    applied to theta; variance = 1 / (lam * z_r(k, eps)).
    """
    if lam <= 0.0:
        raise InvalidParameterError(f"lam must be positive, got {lam}")
    K = pm.K
    if not 0 <= k < K:
        raise InvalidDimensionError(f"coefficient index {k} out of range for K={K}")
    mean = float(pm.C[:, k] @ theta)
    variance = pm.E[k, k] / lam
    return mean, variance
