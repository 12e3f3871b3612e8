"""Seedable random variate generation.

One :class:`RandomSource` is owned by exactly one chain and threaded
explicitly through every sampling call; there is no global generator.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameterError


class RandomSource:
    """Deterministic random number stream backed by a PCG64 generator.

    Identical seeds produce bit-identical draw sequences on a given
    platform, which makes whole chains reproducible.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def __repr__(self):
        return f"RandomSource(seed={self.seed})"

    def uniform(self) -> float:
        """Draw from the open interval (0, 1)."""
        u = self._gen.random()
        while u == 0.0:  # random() covers [0, 1); exclude the left edge
            u = self._gen.random()
        return u

    def normal(self) -> float:
        """Draw a standard normal variate."""
        return float(self._gen.standard_normal())

    def gamma(self, shape: float, rate: float) -> float:
        """Draw from a Gamma density proportional to x^(shape-1) exp(-rate x)."""
        if shape <= 0.0:
            raise InvalidParameterError(f"gamma shape must be positive, got {shape}")
        if rate <= 0.0:
            raise InvalidParameterError(f"gamma rate must be positive, got {rate}")
        return float(self._gen.standard_gamma(shape)) / rate
