"""Gaussian reference densities."""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

import numpy as np

DEFAULT_INFLATION = 4.0
_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianPrior:
    mean: float
    std_dev: float

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.std_dev)):
            raise ValueError("prior parameters must be finite")
        if not self.std_dev > 0:
            raise ValueError(f"std_dev must be positive, got {self.std_dev}")

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mean) / self.std_dev
        return np.exp(-0.5 * z * z) / (self.std_dev * _SQRT_2PI)

    __call__ = pdf

    def log_pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mean) / self.std_dev
        return -0.5 * z * z - math.log(self.std_dev * _SQRT_2PI)

    def moments(self, order):
        """Population raw moments ``E[X^k]``, ``k = 0..order``."""
        m, s = self.mean, self.std_dev
        # central moments of N(0, s^2): (j-1)!! s^j for even j
        central = [1.0]
        for j in range(1, order + 1):
            central.append(0.0 if j % 2 else central[j - 2] * (j - 1) * s * s)
        out = []
        for k in range(order + 1):
            out.append(math.fsum(comb(k, j) * m ** (k - j) * central[j] for j in range(k + 1)))
        out[0] = 1.0
        return out

    def standardized(self, shift, scale):
        return GaussianPrior((self.mean - shift) / scale, self.std_dev / scale)


def eval_prior(prior, x):
    return prior.pdf(x)


def default_prior(moments, inflation=DEFAULT_INFLATION):
    """Data-driven prior: mean ``mu_1``, variance ``inflation * mu_2``.

    ``mu_2`` is the raw second moment, so the variance strictly exceeds it
    for any ``inflation > 1``; it also never drops below the sample
    variance.
    """
    if not inflation > 1:
        raise ValueError(f"inflation must exceed 1, got {inflation}")
    mu1, mu2 = moments.values[1], moments.values[2]
    if not mu2 > 0:
        raise ValueError(f"second moment must be positive, got {mu2}")
    return GaussianPrior(mu1, math.sqrt(inflation * max(mu2, mu2 - mu1 * mu1)))
