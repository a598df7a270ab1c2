"""Sample power moments, Hankel matrices and the solvability check."""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import HankelNotPD, InvalidSamples, OddOrder


def _check_order(order):
    if int(order) != order or order < 2 or order % 2:
        raise OddOrder(f"moment order must be an even integer >= 2, got {order}")
    return int(order)


@dataclass(frozen=True)
class MomentSequence:
    """Power moments ``mu_0 .. mu_order`` (``mu_0 == 1``).

    ``sample_count`` is ``None`` for population moments that did not come
    from a finite sample.
    """

    order: int
    values: tuple
    sample_count: int | None = None

    def __post_init__(self):
        _check_order(self.order)
        values = tuple(float(v) for v in self.values)
        if len(values) != self.order + 1:
            raise ValueError(f"expected {self.order + 1} moments, got {len(values)}")
        if values[0] != 1.0:
            raise ValueError(f"mu_0 must be exactly 1, got {values[0]!r}")
        if not all(math.isfinite(v) for v in values):
            raise ValueError("moments must be finite")
        object.__setattr__(self, "values", values)

    @property
    def n(self):
        return self.order // 2

    def as_array(self):
        return np.array(self.values)

    @property
    def mean(self):
        return self.values[1]

    @property
    def variance(self):
        return self.values[2] - self.values[1] ** 2

    def affine(self, a, b):
        """Moments of ``a*X + b`` by the binomial expansion."""
        mu = self.values
        out = [1.0]
        for k in range(1, self.order + 1):
            terms = [comb(k, j) * a ** j * b ** (k - j) * mu[j] for j in range(k + 1)]
            out.append(math.fsum(terms))
        return MomentSequence(self.order, out, self.sample_count)

    def standardized(self):
        """Return ``(moments of (X - shift)/scale, shift, scale)``."""
        var = self.variance
        if not var > 0:
            raise HankelNotPD("moment sequence has zero variance (degenerate samples)")
        shift, scale = self.mean, math.sqrt(var)
        return self.affine(1.0 / scale, -shift / scale), shift, scale


def compute_sample_moments(samples, order):
    """Power moments ``(1/m) sum_j X_j^k`` for ``k = 0..order``.

    Each sum is accumulated with :func:`math.fsum`, so high orders do not
    lose digits to cancellation or magnitude spread.
    """
    order = _check_order(order)
    x = np.asarray(samples, dtype=float).ravel()
    m = x.size
    if m < 2:
        raise InvalidSamples(f"need at least 2 samples, got {m}")
    if not np.all(np.isfinite(x)):
        raise InvalidSamples("samples contain non-finite values")
    values = [1.0]
    power = np.ones_like(x)
    for _ in range(order):
        power = power * x
        values.append(math.fsum(power.tolist()) / m)
    return MomentSequence(order, values, m)


@dataclass(frozen=True)
class HankelMatrix:
    entries: np.ndarray

    @property
    def size(self):
        return self.entries.shape[0]


def build_hankel(moments):
    """``(n+1) x (n+1)`` matrix with entry ``(i, j) = mu_{i+j}``."""
    mu = moments.as_array()
    n = moments.n
    idx = np.add.outer(np.arange(n + 1), np.arange(n + 1))
    entries = mu[idx]
    entries.setflags(write=False)
    return HankelMatrix(entries)


@dataclass(frozen=True)
class PDCertificate:
    is_pd: bool
    min_eigenvalue: float
    tol: float


def certify_positive_definite(h, tol=None):
    """Check the Hankel matrix for positive definiteness.

    ``tol`` defaults to ``1e-12`` times the largest diagonal entry.
    Returns a :class:`PDCertificate`; see :func:`require_positive_definite`
    for the raising variant.
    """
    entries = h.entries
    if tol is None:
        tol = 1e-12 * float(np.max(np.diag(entries)))
    if not tol > 0:
        raise ValueError("tol must be positive")
    lam = float(np.linalg.eigvalsh(entries)[0])
    return PDCertificate(lam > tol, lam, tol)


def require_positive_definite(moments, tol=None):
    """Raise :class:`HankelNotPD` unless the moment problem is solvable.

    Positive definiteness is invariant under affine maps of the samples, so
    the check runs on the standardized moments; the raw Hankel matrix of
    wide data is too ill-conditioned for an eigenvalue threshold.
    """
    if not moments.variance > 0:
        raise HankelNotPD(
            "moment sequence has zero variance; the samples are degenerate "
            "(all equal or nearly so)", 0.0,
        )
    cert = certify_positive_definite(build_hankel(moments.standardized()[0]), tol)
    if not cert.is_pd:
        raise HankelNotPD(
            "Hankel matrix of the moments is not positive definite "
            f"(min eigenvalue {cert.min_eigenvalue:.3e}); the samples are "
            "degenerate (all equal or nearly so)",
            cert.min_eigenvalue,
        )
    return cert
