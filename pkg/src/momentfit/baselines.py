"""Comparison estimators: Gaussian KDE, Gaussian mixture (EM) and the
Kullback-Leibler moment parametrization (DPMKL).

DPMKL is a reconstruction of the standard KL-moment dual: the estimate is
``r / omega`` with ``omega = sum_k b_k x**k`` (no offset), and ``b``
minimizes ``sum_k b_k mu_k - int r log(omega)``, whose stationarity gives
``int x**k r / omega = mu_k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp

from . import _newton
from .errors import CollapsedComponent, InfeasiblePoint, InvalidSamples, NotConverged
from .hellinger import OmegaCoefficients, SolveOptions, relative_residuals, verify_moments
from .moments import require_positive_definite
from .priors import GaussianPrior
from .quadrature import check_grid, grid_for_prior
from .sampling import make_rng

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _samples(samples, minimum=2):
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < minimum:
        raise InvalidSamples(f"need at least {minimum} samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise InvalidSamples("samples must be finite")
    return x


# ---------------------------------------------------------------- KDE

@dataclass(frozen=True, eq=False)
class KdeModel:
    centers: np.ndarray
    bandwidth: float

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if np.size(self.centers) == 0:
            raise ValueError("a KDE needs at least one center")

    def pdf(self, x, chunk=4096):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        out = np.empty(flat.shape)
        h = self.bandwidth
        for s in range(0, flat.size, chunk):
            z = (flat[s:s + chunk, None] - self.centers[None, :]) / h
            out[s:s + chunk] = np.exp(-0.5 * z * z).mean(axis=1)
        return (out / (h * math.sqrt(2 * math.pi))).reshape(x.shape)

    __call__ = pdf

    def log_pdf(self, x, chunk=4096):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        out = np.empty(flat.shape)
        for s in range(0, flat.size, chunk):
            z = (flat[s:s + chunk, None] - self.centers[None, :]) / self.bandwidth
            out[s:s + chunk] = logsumexp(-0.5 * z * z, axis=1)
        const = math.log(self.centers.size * self.bandwidth) + _LOG_SQRT_2PI
        return (out - const).reshape(x.shape)

    def to_dict(self):
        return {"kind": "kde", "bandwidth": self.bandwidth, "centers": self.centers.tolist()}


def silverman_bandwidth(samples):
    """``0.9 min(sd, IQR / 1.34) m**(-1/5)``; falls back to ``sd`` when the IQR is 0."""
    x = _samples(samples)
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
    if not spread > 0:
        raise InvalidSamples("samples have zero spread; bandwidth is undefined")
    return 0.9 * spread * x.size ** -0.2


def kde_fit(samples, bandwidth=None):
    x = _samples(samples, 1 if bandwidth is not None else 2)
    h = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    return KdeModel(x.copy(), h)


# ---------------------------------------------------------------- GMM

@dataclass(frozen=True, eq=False)
class GmmModel:
    weights: np.ndarray
    means: np.ndarray
    std_devs: np.ndarray
    log_likelihood: float = float("nan")
    trace: list = field(default_factory=list)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if abs(w.sum() - 1.0) > 1e-12 or np.any(w <= 0):
            raise ValueError("weights must be positive and sum to 1")
        if np.any(np.asarray(self.std_devs) <= 0):
            raise ValueError("std_devs must be positive")

    def _log_components(self, x):
        z = (x[:, None] - self.means[None, :]) / self.std_devs[None, :]
        return np.log(self.weights) - np.log(self.std_devs) - _LOG_SQRT_2PI - 0.5 * z * z

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(self.log_pdf(x))

    __call__ = pdf

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        return logsumexp(self._log_components(x.ravel()), axis=1).reshape(x.shape)

    def to_dict(self):
        return {"kind": "gmm", "weights": self.weights.tolist(), "means": self.means.tolist(),
                "std_devs": self.std_devs.tolist(), "log_likelihood": self.log_likelihood}


@dataclass(frozen=True)
class GmmOptions:
    restarts: int = 10
    max_iter: int = 500
    # relative log-likelihood change
    tol: float = 1e-8
    variance_floor: float = 1e-6


def _kmeanspp(x, k, rng):
    centers = [x[rng.integers(x.size)]]
    for _ in range(1, k):
        d2 = np.min((x[:, None] - np.array(centers)[None, :]) ** 2, axis=1)
        total = d2.sum()
        if total > 0:
            centers.append(x[rng.choice(x.size, p=d2 / total)])
        else:
            centers.append(x[rng.integers(x.size)])
    return np.array(centers)


def _em(x, centers, floor, opts):
    k = centers.size
    # hard assignment to the nearest seed gives the starting M-step
    resp = np.zeros((x.size, k))
    resp[np.arange(x.size), np.argmin(np.abs(x[:, None] - centers[None, :]), axis=1)] = 1.0
    trace = []
    for _ in range(opts.max_iter):
        nk = resp.sum(axis=0)
        if np.any(nk <= 0):
            raise CollapsedComponent("a component lost all its samples")
        means = x @ resp / nk
        dev = x[:, None] - means[None, :]
        var = np.einsum("ik,ik->k", resp, dev * dev) / nk
        if np.any(var < floor):
            raise CollapsedComponent(f"component variance {var.min():.3e} fell below the floor {floor:.3e}")
        weights = nk / x.size
        logc = np.log(weights) - 0.5 * np.log(var) - _LOG_SQRT_2PI - 0.5 * dev * dev / var
        top = logc.max(axis=1, keepdims=True)
        dens = np.exp(logc - top)
        total = dens.sum(axis=1, keepdims=True)
        trace.append(float(np.sum(top) + np.sum(np.log(total))))
        resp = dens / total
        if len(trace) > 1 and trace[-1] - trace[-2] <= opts.tol * abs(trace[-1]):
            break
    weights = weights / weights.sum()
    return GmmModel(weights, means, np.sqrt(var), trace[-1], trace)


def gmm_fit(samples, k=2, seed=0, opts=None, keys=()):
    """EM for a ``k``-component Gaussian mixture, best of ``opts.restarts``.

    Each restart seeds with k-means++ from the child stream
    ``(seed, *keys, restart)``.
    Restarts whose variance collapses below ``variance_floor * var(x)`` are
    discarded; if all do, :class:`CollapsedComponent` is raised.
    """
    opts = opts or GmmOptions()
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    x = _samples(samples, max(2, 2 * int(k)))
    floor = opts.variance_floor * float(np.var(x))
    if not floor > 0:
        raise InvalidSamples("samples have zero spread")
    best = None
    for restart in range(opts.restarts):
        rng = make_rng(seed, *keys, restart)
        try:
            model = _em(x, _kmeanspp(x, int(k), rng), floor, opts)
        except CollapsedComponent:
            continue
        if best is None or model.log_likelihood > best.log_likelihood:
            best = model
    if best is None:
        raise CollapsedComponent(f"every one of {opts.restarts} EM restarts collapsed")
    order = np.argsort(best.means, kind="stable")
    return replace(best, weights=best.weights[order], means=best.means[order],
                   std_devs=best.std_devs[order])


# ---------------------------------------------------------------- DPMKL

@dataclass(frozen=True)
class KlEstimate:
    """``p(x) = r(x) / omega(z)`` with ``omega = sum_k b_k z**k``, ``z = (x - shift) / scale``."""

    prior: GaussianPrior
    coeffs: OmegaCoefficients
    shift: float = 0.0
    scale: float = 1.0
    diagnostics: dict = field(default_factory=dict, compare=False)

    def omega(self, x):
        z = (np.asarray(x, dtype=float) - self.shift) / self.scale
        return np.polynomial.polynomial.polyval(z, self.coeffs.b)

    def pdf(self, x):
        return self.prior.pdf(x) / self.omega(x)

    __call__ = pdf

    def log_pdf(self, x):
        return self.prior.log_pdf(x) - np.log(self.omega(x))

    def to_dict(self):
        return {"kind": "dpmkl", "order": self.coeffs.order,
                "prior": {"mean": self.prior.mean, "std_dev": self.prior.std_dev},
                "b": list(self.coeffs.b),
                "standardization": {"shift": self.shift, "scale": self.scale},
                "diagnostics": self.diagnostics}


class _KlDual:
    def __init__(self, mu, prior, grid, eps):
        self.mu = np.asarray(mu, dtype=float)
        self.grid = grid
        self.eps = eps
        self.powers = np.vander(grid.nodes, self.mu.size, increasing=True).T
        self.rw = prior.pdf(grid.nodes) * grid.weights

    def omega(self, b):
        return b @ self.powers

    def feasible(self, b):
        if not np.all(np.isfinite(b)) or not np.all(self.omega(b) >= self.eps):
            return False
        roots = np.polynomial.polynomial.polyroots(np.trim_zeros(b, "b")) if np.any(b[1:]) else []
        real = np.real(roots)[np.abs(np.imag(roots)) <= 1e-9 * np.maximum(1.0, np.abs(np.real(roots)))]
        return not np.any((real >= self.grid.lower) & (real <= self.grid.upper))

    def value(self, b):
        return float(b @ self.mu - self.rw @ np.log(self.omega(b)))

    def derivatives(self, b):
        w = self.omega(b)
        q = self.rw / w
        f = float(b @ self.mu - self.rw @ np.log(w))
        g = self.mu - self.powers @ q
        H = (self.powers * (q / w)) @ self.powers.T
        return f, g, 0.5 * (H + H.T)


def dpmkl_gradient(b, moments, prior, grid, eps=1e-8):
    """``mu_k - int x**k r / omega`` (raw coordinates, no standardization)."""
    dual = _KlDual(moments.as_array(), prior, grid, eps)
    b = np.asarray(b, dtype=float)
    if not dual.feasible(b):
        raise InfeasiblePoint("omega is not positive on the grid")
    return dual.derivatives(b)[1]


def dpmkl_objective(b, moments, prior, grid, eps=1e-8):
    dual = _KlDual(moments.as_array(), prior, grid, eps)
    b = np.asarray(b, dtype=float)
    if not dual.feasible(b):
        raise InfeasiblePoint("omega is not positive on the grid")
    return dual.value(b)


def dpmkl_solve(moments, prior, grid=None, opts=None):
    """Moment-matching ``r / omega`` estimate; mirrors :func:`hellinger.solve`."""
    opts = opts or SolveOptions()
    grid = grid if grid is not None else grid_for_prior(prior)
    require_positive_definite(moments)
    if opts.standardize:
        zmom, shift, scale = moments.standardized()
    else:
        zmom, shift, scale = moments, 0.0, 1.0
    zprior = prior.standardized(shift, scale)
    zgrid = grid.to_standard(shift, scale)
    if opts.check_grid:
        check_grid([lambda z, k=k: z ** k * zprior.pdf(z) for k in range(moments.order + 1)], zgrid)
    dual = _KlDual(zmom.as_array(), zprior, zgrid, opts.eps_feas)
    mu_scale = np.maximum(1.0, np.abs(dual.mu))

    def converged(g):
        return np.max(np.abs(g)) <= opts.tol_grad and np.max(np.abs(g) / mu_scale) <= opts.tol_mom

    def build(result, ok):
        est = KlEstimate(prior, OmegaCoefficients(moments.order, result.x), shift, scale)
        resid = verify_moments(est, moments, grid)
        diag = {
            "converged": ok,
            "iterations": result.iterations,
            "final_gradient_norm": float(np.max(np.abs(result.gradient))),
            "moment_residuals": resid.tolist(),
            "max_relative_residual": float(np.max(relative_residuals(resid, moments))),
        }
        return replace(est, diagnostics=diag)

    x0 = np.zeros(moments.order + 1)
    x0[0] = 1.0
    try:
        result = _newton.barrier_minimize(x0, dual, converged=converged, max_iter=opts.max_iter,
                                          armijo=opts.armijo, shrink=opts.ls_shrink, polish=opts.polish)
    except NotConverged as exc:
        exc.estimate = build(exc.estimate, False)
        raise
    return build(result, True)


def eval_baseline(model, x):
    return model.pdf(x)
