"""Moment-matching density estimation under the squared Hellinger distance.

The estimate has the form ``p(x) = r(x) / omega(x)**2`` where ``r`` is a
reference density and ``omega = 1 + sum_k b_k x**k`` is a positive
polynomial of degree ``2n``.  The coefficients ``b`` minimize the strictly
convex dual

    J(b) = sum_k b_k mu_k + int r / omega dx

whose stationarity condition is exactly ``int x**k p dx = mu_k`` for
``k = 0..2n``.

Coefficients are stored in the polynomial basis rather than as a Hankel
matrix ``Omega``; the two are related by ``F(x)^T Omega F(x) = sum_k b_k x^k``
and :func:`hankel_representative` maps back.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _newton
from .errors import InfeasiblePoint, NotConverged
from .moments import MomentSequence, require_positive_definite
from .priors import GaussianPrior
from .quadrature import check_grid, grid_for_prior

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class OmegaCoefficients:
    """Coefficients ``b_0..b_order`` of ``omega(x) - 1``."""

    order: int
    b: tuple

    def __post_init__(self):
        b = tuple(float(v) for v in self.b)
        if len(b) != self.order + 1:
            raise ValueError(f"expected {self.order + 1} coefficients, got {len(b)}")
        object.__setattr__(self, "b", b)

    def as_array(self):
        return np.array(self.b)

    @classmethod
    def zeros(cls, order):
        return cls(order, (0.0,) * (order + 1))


def _poly(b, x):
    # Horner, b in ascending order
    return np.polyval(np.asarray(b)[::-1], np.asarray(x, dtype=float))


def omega_eval(coeffs, x):
    """``1 + sum_k b_k x**k``."""
    return 1.0 + _poly(coeffs.b, x)


def bounded_below(b):
    """True if the polynomial ``sum_{k>=1} b_k x**k`` is bounded below on R.

    The highest non-zero coefficient of positive degree must have even
    degree and positive sign (or the polynomial is constant).
    """
    b = np.asarray(b, dtype=float)
    nz = np.flatnonzero(b[1:])
    if nz.size == 0:
        return True
    top = nz[-1] + 1
    return top % 2 == 0 and b[top] > 0


def is_feasible(coeffs, grid, eps=1e-8):
    """``omega >= eps`` on every grid node and a positive even leading term."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    b = coeffs.as_array() if isinstance(coeffs, OmegaCoefficients) else np.asarray(coeffs)
    if not np.all(np.isfinite(b)) or not bounded_below(b):
        return False
    return bool(np.all(1.0 + _poly(b, grid.nodes) >= eps))


def omega_real_roots(coeffs, tol=1e-9):
    """Real roots of ``omega`` from the eigenvalues of its companion matrix."""
    b = np.array(coeffs.b)
    b[0] += 1.0
    b = np.trim_zeros(b, "b")
    if b.size <= 1:
        return np.array([])
    roots = np.polynomial.polynomial.polyroots(b)
    real = roots[np.abs(roots.imag) <= tol * np.maximum(1.0, np.abs(roots.real))].real
    return np.sort(real)


def certify_positive_on_real_line(coeffs):
    """Exact (root-based) check that ``omega > 0`` on all of R.

    Post-hoc complement to the grid check used while solving.
    """
    if not bounded_below(coeffs.b):
        return False
    if omega_real_roots(coeffs).size:
        return False
    return bool(omega_eval(coeffs, 0.0) > 0)


def hankel_representative(coeffs):
    """Hankel matrix ``Omega`` with ``F^T Omega F = omega - 1``.

    Entry ``(i, j)`` is ``b_{i+j} / c_{i+j}`` where ``c_k`` counts the
    pairs ``(i, j)`` with ``i + j = k``.
    """
    n = coeffs.order // 2
    idx = np.add.outer(np.arange(n + 1), np.arange(n + 1))
    counts = np.bincount(idx.ravel(), minlength=2 * n + 1)
    return np.asarray(coeffs.b)[idx] / counts[idx]


class _Dual:
    """Objective, gradient and Hessian of the Hellinger dual on a fixed grid."""

    def __init__(self, mu, prior, grid, eps):
        self.mu = np.asarray(mu, dtype=float)
        self.order = self.mu.size - 1
        self.grid = grid
        self.eps = eps
        self.powers = np.vander(grid.nodes, self.order + 1, increasing=True).T
        self.rw = prior.pdf(grid.nodes) * grid.weights

    def omega(self, b):
        return 1.0 + _poly(b, self.grid.nodes)

    def feasible(self, b):
        # positivity on the nodes plus no real root inside the grid interval;
        # roots beyond the truncation are allowed while iterating and the
        # leading-term sign is certified once the solve has finished
        if not np.all(np.isfinite(b)) or not np.all(self.omega(b) >= self.eps):
            return False
        roots = omega_real_roots(OmegaCoefficients(self.order, b))
        return not np.any((roots >= self.grid.lower) & (roots <= self.grid.upper))

    def _require(self, b):
        if not (self.feasible(b) and bounded_below(b)):
            raise InfeasiblePoint("omega is not positive on the grid for these coefficients")

    def value(self, b):
        return float(b @ self.mu + np.sum(self.rw / self.omega(b)))

    def gradient(self, b):
        w = self.omega(b)
        return self.mu - self.powers @ (self.rw / (w * w))

    def hessian(self, b):
        w = self.omega(b)
        weighted = self.powers * (2.0 * self.rw / w ** 3)
        H = weighted @ self.powers.T
        return 0.5 * (H + H.T)

    def derivatives(self, b):
        w = self.omega(b)
        q = self.rw / w
        f = float(b @ self.mu + np.sum(q))
        g = self.mu - self.powers @ (q / w)
        H = (self.powers * (2.0 * q / (w * w))) @ self.powers.T
        return f, g, 0.5 * (H + H.T)


def _problem(coeffs, moments, prior, grid, eps=1e-8):
    mu = moments.as_array() if isinstance(moments, MomentSequence) else np.asarray(moments)
    dual = _Dual(mu, prior, grid, eps)
    b = coeffs.as_array() if isinstance(coeffs, OmegaCoefficients) else np.asarray(coeffs, float)
    dual._require(b)
    return dual, b


def dual_objective(coeffs, moments, prior, grid):
    dual, b = _problem(coeffs, moments, prior, grid)
    return dual.value(b)


def dual_gradient(coeffs, moments, prior, grid):
    """``mu_k - int x**k r / omega**2`` for ``k = 0..2n``."""
    dual, b = _problem(coeffs, moments, prior, grid)
    return dual.gradient(b)


def dual_hessian(coeffs, moments, prior, grid):
    """``H[k, l] = int 2 x**(k+l) r / omega**3``."""
    dual, b = _problem(coeffs, moments, prior, grid)
    return dual.hessian(b)


@dataclass(frozen=True)
class SolveOptions:
    max_iter: int = 200
    tol_grad: float = 1e-9
    tol_mom: float = 1e-6
    eps_feas: float = 1e-8
    ls_shrink: float = 0.5
    armijo: float = 1e-4
    standardize: bool = True
    polish: int = 3
    check_grid: bool = True


@dataclass(frozen=True)
class DensityEstimate:
    """``p(x) = r(x) / omega(z)**2`` with ``z = (x - shift) / scale``.

    ``coeffs`` live in the standardized coordinate ``z``; with
    ``shift = 0, scale = 1`` that is the raw coordinate.
    """

    prior: GaussianPrior
    coeffs: OmegaCoefficients
    shift: float = 0.0
    scale: float = 1.0
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def order(self):
        return self.coeffs.order

    def omega(self, x):
        return omega_eval(self.coeffs, (np.asarray(x, dtype=float) - self.shift) / self.scale)

    def pdf(self, x):
        w = self.omega(x)
        return self.prior.pdf(x) / (w * w)

    __call__ = pdf

    def log_pdf(self, x):
        return self.prior.log_pdf(x) - 2.0 * np.log(self.omega(x))

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "dpmsh",
            "order": self.order,
            "prior": {"mean": self.prior.mean, "std_dev": self.prior.std_dev},
            "b": list(self.coeffs.b),
            "standardization": {"shift": self.shift, "scale": self.scale},
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, data):
        prior = GaussianPrior(float(data["prior"]["mean"]), float(data["prior"]["std_dev"]))
        coeffs = OmegaCoefficients(int(data["order"]), data["b"])
        st = data.get("standardization") or {"shift": 0.0, "scale": 1.0}
        return cls(prior, coeffs, float(st["shift"]), float(st["scale"]),
                   dict(data.get("diagnostics", {})))


def eval_density(est, x):
    return est.pdf(x)


def verify_moments(est, moments, grid):
    """``int x**k p dx - mu_k`` for ``k = 0..2n`` on ``grid``."""
    mu = moments.as_array()
    powers = np.vander(grid.nodes, mu.size, increasing=True).T
    p = est.pdf(grid.nodes)
    return powers @ (grid.weights * p) - mu


def relative_residuals(residuals, moments):
    mu = moments.as_array()
    return np.abs(residuals) / np.maximum(1.0, np.abs(mu))


def _coordinates(moments, opts):
    if opts.standardize:
        return moments.standardized()
    return moments, 0.0, 1.0


def solve(moments, prior, grid=None, opts=None, warm_start=None):
    """Minimize the Hellinger dual and return the moment-matching estimate.

    ``grid`` is in raw coordinates (default: prior mean +/- 12 prior
    standard deviations).  ``warm_start`` is a feasible coefficient vector
    in the solve coordinates (``z`` when standardizing); default ``b = 0``.

    Raises :class:`HankelNotPD`, :class:`NotConverged` or
    :class:`LineSearchStalled`; the latter two carry the last iterate as a
    :class:`DensityEstimate` in ``exc.estimate``.
    """
    opts = opts or SolveOptions()
    grid = grid if grid is not None else grid_for_prior(prior)
    require_positive_definite(moments)
    zmom, shift, scale = _coordinates(moments, opts)
    zprior = prior.standardized(shift, scale)
    zgrid = grid.to_standard(shift, scale)
    if opts.check_grid:
        check_grid([lambda z, k=k: z ** k * zprior.pdf(z) for k in range(moments.order + 1)], zgrid)

    dual = _Dual(zmom.as_array(), zprior, zgrid, opts.eps_feas)
    mu_scale = np.maximum(1.0, np.abs(dual.mu))

    def converged(g):
        return np.max(np.abs(g)) <= opts.tol_grad and np.max(np.abs(g) / mu_scale) <= opts.tol_mom

    x0 = np.zeros(moments.order + 1) if warm_start is None else np.asarray(
        warm_start.b if isinstance(warm_start, OmegaCoefficients) else warm_start, float)
    if not dual.feasible(x0):
        raise InfeasiblePoint("warm start is not feasible")

    def build(result, converged_flag):
        est = DensityEstimate(prior, OmegaCoefficients(moments.order, result.x), shift, scale)
        resid = verify_moments(est, moments, grid)
        diag = {
            "converged": converged_flag,
            "iterations": result.iterations,
            "final_gradient_norm": float(np.max(np.abs(result.gradient))),
            "moment_residuals": resid.tolist(),
            "max_relative_residual": float(np.max(relative_residuals(resid, moments))),
            "objective_trace": [float(v) for v in result.trace],
            "positive_on_real_line": certify_positive_on_real_line(est.coeffs),
        }
        return replace(est, diagnostics=diag)

    try:
        result = _newton.barrier_minimize(
            x0, dual, converged=converged, max_iter=opts.max_iter,
            armijo=opts.armijo, shrink=opts.ls_shrink, polish=opts.polish,
        )
    except NotConverged as exc:
        exc.estimate = build(exc.estimate, False)
        raise
    return build(result, True)


def fit(samples, order, prior=None, grid=None, opts=None):
    """Sample moments -> default prior (unless given) -> :func:`solve`."""
    from .moments import compute_sample_moments
    from .priors import default_prior

    moments = compute_sample_moments(samples, order)
    prior = prior or default_prior(moments)
    return solve(moments, prior, grid, opts)
