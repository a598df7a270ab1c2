"""Distances between densities evaluated on a quadrature grid.

``tv_distance`` is the sup-CDF (Kolmogorov) distance
``sup_x |F_p(x) - F_q(x)|``, not the textbook ``0.5 * int |p - q|``.

CDFs are exact antiderivatives of the per-panel Legendre interpolant of
the density through the Gauss nodes, so they can be evaluated anywhere in
the grid interval and their extrema located at roots of the interpolant.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as L

from .errors import SupportMismatch

KL_UNDERFLOW = 1e-300
# mass of p allowed on nodes where q underflows before KL refuses
KL_DROPPED_MASS = 1e-10


def _values(f, grid):
    v = np.asarray(f(grid.nodes) if callable(f) else f, dtype=float)
    return np.broadcast_to(v, grid.nodes.shape)


@lru_cache(maxsize=None)
def _transform(npp):
    # discrete Legendre transform on the Gauss nodes; exact up to degree npp-1
    t, w = np.polynomial.legendre.leggauss(npp)
    P = L.legvander(t, npp - 1)
    T = (P * w[:, None]).T * ((2 * np.arange(npp) + 1) / 2.0)[:, None]
    T.setflags(write=False)
    return T


class _PiecewiseCdf:
    """Antiderivative of the panelwise interpolant of ``values``."""

    def __init__(self, values, grid):
        self.grid = grid
        npp = grid.nodes_per_panel
        self.edges = grid.panel_edges
        self.half = 0.5 * np.diff(self.edges)
        vals = np.asarray(values, dtype=float).reshape(grid.panels, npp)
        self.coef = vals @ _transform(npp).T
        # antiderivative on [-1, 1] from -1, in x units
        self.anti = np.array([L.legint(c, lbnd=-1) * h for c, h in zip(self.coef, self.half)])
        masses = np.array([L.legval(1.0, a) for a in self.anti])
        self.offsets = np.concatenate([[0.0], np.cumsum(masses)])

    @property
    def total(self):
        return float(self.offsets[-1])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x).ravel()
        out = np.empty(flat.shape)
        k = np.clip(np.searchsorted(self.edges, flat, side="right") - 1, 0, self.grid.panels - 1)
        for j in np.unique(k):
            sel = k == j
            t = (flat[sel] - self.edges[j]) / self.half[j] - 1.0
            out[sel] = self.offsets[j] + L.legval(np.clip(t, -1.0, 1.0), self.anti[j])
        out[flat < self.edges[0]] = 0.0
        out[flat > self.edges[-1]] = self.total
        return out.reshape(x.shape) if x.ndim else float(out[0])

    def extreme_abs(self):
        """``max |F|`` over the grid interval."""
        best = 0.0
        for j, (c, a) in enumerate(zip(self.coef, self.anti)):
            c = L.legtrim(c, tol=0) if np.any(c) else c
            cand = [-1.0, 1.0]
            if c.size > 1 and np.any(c[1:]):
                r = L.legroots(c)
                r = r[np.abs(r.imag) < 1e-9].real if np.iscomplexobj(r) else r
                cand.extend(r[(r > -1) & (r < 1)])
            vals = self.offsets[j] + L.legval(np.asarray(cand), a)
            best = max(best, float(np.max(np.abs(vals))))
        return best


class CdfTable:
    """Distribution function of a density on a grid.

    ``xs``/``values`` tabulate ``F`` at the nodes; calling the table
    evaluates ``F`` anywhere, clamped to ``[0, 1]``.
    """

    def __init__(self, density, grid):
        self._pw = _PiecewiseCdf(_values(density, grid), grid)
        self.xs = grid.nodes
        self.values = self(grid.nodes)

    @property
    def total(self):
        return self._pw.total

    def __call__(self, x):
        v = np.clip(self._pw(x), 0.0, 1.0)
        # interpolation ripple must not break monotonicity of the table
        return np.maximum.accumulate(v) if np.ndim(v) and np.all(np.diff(x) >= 0) else v


def cdf(density, grid):
    return CdfTable(density, grid)


def tv_distance(p, q, grid):
    """``sup_x |F_p(x) - F_q(x)|`` (Kolmogorov distance) over the grid interval."""
    d = _values(p, grid) - _values(q, grid)
    return min(1.0, _PiecewiseCdf(d, grid).extreme_abs())


def _log_values(f, grid):
    # log densities stay finite far beyond where the density underflows
    if hasattr(f, "log_pdf"):
        return np.broadcast_to(np.asarray(f.log_pdf(grid.nodes), dtype=float), grid.nodes.shape)
    with np.errstate(divide="ignore"):
        return np.log(_values(f, grid))


def kl_divergence(p, q, grid):
    """``int p log(p / q)`` with ``0 log(0 / q) = 0``.

    Densities exposing ``log_pdf`` are compared in log space, so ``q`` only
    underflows where its log is ``-inf``.  Such nodes are dropped if ``p`` carries at most
    ``KL_DROPPED_MASS`` there; otherwise :class:`SupportMismatch` is raised.
    """
    lp, lq = _log_values(p, grid), _log_values(q, grid)
    pv = np.exp(lp)
    live = pv > KL_UNDERFLOW
    bad = live & ~(lq > -np.inf)
    if np.any(bad):
        lost = float(grid.weights[bad] @ pv[bad])
        if lost > KL_DROPPED_MASS:
            x = grid.nodes[bad][np.argmax(pv[bad])]
            raise SupportMismatch(f"q underflows at x = {x:.6g} where p has mass {lost:.3e}")
        live &= ~bad
    return float(grid.weights[live] @ (pv[live] * (lp[live] - lq[live])))


def hellinger_sq(p, q, grid):
    """``int (sqrt(p) - sqrt(q))**2``."""
    pv = np.maximum(_values(p, grid), 0.0)
    qv = np.maximum(_values(q, grid), 0.0)
    return float(grid.weights @ (np.sqrt(pv) - np.sqrt(qv)) ** 2)


def l2_distance(p, q, grid):
    """``int (p - q)**2``."""
    return float(grid.weights @ (_values(p, grid) - _values(q, grid)) ** 2)
