"""Composite Gauss-Legendre quadrature on a truncated real line.

Every integral in the package goes through :func:`integrate` on a
:class:`QuadratureGrid`.  The grid is a fixed node set, so objectives built
on it are smooth deterministic functions of their parameters.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NonFiniteIntegrand

DEFAULT_PANELS = 40
DEFAULT_NODES_PER_PANEL = 16
DEFAULT_WIDTH_SD = 12.0


class GridWarning(UserWarning):
    pass


@lru_cache(maxsize=None)
def _reference_rule(nodes_per_panel):
    t, w = np.polynomial.legendre.leggauss(nodes_per_panel)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    nodes: np.ndarray
    weights: np.ndarray
    center: float
    half_width: float
    panels: int
    nodes_per_panel: int
    # panels + 1 ascending edges; equal panels unless breakpoints were added
    panel_edges: np.ndarray = None

    @property
    def lower(self):
        return self.center - self.half_width

    @property
    def upper(self):
        return self.center + self.half_width

    def refined(self):
        """Same interval (and breakpoints) with every panel split in two."""
        e = self.panel_edges
        mids = 0.5 * (e[:-1] + e[1:])
        return _from_edges(np.sort(np.concatenate([e, mids])), self.nodes_per_panel,
                           self.center, self.half_width)

    def to_standard(self, shift, scale):
        """The grid seen in the coordinate ``z = (x - shift) / scale``."""
        nodes = (self.nodes - shift) / scale
        weights = self.weights / scale
        edges = (self.panel_edges - shift) / scale
        for a in (nodes, weights, edges):
            a.setflags(write=False)
        return QuadratureGrid(
            nodes, weights, (self.center - shift) / scale, self.half_width / scale,
            self.panels, self.nodes_per_panel, edges,
        )


def _from_edges(edges, nodes_per_panel, center, half_width):
    t, w = _reference_rule(nodes_per_panel)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    for a in (nodes, weights, edges):
        a.setflags(write=False)
    return QuadratureGrid(nodes, weights, float(center), float(half_width), edges.size - 1,
                          nodes_per_panel, edges)


def build_grid(center, half_width, panels=DEFAULT_PANELS, nodes_per_panel=DEFAULT_NODES_PER_PANEL,
               breakpoints=()):
    """Composite Gauss-Legendre rule on ``[center - half_width, center + half_width]``.

    ``breakpoints`` inside the interval become extra panel edges; put kinks
    of the integrand there (the rule is only accurate for integrands that
    are smooth on each panel).
    """
    if not half_width > 0:
        raise ValueError(f"half_width must be positive, got {half_width}")
    if int(panels) != panels or panels < 1:
        raise ValueError(f"panels must be a positive integer, got {panels}")
    if int(nodes_per_panel) != nodes_per_panel or not 2 <= nodes_per_panel <= 64:
        raise ValueError(f"nodes_per_panel must be in [2, 64], got {nodes_per_panel}")
    edges = np.linspace(center - half_width, center + half_width, int(panels) + 1)
    extra = [float(b) for b in breakpoints if edges[0] < b < edges[-1]]
    if extra:
        edges = np.unique(np.concatenate([edges, extra]))
        # drop slivers left next to an existing edge
        keep = np.concatenate([[True], np.diff(edges) > 1e-9 * half_width])
        edges = edges[keep]
        edges[-1] = center + half_width
    return _from_edges(edges, int(nodes_per_panel), center, half_width)


def grid_for_prior(prior, panels=DEFAULT_PANELS, nodes_per_panel=DEFAULT_NODES_PER_PANEL,
                   width_sd=DEFAULT_WIDTH_SD, breakpoints=()):
    """Default truncation: prior mean +/- ``width_sd`` prior standard deviations."""
    return build_grid(prior.mean, width_sd * prior.std_dev, panels, nodes_per_panel, breakpoints)


def integrate(f, grid):
    """``sum_i w_i f(x_i)``; ``f`` is called once on the whole node array."""
    values = np.asarray(f(grid.nodes), dtype=float)
    if values.shape != grid.nodes.shape:
        values = np.broadcast_to(values, grid.nodes.shape)
    if not np.all(np.isfinite(values)):
        bad = grid.nodes[~np.isfinite(values)][0]
        raise NonFiniteIntegrand(f"integrand is not finite at x = {bad!r}")
    return float(grid.weights @ values)


def grid_is_sufficient(funcs, grid, tol=1e-10):
    """Compare integrals on ``grid`` against a grid with doubled panels.

    Returns the largest relative change (relative to ``max(1, |I|)``) and
    whether it is within ``tol``.
    """
    fine = grid.refined()
    worst = 0.0
    for f in funcs:
        a, b = integrate(f, grid), integrate(f, fine)
        worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    return worst, worst <= tol


def check_grid(funcs, grid, tol=1e-10):
    worst, ok = grid_is_sufficient(funcs, grid, tol)
    if not ok:
        warnings.warn(
            f"quadrature grid may be too coarse: doubling panels changes an "
            f"integral by {worst:.2e} (> {tol:.0e})",
            GridWarning,
            stacklevel=3,
        )
    return worst
