import math
import warnings

import numpy as np
import pytest

from momentfit.errors import NonFiniteIntegrand
from momentfit.priors import GaussianPrior
from momentfit.quadrature import (
    GridWarning,
    build_grid,
    check_grid,
    grid_for_prior,
    grid_is_sufficient,
    integrate,
)


class TestBuildGrid:
    def test_two_point_rule(self):
        g = build_grid(0.0, 1.0, 1, 2)
        np.testing.assert_allclose(g.nodes, [-1 / math.sqrt(3), 1 / math.sqrt(3)], rtol=1e-15)
        np.testing.assert_allclose(g.weights, [1.0, 1.0], rtol=1e-15)

    def test_translation(self):
        g = build_grid(5.0, 1.0, 1, 2)
        np.testing.assert_allclose(g.nodes, [5 - 1 / math.sqrt(3), 5 + 1 / math.sqrt(3)], rtol=1e-15)

    def test_default_size(self):
        g = build_grid(0.0, 10.0, 40, 16)
        assert g.nodes.size == 640
        assert g.weights.sum() == pytest.approx(20.0, abs=1e-12)

    def test_invariants(self):
        g = build_grid(-3.0, 7.0, 13, 9)
        assert np.all(np.diff(g.nodes) > 0)
        assert np.all(g.weights > 0)
        assert g.nodes[0] > g.lower and g.nodes[-1] < g.upper
        assert g.nodes.size == 13 * 9

    @pytest.mark.parametrize("args", [(0, 0, 1, 2), (0, -1, 1, 2), (0, 1, 0, 2), (0, 1, 1, 1),
                                      (0, 1, 1, 65), (0, 1, 1.5, 2)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            build_grid(*args)

    def test_read_only(self):
        g = build_grid(0.0, 1.0, 2, 4)
        with pytest.raises(ValueError):
            g.nodes[0] = 3.0


class TestIntegrate:
    def test_constant(self):
        assert integrate(lambda x: np.ones_like(x), build_grid(0, 10, 40, 16)) == pytest.approx(20, abs=1e-12)

    def test_normal_pdf(self):
        phi = GaussianPrior(0, 1).pdf
        assert integrate(phi, build_grid(0, 10, 40, 16)) == pytest.approx(1.0, abs=1e-12)

    def test_odd_integrand(self):
        phi = GaussianPrior(0, 1).pdf
        assert abs(integrate(lambda x: x * phi(x), build_grid(0, 10, 40, 16))) <= 1e-12

    @pytest.mark.parametrize("npp", [2, 5, 16])
    def test_polynomial_exactness(self, npp):
        g = build_grid(0.5, 1.5, 3, npp)
        deg = 2 * npp - 1
        coef = np.random.default_rng(deg).standard_normal(deg + 1)
        exact = np.polynomial.polynomial.Polynomial(coef).integ()
        want = exact(g.upper) - exact(g.lower)
        got = integrate(lambda x: np.polynomial.polynomial.polyval(x, coef), g)
        assert got == pytest.approx(want, rel=1e-12)

    def test_non_finite(self):
        # the 3-point rule has a node at the center
        with pytest.raises(NonFiniteIntegrand), np.errstate(divide="ignore"):
            integrate(lambda x: 1.0 / x, build_grid(0.0, 1.0, 1, 3))

    def test_scalar_broadcast(self):
        assert integrate(lambda x: 2.0, build_grid(0, 1, 2, 4)) == pytest.approx(4.0)


class TestGridSelfCheck:
    def test_default_grid_sufficient(self):
        prior = GaussianPrior(0.3, 5.0)
        g = grid_for_prior(prior)
        funcs = [lambda x, k=k: x ** k * prior.pdf(x) for k in range(7)]
        worst, ok = grid_is_sufficient(funcs, g)
        assert ok and worst <= 1e-10

    def test_coarse_grid_warns(self):
        narrow = GaussianPrior(0.0, 0.5)
        g = build_grid(0.0, 10.0, 2, 4)
        with pytest.warns(GridWarning):
            check_grid([narrow.pdf], g)

    def test_no_warning_when_fine(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            check_grid([GaussianPrior(0, 1).pdf], build_grid(0, 12, 40, 16))

    def test_breakpoints(self):
        g = build_grid(0.0, 10.0, 4, 16, breakpoints=(2.0, -20.0, 5.0))
        np.testing.assert_allclose(g.panel_edges, [-10, -5, 0, 2, 5, 10])
        assert g.panels == 5 and g.nodes.size == 80
        kink = lambda x: np.exp(-np.abs(x - 2.0))
        assert integrate(kink, g) == pytest.approx(2 - np.exp(-12) - np.exp(-8), rel=1e-13)
        r = g.refined()
        assert 2.0 in r.panel_edges and r.panels == 10

    def test_refined_and_standard(self):
        g = build_grid(2.0, 6.0, 10, 8)
        assert g.refined().panels == 20
        s = g.to_standard(2.0, 3.0)
        np.testing.assert_allclose(s.nodes, (g.nodes - 2) / 3)
        assert s.weights.sum() == pytest.approx(4.0)
