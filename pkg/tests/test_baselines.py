import math

import numpy as np
import pytest
from scipy import stats

from momentfit.baselines import (
    GmmModel,
    GmmOptions,
    KdeModel,
    dpmkl_gradient,
    dpmkl_objective,
    dpmkl_solve,
    eval_baseline,
    gmm_fit,
    kde_fit,
    silverman_bandwidth,
)
from momentfit.errors import CollapsedComponent, InfeasiblePoint, InvalidSamples
from momentfit.moments import MomentSequence
from momentfit.priors import GaussianPrior
from momentfit.quadrature import build_grid
from momentfit.sampling import make_rng, benchmark_example, sample_mixture


class TestKde:
    def test_bandwidth_rule(self, rng):
        x = rng.normal(size=300)
        q75, q25 = np.percentile(x, [75, 25])
        expected = 0.9 * min(x.std(ddof=1), (q75 - q25) / 1.34) * 300 ** -0.2
        assert silverman_bandwidth(x) == pytest.approx(expected, rel=1e-14)

    def test_zero_iqr_falls_back(self):
        x = np.array([0.0] * 8 + [1.0, 2.0])
        assert silverman_bandwidth(x) == pytest.approx(0.9 * x.std(ddof=1) * 10 ** -0.2)

    def test_constant_rejected(self):
        with pytest.raises(InvalidSamples):
            kde_fit(np.ones(10))

    def test_matches_scipy(self, rng):
        x = rng.normal(size=200)
        model = kde_fit(x)
        ref = stats.gaussian_kde(x, bw_method=model.bandwidth / x.std(ddof=1))
        grid = np.linspace(-4, 4, 50)
        np.testing.assert_allclose(model.pdf(grid), ref(grid), rtol=1e-10)
        np.testing.assert_allclose(model.log_pdf(grid), np.log(ref(grid)), rtol=1e-10)

    def test_integrates_to_one(self, std_grid, rng):
        model = kde_fit(rng.normal(size=50))
        assert std_grid.weights @ eval_baseline(model, std_grid.nodes) == pytest.approx(1.0, abs=1e-10)

    def test_far_tail_log(self):
        model = KdeModel(np.array([0.0]), 1.0)
        assert model.log_pdf(np.array([100.0]))[0] == pytest.approx(-5000 - 0.5 * math.log(2 * math.pi))


class TestGmm:
    def test_recovers_separated_mixture(self):
        spec = benchmark_example(1).spec
        x = sample_mixture(spec, 5000, make_rng(11))
        model = gmm_fit(x, 2, seed=3)
        np.testing.assert_allclose(model.means, [-2, 2], atol=0.1)
        np.testing.assert_allclose(model.std_devs, [1, 1], atol=0.1)
        np.testing.assert_allclose(model.weights, [0.5, 0.5], atol=0.05)

    def test_likelihood_monotone(self, rng):
        x = rng.normal(size=400)
        model = gmm_fit(x, 3, seed=0)
        assert np.all(np.diff(model.trace) >= -1e-9 * np.abs(model.trace[1:]))

    def test_log_likelihood_consistent(self, rng):
        x = np.concatenate([rng.normal(-3, 1, 200), rng.normal(2, 0.5, 100)])
        model = gmm_fit(x, 2, seed=1)
        assert model.log_likelihood == pytest.approx(model.log_pdf(x).sum(), rel=1e-10)

    def test_deterministic(self, rng):
        x = rng.normal(size=100)
        a, b = gmm_fit(x, 2, seed=5, keys=(1, 2)), gmm_fit(x, 2, seed=5, keys=(1, 2))
        np.testing.assert_array_equal(a.means, b.means)

    def test_pdf_is_mixture(self):
        m = GmmModel(np.array([0.3, 0.7]), np.array([-1.0, 2.0]), np.array([0.5, 1.5]))
        x = np.linspace(-5, 5, 21)
        ref = 0.3 * stats.norm.pdf(x, -1, 0.5) + 0.7 * stats.norm.pdf(x, 2, 1.5)
        np.testing.assert_allclose(m.pdf(x), ref, rtol=1e-13)

    def test_collapse(self):
        x = np.array([0.0, 0.0, 0.0, 1.0])
        with pytest.raises(CollapsedComponent):
            gmm_fit(x, 2, opts=GmmOptions(restarts=3))

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            gmm_fit(np.arange(10.0), 0)
        with pytest.raises(InvalidSamples):
            gmm_fit(np.arange(3.0), 2)
        with pytest.raises(ValueError):
            GmmModel(np.array([0.5, 0.6]), np.zeros(2), np.ones(2))


class TestDpmkl:
    prior = GaussianPrior(0.0, 1.0)

    def test_gradient_vs_differences(self, std_grid, rng):
        mom = MomentSequence(4, (1.0, 0.1, 1.2, 0.0, 3.5))
        for _ in range(20):
            b = np.array([1.0, 0, 0, 0, 0]) + rng.uniform(-0.05, 0.05, 5) * 4.0 ** -np.arange(5)
            b[-1] = abs(b[-1])
            try:
                g = dpmkl_gradient(b, mom, self.prior, std_grid)
            except InfeasiblePoint:
                continue
            steps = 1e-4 * 4.0 ** -np.arange(5)
            fd = np.array([(dpmkl_objective(b + h * e, mom, self.prior, std_grid)
                            - dpmkl_objective(b - h * e, mom, self.prior, std_grid)) / (2 * h)
                           for h, e in zip(steps, np.eye(5))])
            np.testing.assert_allclose(fd, g, atol=1e-6 * max(1, np.max(np.abs(g))))

    def test_prior_recovery(self):
        prior = GaussianPrior(1.0, 2.0)
        est = dpmkl_solve(MomentSequence(4, tuple(prior.moments(4))), prior)
        x = np.linspace(-10, 10, 101)
        np.testing.assert_allclose(est.pdf(x), prior.pdf(x), atol=1e-9)

    def test_moment_matching(self):
        ex = benchmark_example(2)
        mom = MomentSequence(4, tuple(ex.spec.moments(4)))
        est = dpmkl_solve(mom, ex.prior)
        assert est.diagnostics["converged"]
        assert est.diagnostics["max_relative_residual"] <= 1e-6
        grid = build_grid(ex.prior.mean, 12 * ex.prior.std_dev, 40, 16)
        np.testing.assert_allclose(np.log(est.pdf(grid.nodes[:50])), est.log_pdf(grid.nodes[:50]),
                                   rtol=1e-12)
        assert est.to_dict()["kind"] == "dpmkl"

    def test_infeasible(self, std_grid):
        mom = MomentSequence(2, (1.0, 0.0, 1.0))
        with pytest.raises(InfeasiblePoint):
            dpmkl_objective(np.array([-1.0, 0.0, 0.5]), mom, self.prior, std_grid)
