import math

import numpy as np
import pytest

from momentfit.errors import HankelNotPD, InvalidSamples, OddOrder
from momentfit.moments import (
    MomentSequence,
    build_hankel,
    certify_positive_definite,
    compute_sample_moments,
    require_positive_definite,
)


class TestComputeSampleMoments:
    def test_symmetric_pair(self):
        assert compute_sample_moments([1.0, -1.0], 2).values == (1.0, 0.0, 1.0)

    def test_constant_samples(self):
        m = compute_sample_moments([2.0, 2.0, 2.0], 2)
        assert m.values == (1.0, 2.0, 4.0)
        assert m.sample_count == 3

    def test_large_normal_sample(self):
        x = np.random.default_rng(7).standard_normal(10 ** 6)
        m = compute_sample_moments(x, 4)
        np.testing.assert_allclose(m.values, [1, 0, 1, 0, 3], atol=0.02)

    def test_matches_direct_mean(self, rng):
        x = rng.normal(3.0, 2.0, 1000)
        m = compute_sample_moments(x, 6)
        for k in range(7):
            assert m.values[k] == pytest.approx(np.mean(x ** k), rel=1e-12)

    def test_compensated_summation(self):
        # naive float accumulation loses the small terms next to the huge one
        x = np.array([1e8] + [1.0] * 999 + [-1e8])
        m = compute_sample_moments(x, 2)
        assert m.values[1] == 999 / 1001
        assert m.values[2] == pytest.approx((2e16 + 999) / 1001, rel=1e-15)

    def test_permutation_invariant(self, rng):
        x = rng.standard_normal(501) * 10
        a = compute_sample_moments(x, 6).values
        b = compute_sample_moments(rng.permutation(x), 6).values
        assert a == b

    @pytest.mark.parametrize("samples", [[], [1.0]])
    def test_too_few(self, samples):
        with pytest.raises(InvalidSamples):
            compute_sample_moments(samples, 2)

    def test_non_finite(self):
        with pytest.raises(InvalidSamples):
            compute_sample_moments([1.0, np.nan, 2.0], 2)
        with pytest.raises(InvalidSamples):
            compute_sample_moments([1.0, np.inf], 2)

    @pytest.mark.parametrize("order", [0, 1, 3, 5, 2.5])
    def test_bad_order(self, order):
        with pytest.raises(OddOrder):
            compute_sample_moments([1.0, 2.0, 3.0], order)


class TestMomentSequence:
    def test_invariants(self):
        with pytest.raises(ValueError):
            MomentSequence(2, (1.0, 0.0))
        with pytest.raises(ValueError):
            MomentSequence(2, (2.0, 0.0, 1.0))

    def test_affine_matches_direct(self, rng):
        x = rng.gamma(2.0, 1.5, 2000)
        a, b = -0.7, 3.2
        direct = compute_sample_moments(a * x + b, 6).values
        pushed = compute_sample_moments(x, 6).affine(a, b).values
        np.testing.assert_allclose(pushed, direct, rtol=1e-10)

    def test_standardized(self, rng):
        x = rng.normal(5.0, 3.0, 400)
        z, shift, scale = compute_sample_moments(x, 4).standardized()
        assert shift == pytest.approx(np.mean(x))
        assert scale == pytest.approx(np.std(x))
        assert z.values[1] == pytest.approx(0.0, abs=1e-12)
        assert z.values[2] == pytest.approx(1.0, rel=1e-12)

    def test_standardized_degenerate(self):
        with pytest.raises(HankelNotPD):
            MomentSequence(2, (1.0, 2.0, 4.0)).standardized()


class TestHankel:
    def test_identity(self):
        np.testing.assert_array_equal(build_hankel(MomentSequence(2, (1, 0, 1))).entries, np.eye(2))

    def test_constant(self):
        np.testing.assert_array_equal(build_hankel(MomentSequence(2, (1, 2, 4))).entries, [[1, 2], [2, 4]])

    def test_gaussian(self):
        h = build_hankel(MomentSequence(4, (1, 0, 1, 0, 3)))
        np.testing.assert_array_equal(h.entries, [[1, 0, 1], [0, 1, 0], [1, 0, 3]])
        assert h.size == 3

    def test_hankel_structure(self, rng):
        h = build_hankel(compute_sample_moments(rng.standard_normal(50), 6)).entries
        for i in range(4):
            for j in range(4):
                assert h[i, j] == h[j, i] == h[0, i + j] if i + j <= 3 else h[i, j] == h[3, i + j - 3]


class TestCertify:
    def test_identity(self):
        cert = certify_positive_definite(build_hankel(MomentSequence(2, (1, 0, 1))))
        assert cert.is_pd
        assert cert.min_eigenvalue == pytest.approx(1.0)

    def test_constant_samples_rank_one(self):
        cert = certify_positive_definite(build_hankel(MomentSequence(2, (1, 2, 4))))
        assert not cert.is_pd
        with pytest.raises(HankelNotPD, match="degenerate"):
            require_positive_definite(MomentSequence(2, (1, 2, 4)))

    def test_gaussian_against_characteristic_polynomial(self):
        # [[1,0,1],[0,1,0],[1,0,3]]: eigenvalues 1 and 2 +/- sqrt(2)
        cert = certify_positive_definite(build_hankel(MomentSequence(4, (1, 0, 1, 0, 3))))
        assert cert.is_pd
        assert cert.min_eigenvalue == pytest.approx(2 - math.sqrt(2), rel=1e-12)

    def test_distinct_samples_always_pd(self, rng):
        # m distinct samples, 2n <= 2(m - 1)
        for m in range(2, 7):
            x = np.sort(rng.uniform(-2, 2, m))
            for order in range(2, 2 * (m - 1) + 1, 2):
                require_positive_definite(compute_sample_moments(x, order))

    def test_two_distinct_values_rank_two(self):
        # the Hankel rank is the number of distinct support points
        x = [-1.0, 2.0, 2.0, -1.0, 2.0]
        require_positive_definite(compute_sample_moments(x, 2))
        with pytest.raises(HankelNotPD):
            require_positive_definite(compute_sample_moments(x, 4))

    def test_wide_data_accepted(self, rng):
        x = rng.standard_normal(100) * 1e4 + 3e4
        mom = compute_sample_moments(x, 6)
        # the raw Hankel is too ill-conditioned for the relative threshold
        assert not certify_positive_definite(build_hankel(mom)).is_pd
        assert require_positive_definite(mom).is_pd

    def test_explicit_tolerance(self):
        h = build_hankel(MomentSequence(2, (1, 0, 0.5)))
        assert certify_positive_definite(h, tol=0.4).is_pd
        assert not certify_positive_definite(h, tol=0.6).is_pd
        with pytest.raises(ValueError):
            certify_positive_definite(h, tol=0.0)
