import math

import numpy as np
import pytest
from scipy import stats

from pcpeel.elliptical import (
    EllipticalModel,
    GaussianChi,
    Laplace,
    StudentT,
    _gaussian_sphere_integrals,
    sample_elliptical,
    sample_sphere,
    truncation_coeffs,
)
from pcpeel.errors import InvalidRadialParam, UnsupportedRadial
from pcpeel.rng import RngStream


def closed_form_b(alpha: float) -> float:
    q = stats.norm.ppf(1 - alpha / 2)
    return 1 - 2 * q * stats.norm.pdf(q) / (2 * stats.norm.cdf(q) - 1)


class TestSphere:
    def test_zero_sphere_is_plus_minus_one(self, stream):
        u = sample_sphere(1, 50, stream).values
        assert set(np.unique(u)) <= {-1.0, 1.0}

    def test_rows_have_unit_norm(self, stream):
        u = sample_sphere(5, 1000, stream).values
        np.testing.assert_allclose(np.linalg.norm(u, axis=1), 1.0, atol=1e-12)

    def test_coordinate_mean_square_is_one_over_d(self, stream):
        u = sample_sphere(3, 100_000, stream).values
        ms = (u**2).mean(axis=0)
        assert np.all(np.abs(ms - 1 / 3) < 0.01)

    def test_reproducible(self):
        a = sample_sphere(4, 100, RngStream(3, 1)).values
        b = sample_sphere(4, 100, RngStream(3, 1)).values
        assert np.array_equal(a, b)


class TestSampleElliptical:
    def test_gaussian_covariance_matches_independent_sampler(self, stream):
        model = EllipticalModel(np.zeros(2), np.diag([2.0, 1.0]), GaussianChi())
        x = sample_elliptical(model, 200_000, stream).values
        c = np.cov(x, rowvar=False)
        # Oracle: direct independent-normal draws under the same seed policy.
        gen = RngStream(20250810, 9).generator()
        ref = gen.normal(0.0, [2.0, 1.0], size=(200_000, 2))
        c_ref = np.cov(ref, rowvar=False)
        for target, got in ((np.diag([4.0, 1.0]), c), (np.diag([4.0, 1.0]), c_ref)):
            assert np.all(np.abs(np.diag(got) / np.diag(target) - 1) < 0.02)
        assert abs(c[0, 1]) < 0.02

    def test_degenerate_radius_collapses_to_mean(self):
        class ZeroRadius:
            def sample_radius(self, gen, n, d):
                return np.zeros(n)

            def covariance_factor(self, d):
                return 0.0

        mu = np.array([3.0, -1.0])
        model = EllipticalModel(mu, np.eye(2), ZeroRadius())
        x = sample_elliptical(model, 25, RngStream(0)).values
        np.testing.assert_array_equal(x, np.tile(mu, (25, 1)))

    def test_laplace_has_positive_excess_kurtosis(self, stream):
        model = EllipticalModel(np.zeros(2), np.eye(2), Laplace())
        x = sample_elliptical(model, 100_000, stream).values
        control = EllipticalModel(np.zeros(2), np.eye(2), GaussianChi())
        g = sample_elliptical(control, 100_000, stream.split(1)).values
        assert stats.kurtosis(x[:, 0]) > 1.0
        assert abs(stats.kurtosis(g[:, 0])) < 0.2

    def test_student_t_covariance_scale(self, stream):
        model = EllipticalModel(np.zeros(2), np.eye(2), StudentT(5.0))
        x = sample_elliptical(model, 300_000, stream).values
        factor = model.radial.covariance_factor(2)
        assert factor == pytest.approx(5 / 3)
        assert np.all(np.abs(np.diag(np.cov(x, rowvar=False)) / factor - 1) < 0.05)

    def test_student_t_low_dof_rejected_at_construction(self):
        with pytest.raises(InvalidRadialParam):
            StudentT(2.0)


class TestTruncationCoeffs:
    def test_gaussian_unpeeled_coefficient_is_one(self):
        model = EllipticalModel(np.zeros(2), np.eye(2), GaussianChi())
        coeffs = truncation_coeffs(model, 1, 0.1)
        assert abs(coeffs.unpeeled - 1.0) < 1e-4

    def test_gaussian_peeled_matches_truncated_normal_variance(self):
        model = EllipticalModel(np.zeros(2), np.eye(2), GaussianChi())
        coeffs = truncation_coeffs(model, 1, 0.1)
        assert coeffs.peeled == pytest.approx(closed_form_b(0.1), abs=1e-6)

    def test_vanishing_truncation_gives_unit_coefficients(self):
        model = EllipticalModel(np.zeros(3), np.eye(3), GaussianChi())
        coeffs = truncation_coeffs(model, 1, 1e-9)
        assert coeffs.unpeeled == pytest.approx(1.0, abs=1e-5)
        assert coeffs.peeled == pytest.approx(1.0, abs=1e-5)

    @pytest.mark.parametrize("d", [2, 3, 5])
    @pytest.mark.parametrize("alpha", [0.05, 0.1, 0.3])
    def test_peeled_below_unpeeled_and_in_range(self, d, alpha):
        model = EllipticalModel(np.zeros(d), np.eye(d), GaussianChi())
        coeffs = truncation_coeffs(model, 1, alpha)
        assert coeffs.peeled <= coeffs.unpeeled
        assert 0.0 <= coeffs.peeled <= 1.0 + 1e-6
        assert 0.0 <= coeffs.unpeeled <= 1.0 + 1e-6

    def test_integral_bound(self):
        _, first, second, _ = _gaussian_sphere_integrals(4, 0.2)
        assert second <= first / 4 + 1e-9

    def test_unsupported_radial_for_quadrature(self):
        model = EllipticalModel(np.zeros(2), np.eye(2), StudentT(5.0))
        with pytest.raises(UnsupportedRadial):
            truncation_coeffs(model, 1, 0.1)

    def test_monte_carlo_k2_matches_independence_argument(self):
        # Gaussian components are independent, so a joint truncation of two
        # coordinates shrinks each by the one-dimensional factor and leaves
        # the rest untouched.
        model = EllipticalModel(np.zeros(4), np.eye(4), GaussianChi())
        coeffs = truncation_coeffs(
            model, 2, 0.1, rng=RngStream(11), mc_samples=1_000_000
        )
        assert coeffs.unpeeled == pytest.approx(1.0, abs=0.01)
        assert coeffs.peeled == pytest.approx(closed_form_b(0.1), abs=0.01)

    def test_monte_carlo_student_t_orders_coefficients(self):
        model = EllipticalModel(np.zeros(3), np.eye(3), StudentT(5.0))
        coeffs = truncation_coeffs(model, 2, 0.2, rng=RngStream(12), mc_samples=500_000)
        assert coeffs.peeled < coeffs.unpeeled

    def test_chebyshev_correlation_inequality_monte_carlo(self, stream):
        # f increasing, g decreasing in the sphere coordinate: their
        # covariance estimate must not exceed +3 standard errors of zero.
        d = 3
        q = stats.norm.ppf(0.95)
        omega = np.abs(sample_sphere(d, 200_000, stream).values[:, 0])
        f = omega**2
        g = d * stats.chi2.cdf((q / omega) ** 2, d + 2)
        prods = (f - f.mean()) * (g - g.mean())
        cov = prods.mean()
        se = prods.std(ddof=1) / math.sqrt(prods.size)
        assert cov <= 3 * se
