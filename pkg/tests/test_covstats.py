import math

import numpy as np
import pytest
from scipy import stats as sps

from pcpeel.covstats import (
    PeelPipeline,
    bootstrap,
    cov_stats,
    cov_stats_or_sentinel,
    gen_var_constancy,
    opnorm_check,
    ordering_check,
    preserved_cov,
    run_pipeline,
)
from pcpeel.elliptical import EllipticalModel, GaussianChi, sample_elliptical
from pcpeel.errors import AllZeroSpectrum, EmptyRetention, ReplicateFailure
from pcpeel.matrixcore import CovMatrix, DataMatrix, sample_covariance
from pcpeel.peel import fastprim
from pcpeel.rng import RngStream


def projected_gaussian(variances, n=200_000, seed=20250810):
    model = EllipticalModel(
        np.zeros(len(variances)), np.diag(np.sqrt(variances)), GaussianChi()
    )
    return sample_elliptical(model, n, RngStream(seed))


def truncated_normal_ratio(alpha):
    q = sps.norm.ppf(1 - alpha / 2)
    return 1 - 2 * q * sps.norm.pdf(q) / (2 * sps.norm.cdf(q) - 1)


class TestPreservedCov:
    def test_beta_one_equals_sample_covariance(self):
        y = projected_gaussian((4.0, 1.0), n=5_000)
        res = fastprim(y, None, 2, 1.0, mode="variance")
        np.testing.assert_array_equal(
            preserved_cov(y, res).values, sample_covariance(y).values
        )

    def test_peel_first_component_shrinks_it_only(self):
        y = projected_gaussian((4.0, 1.0))
        b = truncated_normal_ratio(0.1)
        res = fastprim(y, None, 1, 0.9, mode="explicit", indices=(1,))
        c = preserved_cov(y, res).values
        assert c[0, 0] == pytest.approx(4.0 * b, rel=0.02)
        assert c[1, 1] == pytest.approx(1.0, rel=0.02)

    def test_peel_second_component_swaps_roles(self):
        y = projected_gaussian((4.0, 1.0))
        b = truncated_normal_ratio(0.1)
        res = fastprim(y, None, 1, 0.9, mode="explicit", indices=(2,))
        c = preserved_cov(y, res).values
        assert c[0, 0] == pytest.approx(4.0, rel=0.02)
        assert c[1, 1] == pytest.approx(1.0 * b, rel=0.02)

    def test_empty_retention_guard(self):
        y = projected_gaussian((4.0, 1.0), n=1_000)
        res = fastprim(y, None, 1, 0.9, mode="variance")
        short = type(res)(
            box=res.box,
            retained_rows=res.retained_rows[:2],
            log_volume=res.log_volume,
            retained_fraction=2 / y.n,
        )
        with pytest.raises(EmptyRetention):
            preserved_cov(y, short)


class TestCovStats:
    def test_identity_exact(self):
        s = cov_stats(CovMatrix(np.eye(3)))
        assert s.total_variance == 3.0
        assert s.frobenius == math.sqrt(3.0)
        assert s.log_generalized_variance == 0.0
        assert s.operator_norm == 1.0
        assert s.dropped_eigenvalues == 0

    def test_diagonal_arithmetic(self):
        s = cov_stats(CovMatrix(np.diag([4.0, 1.0])))
        assert s.total_variance == pytest.approx(5.0)
        assert s.frobenius == pytest.approx(math.sqrt(17.0))
        assert s.log_generalized_variance == pytest.approx(math.log(4.0))
        assert s.operator_norm == pytest.approx(4.0)

    def test_zero_matrix_raises(self):
        with pytest.raises(AllZeroSpectrum):
            cov_stats(CovMatrix(np.zeros((2, 2))))

    def test_sentinel_variant_for_zero_matrix(self):
        s = cov_stats_or_sentinel(CovMatrix(np.zeros((2, 2))))
        assert s.total_variance == 0.0
        assert s.log_generalized_variance == -math.inf
        assert s.dropped_eigenvalues == 2

    def test_rank_deficient_drops_tiny_eigenvalues(self):
        c = CovMatrix(np.diag([1.0, 1e-20]))
        s = cov_stats(c)
        assert s.dropped_eigenvalues == 1
        assert s.log_generalized_variance == pytest.approx(0.0)

    @pytest.mark.parametrize("scale", [0.5, 2.0, 10.0])
    def test_scale_equivariance(self, scale):
        gen = np.random.default_rng(4)
        a = gen.standard_normal((4, 4))
        c = a @ a.T
        base = cov_stats(CovMatrix(c))
        scaled = cov_stats(CovMatrix(scale**2 * c))
        assert scaled.total_variance == pytest.approx(scale**2 * base.total_variance)
        assert scaled.frobenius == pytest.approx(scale**2 * base.frobenius)
        assert scaled.operator_norm == pytest.approx(scale**2 * base.operator_norm)
        assert scaled.log_generalized_variance == pytest.approx(
            base.log_generalized_variance + 2 * 4 * math.log(scale)
        )


class TestOrderingCheck:
    def test_anisotropic_gaussian_orders_with_margin(self):
        y = projected_gaussian((9.0, 4.0, 1.0), n=100_000)
        verdict = ordering_check(y, 1, 0.9)
        assert verdict.trace_ordered and verdict.frobenius_ordered
        assert verdict.trace_margin > 3
        assert verdict.frobenius_margin > 3

    def test_isotropic_gaussian_is_indistinguishable(self):
        y = projected_gaussian((1.0, 1.0, 1.0), n=100_000)
        verdict = ordering_check(y, 1, 0.9)
        assert abs(verdict.trace_margin) < 3
        assert abs(verdict.frobenius_margin) < 3

    def test_identical_bands_rejected(self):
        y = projected_gaussian((4.0, 1.0), n=1_000)
        with pytest.raises(ValueError):
            ordering_check(y, 2, 0.9)


class TestGenVarConstancy:
    def test_beta_one_is_exactly_zero(self):
        y = projected_gaussian((4.0, 1.0), n=5_000)
        assert gen_var_constancy(y, 1, 1.0, [(1,), (2,)]) == 0.0

    def test_gaussian_subsets_agree(self):
        y = projected_gaussian((9.0, 4.0, 1.0), n=100_000)
        delta = gen_var_constancy(y, 1, 0.9, [(1,), (2,), (3,)])
        assert delta < 0.05  # log scale; bootstrap SE is ~0.01 at this n

    def test_needs_two_subsets(self):
        y = projected_gaussian((4.0, 1.0), n=1_000)
        with pytest.raises(ValueError):
            gen_var_constancy(y, 1, 0.9, [(1,)])


class TestOpnormCheck:
    def test_leading_peel_minimizes(self):
        y = projected_gaussian((9.0, 4.0, 1.0), n=100_000)
        verdict = opnorm_check(y, 1, 0.9)
        assert verdict.min_margin > 3
        assert verdict.constancy_margin < 3
        assert verdict.with_first < min(verdict.others.values())

    def test_dimension_guard(self):
        y = projected_gaussian((4.0, 1.0), n=1_000)
        with pytest.raises(ValueError):
            opnorm_check(y, 1, 0.9)


class TestBootstrap:
    def test_constant_data_all_standard_errors_zero(self):
        x = DataMatrix(np.full((40, 2), 7.0))
        rep = bootstrap(x, PeelPipeline(1, 0.9, mode="variance"), 8, RngStream(1))
        assert all(se == 0.0 for se in rep.standard_errors.values())
        assert rep.means["total_variance"] == 0.0
        assert rep.means["log_generalized_variance"] == -math.inf

    def test_seeded_replicates_reproduce(self):
        x = DataMatrix(projected_gaussian((4.0, 1.0), n=2_000).values)
        pipe = PeelPipeline(1, 0.9, mode="volume", band="tail")
        a = bootstrap(x, pipe, 16, RngStream(5))
        b = bootstrap(x, pipe, 16, RngStream(5))
        assert np.array_equal(a.replicates, b.replicates)

    def test_se_of_mean_shrinks_with_replicates(self):
        x = DataMatrix(projected_gaussian((4.0, 1.0), n=4_000).values)
        pipe = PeelPipeline(1, 0.9, mode="variance")
        small = bootstrap(x, pipe, 100, RngStream(6))
        large = bootstrap(x, pipe, 200, RngStream(7))
        se_small = small.standard_errors["total_variance"] / math.sqrt(small.B)
        se_large = large.standard_errors["total_variance"] / math.sqrt(large.B)
        assert se_large < se_small
        assert se_large / se_small == pytest.approx(1 / math.sqrt(2), rel=0.35)

    def test_replicate_failure_aborts(self):
        x = DataMatrix(np.random.default_rng(2).standard_normal((5, 3)))
        with pytest.raises(ReplicateFailure):
            bootstrap(x, PeelPipeline(1, 0.5, mode="variance"), 10, RngStream(3))

    def test_pipeline_outcome_consistency(self):
        x = DataMatrix(projected_gaussian((9.0, 4.0, 1.0), n=5_000).values)
        outcome = run_pipeline(x, PeelPipeline(1, 0.9, mode="volume", band="tail"))
        assert outcome.selection is not None
        assert outcome.selection.pettiest_band == (3,)
        assert outcome.stats.total_variance == pytest.approx(
            float(np.trace(outcome.preserved.values))
        )
