"""
Unit tests for limit laws, goodness of fit and the alpha fit
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from asep_lab.errors import DomainError, FitError
from asep_lab.services.rng import RngStream
from asep_lab.services.statistics import (
    EmpiricalCdf, GoldenSearch, SpeedLaw, binomial_se, block_prob_target, fit_alpha, fit_polynomial_cdf,
    ks_critical_value, ks_distance, ks_two_sample, mean_and_se, min_of_uniforms_batch, sample_speed_law,
    sample_speed_law_batch, speed_cdf, speed_mean, speed_median, speed_quantile, speed_survival,
)


def quantile_sample(law: SpeedLaw, n: int) -> np.ndarray:
    return speed_quantile((np.arange(n) + 0.5) / n, law)


class TestSpeedLaw:
    """Test the survival function and its inverse"""

    def test_examples(self):
        assert speed_survival(0.0, SpeedLaw(gamma=1.0, L=0)) == pytest.approx(0.5)
        assert speed_survival(0.2, SpeedLaw(gamma=0.4, L=2)) == pytest.approx(0.015625)

    def test_support_endpoints(self):
        law = SpeedLaw(gamma=0.4, L=3)
        assert speed_survival(-0.4, law) == 1.0
        assert speed_survival(0.4, law) == 0.0
        assert speed_survival(-2.0, law) == 1.0
        assert speed_survival(2.0, law) == 0.0

    def test_vectorized(self):
        values = speed_survival(np.array([-1.0, 0.0, 1.0]), SpeedLaw(gamma=1.0, L=0))
        assert values.tolist() == [1.0, 0.5, 0.0]

    def test_alpha_must_be_positive(self):
        with pytest.raises(DomainError):
            SpeedLaw(gamma=0.4, L=0, alpha=0.0)
        with pytest.raises(DomainError):
            SpeedLaw(gamma=-0.1, L=0)

    @settings(max_examples=200, deadline=None)
    @given(s=st.floats(-0.99, 0.99), ds=st.floats(0.0, 0.5), L=st.integers(0, 8))
    def test_nonincreasing_in_s_and_L(self, s, ds, L):
        law = SpeedLaw(gamma=1.0, L=L)
        assert speed_survival(min(s + ds, 0.99), law) <= speed_survival(s, law)
        assert speed_survival(s, SpeedLaw(gamma=1.0, L=L + 1)) <= speed_survival(s, law)

    def test_quantile_inverts_cdf(self):
        law = SpeedLaw(gamma=0.4, L=2)
        u = np.linspace(0.01, 0.99, 25)
        assert np.allclose(speed_cdf(speed_quantile(u, law), law), u)

    def test_analytic_median(self):
        law = SpeedLaw(gamma=0.4, L=2)
        assert speed_median(law) == pytest.approx(0.4 * (1 - 2 * 0.5 ** (1 / 3)))

    def test_quantile_domain(self):
        with pytest.raises(DomainError):
            speed_quantile(1.5, SpeedLaw(gamma=1.0, L=0))

    def test_mean_matches_integration(self):
        law = SpeedLaw(gamma=0.4, L=2, alpha=0.875)
        # E[U] = -alpha + integral of the survival function over the support
        integral, _ = integrate.quad(lambda s: speed_survival(s, law), -0.875, 0.875)
        assert speed_mean(law) == pytest.approx(-0.875 + integral, abs=1e-6)


class TestSamplers:
    """Test the inverse-transform sampler against the min-of-uniforms definition"""

    def test_boundary_values(self, scripted):
        law = SpeedLaw(gamma=0.4, L=2)
        assert sample_speed_law(law, scripted([0.0])) == pytest.approx(0.4)
        assert sample_speed_law(law, scripted([1.0])) == pytest.approx(-0.4)
        assert sample_speed_law(law, scripted([0.125])) == pytest.approx(0.0, abs=1e-12)

    def test_batch_matches_scalar(self):
        law = SpeedLaw(gamma=0.6, L=1)
        scalar_stream = RngStream(1, 0)
        batch = sample_speed_law_batch(law, RngStream(1, 0), 20)
        assert np.allclose(batch, [sample_speed_law(law, scalar_stream) for _ in range(20)])

    def test_two_sample_ks(self):
        law = SpeedLaw(gamma=0.4, L=2)
        a = sample_speed_law_batch(law, RngStream(10, 0), 100000)
        b = min_of_uniforms_batch(law, RngStream(10, 1), 100000)
        assert ks_two_sample(a, b) < 0.01

    def test_mean_for_L0(self):
        values = sample_speed_law_batch(SpeedLaw(gamma=1.0, L=0), RngStream(11, 0), 100000)
        mean, se = mean_and_se(values)
        assert abs(mean) <= 3 * se

    @pytest.mark.parametrize("L", [1, 2, 5])
    def test_mean_for_general_L(self, L):
        law = SpeedLaw(gamma=0.7, L=L)
        values = sample_speed_law_batch(law, RngStream(12, L), 100000)
        mean, se = mean_and_se(values)
        assert abs(mean - 0.7 * (1 - 2 * (L + 1) / (L + 2))) <= 3 * se


class TestBlockTarget:
    """Test the block-probability limit"""

    def test_examples(self):
        assert block_prob_target(0.1, 0.5, 1) == pytest.approx(0.16)
        assert block_prob_target(0.0, 0.3, 0) == pytest.approx(0.5)
        assert block_prob_target(0.5, 0.5, 3) == pytest.approx(0.0)

    def test_equals_speed_survival(self):
        for s in np.linspace(-0.5, 0.5, 21):
            assert block_prob_target(s, 0.5, 2) == pytest.approx(speed_survival(s, SpeedLaw(gamma=0.5, L=2)))

    def test_outside_fan(self):
        with pytest.raises(DomainError):
            block_prob_target(0.6, 0.5, 1)


class TestEmpiricalCdf:
    """Test empirical CDF evaluation"""

    def test_right_continuous(self):
        ecdf = EmpiricalCdf([0.3, -0.1, 0.3, 0.8])
        assert ecdf.samples.tolist() == [-0.1, 0.3, 0.3, 0.8]
        assert ecdf(0.3) == 0.75
        assert ecdf(0.29) == 0.25
        assert ecdf(-1.0) == 0.0 and ecdf(1.0) == 1.0
        assert ecdf.survival(0.3) == 0.75
        assert ecdf.n == 4

    def test_summary_statistics(self):
        ecdf = EmpiricalCdf([1.0, 2.0, 3.0, 4.0])
        assert ecdf.median() == 2.5
        assert ecdf.mean() == 2.5

    def test_nan_rejected(self):
        with pytest.raises(DomainError):
            EmpiricalCdf([0.1, float("nan")])


class TestKolmogorovSmirnov:
    """Test the KS distance"""

    def uniform_cdf(self, x):
        return np.clip(x, 0.0, 1.0)

    def test_single_sample_at_median(self):
        assert ks_distance(EmpiricalCdf([0.5]), self.uniform_cdf) == pytest.approx(0.5)

    def test_two_quartile_samples(self):
        assert ks_distance(EmpiricalCdf([0.25, 0.75]), self.uniform_cdf) == pytest.approx(0.25)

    def test_empty_sample(self):
        with pytest.raises(DomainError):
            ks_distance(EmpiricalCdf([]), self.uniform_cdf)

    def test_exact_law_below_critical_value(self):
        n = 10000
        law = SpeedLaw(gamma=0.4, L=2)
        ecdf = EmpiricalCdf(sample_speed_law_batch(law, RngStream(13, 0), n))
        assert ks_distance(ecdf, lambda x: speed_cdf(x, law)) < 1.63 / math.sqrt(n)

    def test_critical_value(self):
        assert ks_critical_value(10000, 0.01) == pytest.approx(1.63 / 100, abs=5e-4)


class TestStandardErrors:
    def test_binomial_se(self):
        assert binomial_se(0.5, 100) == pytest.approx(0.05)
        assert binomial_se(0.0, 50) == 0.0
        assert binomial_se(0.16, 20000) == pytest.approx(0.00259, abs=1e-5)

    def test_binomial_se_needs_trials(self):
        with pytest.raises(DomainError):
            binomial_se(0.5, 0)

    def test_mean_and_se(self):
        mean, se = mean_and_se([1.0, 2.0, 3.0])
        assert mean == 2.0
        assert se == pytest.approx(1 / math.sqrt(3))
        assert mean_and_se([4.0]) == (4.0, 0.0)


class TestFitting:
    """Test the alpha fit and the polynomial CDF fit"""

    def test_golden_search(self):
        x, value = GoldenSearch(lambda a: (a - 0.3) ** 2, 0.0, 1.0).run(1e-6)
        assert x == pytest.approx(0.3, abs=1e-5)
        assert value == pytest.approx(0.0, abs=1e-10)

    def test_self_consistency(self):
        law = SpeedLaw(gamma=0.5, L=1)
        alpha, sse = fit_alpha(EmpiricalCdf(quantile_sample(law, 10000)), 1)
        assert alpha == pytest.approx(0.5, abs=1e-3)
        assert sse < 1e-3

    def test_recovers_alpha_from_sampler(self):
        law = SpeedLaw(gamma=0.4, L=2, alpha=0.875)
        ecdf = EmpiricalCdf(sample_speed_law_batch(law, RngStream(14, 0), 50000))
        alpha, _ = fit_alpha(ecdf, 2)
        assert 0.86 <= alpha <= 0.89

    def test_deterministic(self):
        ecdf = EmpiricalCdf(sample_speed_law_batch(SpeedLaw(gamma=0.6, L=0), RngStream(15, 0), 2000))
        assert fit_alpha(ecdf, 0) == fit_alpha(ecdf, 0)

    @pytest.mark.parametrize("n", [1000, 10000, 100000])
    def test_consistency(self, n):
        law = SpeedLaw(gamma=0.4, L=2, alpha=0.875)
        alpha, _ = fit_alpha(EmpiricalCdf(sample_speed_law_batch(law, RngStream(16, n), n)), 2)
        assert abs(alpha - 0.875) <= 3 / math.sqrt(n)

    def test_alpha_near_one(self):
        law = SpeedLaw(gamma=1.0, L=2)
        alpha, _ = fit_alpha(EmpiricalCdf(quantile_sample(law, 5000)), 2)
        assert alpha == pytest.approx(1.0, abs=2e-3)

    def test_degenerate_sample(self):
        with pytest.raises(FitError):
            fit_alpha(EmpiricalCdf([0.1] * 20), 0)
        with pytest.raises(FitError):
            fit_alpha(EmpiricalCdf([0.1, 0.2]), 0)

    def test_polynomial_fit_of_uniform_law(self):
        law = SpeedLaw(gamma=1.0, L=0)
        coefficients, sse = fit_polynomial_cdf(EmpiricalCdf(quantile_sample(law, 2000)), 1)
        assert coefficients[0] == pytest.approx(0.5, abs=2e-3)
        assert coefficients[1] == pytest.approx(0.5, abs=2e-3)
        assert sse < 1e-3

    def test_polynomial_fit_needs_samples(self):
        with pytest.raises(FitError):
            fit_polynomial_cdf(EmpiricalCdf([0.1, 0.2]), 3)
