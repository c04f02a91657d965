import math

from hypothesis import given, settings, strategies as st
import mpmath
import numpy as np
import pytest
from scipy import stats

from recovery_cure import DomainError, PoissonParam, WeibullParams
from recovery_cure.distributions import (
    weibull_sf,
    poisson_pmf,
    poisson_sample,
    weibull_cdf,
    weibull_log_pdf,
    weibull_pdf,
    weibull_quantile,
    weibull_sample,
)

shapes = st.floats(0.3, 5.0)
scales = st.floats(0.5, 100.0)


def central_diff(fun, t, h):
    return (fun(t + h) - fun(t - h)) / (2 * h)


def five_point(fun, t, h):
    return (-fun(t + 2 * h) + 8 * fun(t + h) - 8 * fun(t - h) + fun(t - 2 * h)) / (12 * h)


@pytest.mark.parametrize("shape,scale", [(0, 1), (1, 0), (-1, 2), (1, float("nan"))])
def test_weibull_params_reject_nonpositive(shape, scale):
    with pytest.raises(DomainError):
        WeibullParams(shape, scale)


def test_poisson_param_allows_zero():
    assert PoissonParam(0).intensity == 0.0
    with pytest.raises(DomainError):
        PoissonParam(-0.1)


class TestWeibullPdf:
    def test_zero_when_shape_above_one(self):
        assert weibull_pdf(0.0, WeibullParams(1.157, 18.762)) == 0.0

    def test_exponential_at_origin(self):
        assert weibull_pdf(0.0, WeibullParams(1.0, 20.0)) == pytest.approx(0.05, rel=1e-15)

    def test_matches_cdf_derivative_at_scale(self):
        p = WeibullParams(1.157, 18.762)
        t = 18.762
        fd = central_diff(lambda x: weibull_cdf(x, p), t, 1e-4 * t)
        assert weibull_pdf(t, p) == pytest.approx(fd, rel=1e-6)

    def test_negative_time_rejected(self):
        with pytest.raises(DomainError):
            weibull_pdf(-1.0, WeibullParams(1.0, 1.0))

    def test_log_pdf_consistent(self):
        p = WeibullParams(1.3, 7.0)
        t = np.linspace(0.1, 30, 50)
        np.testing.assert_allclose(weibull_log_pdf(t, p), np.log(weibull_pdf(t, p)), rtol=1e-12)
        assert weibull_log_pdf(0.0, p) == -np.inf

    @settings(max_examples=40, deadline=None)
    @given(shape=shapes, scale=scales)
    def test_pdf_is_cdf_derivative_on_grid(self, shape, scale):
        p = WeibullParams(shape, scale)
        grid = np.linspace(0, 3 * scale, 101)[1:]
        # step shrinks with the local time scale t / (1 + t * hazard)
        h = 1e-4 * grid / (1 + shape * (grid / scale) ** shape)
        fd_cdf = five_point(lambda x: weibull_cdf(x, p), grid, h)
        # upper tail: difference the survival function to avoid cancellation near F = 1
        fd_sf = -five_point(lambda x: weibull_sf(x, p), grid, h)
        fd = np.where(weibull_cdf(grid, p) < 0.5, fd_cdf, fd_sf)
        pdf = weibull_pdf(grid, p)
        mask = pdf > 1e-250
        np.testing.assert_allclose(pdf[mask], fd[mask], rtol=1e-6)


class TestWeibullCdf:
    def test_origin(self):
        assert weibull_cdf(0.0, WeibullParams(2.3, 4.0)) == 0.0

    @pytest.mark.parametrize("shape", [0.5, 1.0, 1.157, 3.0])
    def test_at_scale(self, shape):
        assert weibull_cdf(18.762, WeibullParams(shape, 18.762)) == pytest.approx(1 - math.exp(-1), rel=1e-14)

    def test_value_range_one_at_24_months(self):
        p = WeibullParams(1.157, 18.762)
        mpmath.mp.dps = 50
        exact = 1 - mpmath.exp(-(mpmath.mpf(24) / mpmath.mpf("18.762")) ** mpmath.mpf("1.157"))
        assert weibull_cdf(24.0, p) == pytest.approx(float(exact), rel=1e-13)
        # survival table oracle: S_Y(24) = 63.65% at theta 0.614 gives F = -ln(S)/theta;
        # both inputs carry rounding of a few 1e-4
        assert weibull_cdf(24.0, p) == pytest.approx(-math.log(0.6365) / 0.614, abs=1e-3)
        assert weibull_cdf(24.0, p) == pytest.approx(0.7360, abs=1e-3)

    # F(1e3 scale) = 1 - exp(-1000**shape) is within 1e-9 of 1 only for shape > ~0.44
    @settings(max_examples=50, deadline=None)
    @given(shape=st.floats(0.5, 5.0), scale=scales)
    def test_monotone_with_limits(self, shape, scale):
        p = WeibullParams(shape, scale)
        grid = np.linspace(0, 10 * scale, 400)
        cdf = weibull_cdf(grid, p)
        assert cdf[0] == 0.0
        assert np.all(np.diff(cdf) >= 0)
        assert abs(weibull_cdf(1e3 * scale, p) - 1.0) < 1e-9


class TestWeibullQuantile:
    def test_zero(self):
        assert weibull_quantile(0.0, WeibullParams(1.3, 5.0)) == 0.0

    @pytest.mark.parametrize("shape", [0.7, 1.157, 2.0])
    def test_at_scale(self, shape):
        q = weibull_quantile(1 - math.exp(-1), WeibullParams(shape, 18.762))
        assert q == pytest.approx(18.762, rel=1e-12)

    def test_exponential_median(self):
        assert weibull_quantile(0.5, WeibullParams(1.0, 10.0)) == pytest.approx(6.93147, abs=1e-5)

    @pytest.mark.parametrize("u", [-0.1, 1.0, 1.5])
    def test_domain(self, u):
        with pytest.raises(DomainError):
            weibull_quantile(u, WeibullParams(1.0, 1.0))

    @settings(max_examples=50, deadline=None)
    @given(shape=shapes, scale=scales)
    def test_round_trip(self, shape, scale):
        p = WeibullParams(shape, scale)
        u = np.arange(1, 100) / 100
        assert np.max(np.abs(weibull_cdf(weibull_quantile(u, p), p) - u)) < 1e-12


class TestPoissonPmf:
    def test_zero_count_printed_value(self):
        assert poisson_pmf(0, PoissonParam(0.871)) == pytest.approx(0.418, abs=1e-3)

    def test_degenerate_intensity(self):
        assert poisson_pmf(0, PoissonParam(0.0)) == 1.0
        assert poisson_pmf(3, 0.0) == 0.0

    def test_unit(self):
        assert poisson_pmf(1, PoissonParam(1.0)) == pytest.approx(math.exp(-1), rel=1e-14)

    @pytest.mark.parametrize("theta", [0.1, 1.0, 5.0, 50.0])
    def test_mass_sums_to_one(self, theta):
        m_star = math.ceil(theta + 12 * math.sqrt(theta) + 30)
        assert poisson_pmf(np.arange(m_star + 1), theta).sum() >= 1 - 1e-10

    def test_large_counts_do_not_overflow(self):
        val = poisson_pmf(10_000, 10_000.0)
        # Stirling: pmf at the mode ~ 1/sqrt(2 pi theta)
        assert val == pytest.approx(1 / math.sqrt(2 * math.pi * 1e4), rel=1e-4)

    @pytest.mark.parametrize("theta", [0.3, 2.5, 40.0])
    def test_against_exact_formula(self, theta):
        m = np.arange(12)
        exact = np.array([theta**k * math.exp(-theta) / math.factorial(k) for k in m])
        np.testing.assert_allclose(poisson_pmf(m, theta), exact, rtol=1e-12)

    def test_rejects_non_integer(self):
        with pytest.raises(DomainError):
            poisson_pmf(1.5, 1.0)


class TestSampling:
    def test_zero_intensity(self):
        rng = np.random.default_rng(5)
        assert poisson_sample(rng, PoissonParam(0.0)) == 0
        assert np.all(poisson_sample(rng, 0.0, size=10) == 0)

    def test_poisson_mean(self):
        draws = poisson_sample(np.random.default_rng(11), PoissonParam(2.0), size=100_000)
        assert abs(draws.mean() - 2.0) < 3 * math.sqrt(2 / 1e5)

    def test_poisson_zero_probability(self):
        draws = poisson_sample(np.random.default_rng(12), PoissonParam(0.614), size=100_000)
        assert abs(np.mean(draws == 0) - math.exp(-0.614)) < 0.01

    def test_poisson_large_intensity_branch(self):
        draws = poisson_sample(np.random.default_rng(13), 80.0, size=100_000)
        assert abs(draws.mean() - 80.0) < 3 * math.sqrt(80 / 1e5)
        assert abs(draws.var() - 80.0) < 2.0

    def test_poisson_deterministic(self):
        a = poisson_sample(np.random.default_rng(3), 1.5, size=50)
        b = poisson_sample(np.random.default_rng(3), 1.5, size=50)
        np.testing.assert_array_equal(a, b)

    def test_weibull_forced_zero_uniform(self):
        class ZeroRng:
            def random(self, size=None):
                return 0.0 if size is None else np.zeros(size)

        assert weibull_sample(ZeroRng(), WeibullParams(1.157, 18.762)) == 0.0

    def test_weibull_ks(self):
        p = WeibullParams(1.157, 18.762)
        draws = weibull_sample(np.random.default_rng(14), p, size=100_000)
        res = stats.kstest(draws, lambda x: weibull_cdf(x, p))
        assert res.statistic < 0.01

    def test_exponential_mean(self):
        draws = weibull_sample(np.random.default_rng(15), WeibullParams(1.0, 10.0), size=100_000)
        assert abs(draws.mean() - 10.0) < 3 * 10 / math.sqrt(1e5)
