"""Special functions and quadrature kernels against independent oracles.

Frozen reference values were computed with mpmath at 40 digits (erf/erfc,
root solves); combinatorial values use exact integer arithmetic.
"""

import math

import numpy as np
import pytest

from bfdr import numkernel as nk

from oracles import gamma_upper_quantile_oracle, bisect_quantile

SQRT_2PI = math.sqrt(2.0 * math.pi)

# mpmath (40 digits): exp(-x^2/2)/sqrt(2 pi) at 1.644854
PHI_1_644854 = 0.10313557709030024
# mpmath: erfc(-0.644854/sqrt(2))/2
NCDF_0_644854 = 0.7404890980450159


class TestStdNormalPdf:
    def test_at_zero(self):
        assert nk.std_normal_pdf(0.0) == pytest.approx(1.0 / SQRT_2PI, rel=1e-15)

    def test_symmetry(self):
        xs = np.linspace(0.0, 6.0, 31)
        np.testing.assert_allclose(nk.std_normal_pdf(xs), nk.std_normal_pdf(-xs), rtol=1e-15)

    def test_high_precision_point(self):
        assert nk.std_normal_pdf(1.644854) == pytest.approx(PHI_1_644854, rel=1e-13)


class TestStdNormalCdf:
    def test_at_zero(self):
        assert nk.std_normal_cdf(0.0) == 0.5

    def test_upper_tail(self):
        assert nk.std_normal_cdf(8.0) >= 1.0 - 1e-14

    def test_high_precision_point(self):
        assert nk.std_normal_cdf(0.644854) == pytest.approx(NCDF_0_644854, abs=1e-14)

    def test_complement_sums_to_one(self):
        for x in np.linspace(-6.0, 6.0, 25):
            assert nk.std_normal_cdf(x) + nk.std_normal_cdf(-x) == pytest.approx(1.0, abs=1e-14)

    def test_derivative_matches_pdf(self):
        # |(Phi(x+h)-Phi(x-h))/2h - phi(x)| <= 1e-6 on [-5, 5]
        h = 1e-5
        xs = np.linspace(-5.0, 5.0, 101)
        fd = (nk.std_normal_cdf(xs + h) - nk.std_normal_cdf(xs - h)) / (2 * h)
        assert np.max(np.abs(fd - nk.std_normal_pdf(xs))) <= 1e-6


class TestStdNormalQuantile:
    def test_median(self):
        assert nk.std_normal_quantile(0.5) == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.parametrize("p", [0.95, 0.975])
    def test_against_bisection_oracle(self, p):
        ref = bisect_quantile(nk.std_normal_cdf, p, -10.0, 10.0)
        assert nk.std_normal_quantile(p) == pytest.approx(ref, abs=1e-10)

    def test_known_points(self):
        assert nk.std_normal_quantile(0.95) == pytest.approx(1.6448536269514722, rel=1e-12)
        assert nk.std_normal_quantile(0.975) == pytest.approx(1.959963984540054, rel=1e-12)

    def test_round_trip(self):
        ps = [1e-6, 1e-4, 0.01, 0.2, 0.5, 0.8, 0.99, 1 - 1e-4, 1 - 1e-6]
        for p in ps:
            assert abs(nk.std_normal_cdf(nk.std_normal_quantile(p)) - p) <= 1e-12

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.2, 1.3, float("nan")])
    def test_rejects_bad_levels(self, p):
        with pytest.raises(nk.DomainError):
            nk.std_normal_quantile(p)


class TestGammaUpperQuantile:
    def test_exponential_case(self):
        assert nk.gamma_upper_quantile(1.0, 1.0, 0.05) == pytest.approx(
            -math.log(0.05), rel=1e-12
        )

    def test_rate_scaling(self):
        assert nk.gamma_upper_quantile(1.0, 2.0, 0.05) == pytest.approx(
            -math.log(0.05) / 2.0, rel=1e-12
        )

    def test_against_series_cf_oracle(self):
        ref = gamma_upper_quantile_oracle(10.0, 10.0, 0.05)
        assert nk.gamma_upper_quantile(10.0, 10.0, 0.05) == pytest.approx(ref, abs=1e-10)

    @pytest.mark.parametrize(
        "shape,rate,alpha", [(0.0, 1.0, 0.5), (1.0, -1.0, 0.5), (1.0, 1.0, 0.0), (1.0, 1.0, 1.5)]
    )
    def test_rejects_bad_parameters(self, shape, rate, alpha):
        with pytest.raises(nk.DomainError):
            nk.gamma_upper_quantile(shape, rate, alpha)


class TestLogBinomial:
    def test_two_choose_one(self):
        assert nk.log_binomial(2, 1) == pytest.approx(math.log(2.0), abs=1e-14)

    @pytest.mark.parametrize("n", [0, 1, 7, 100])
    def test_choose_zero(self, n):
        assert nk.log_binomial(n, 0) == 0.0

    def test_exact_integer_oracle(self):
        assert nk.log_binomial(20, 10) == pytest.approx(
            math.log(math.comb(20, 10)), abs=1e-12
        )

    def test_rejects_bad_arguments(self):
        with pytest.raises(nk.DomainError):
            nk.log_binomial(3, 5)
        with pytest.raises(nk.DomainError):
            nk.log_binomial(-1, 0)


class TestIntegrate:
    def test_linear(self):
        res = nk.integrate(lambda x: x, 0.0, 1.0)
        assert res.value == pytest.approx(0.5, abs=max(1e-8, res.error_bound))

    def test_gaussian_mass(self):
        res = nk.integrate(nk.std_normal_pdf, -np.inf, np.inf)
        assert res.value == pytest.approx(1.0, abs=1e-7)

    def test_gaussian_half_mass(self):
        res = nk.integrate(nk.std_normal_pdf, -np.inf, 0.0)
        assert res.value == pytest.approx(0.5, abs=1e-7)

    def test_reversed_limits_flip_sign(self):
        fwd = nk.integrate(lambda x: x * x, 0.0, 2.0)
        rev = nk.integrate(lambda x: x * x, 2.0, 0.0)
        assert rev.value == pytest.approx(-fwd.value, rel=1e-12)

    def test_non_convergence_carries_best_estimate(self):
        cfg = nk.QuadratureConfig(abs_tol=1e-14, max_refinements=5)
        with pytest.raises(nk.QuadratureNonConvergence) as exc:
            nk.integrate(nk.std_normal_pdf, -30.0, 30.0, cfg)
        best = exc.value.result
        assert not best.converged
        assert best.value == pytest.approx(1.0, abs=0.1)

    @pytest.mark.parametrize(
        "f,a,b,truth",
        [
            (lambda x: x, 0.0, 1.0, 0.5),
            (lambda x: x**3, 0.0, 1.0, 0.25),
            (np.exp, 0.0, 1.0, math.e - 1.0),
            (nk.std_normal_pdf, -8.0, 8.0, 1.0),
            (lambda x: np.sin(x), 0.0, math.pi, 2.0),
        ],
    )
    def test_schemes_agree(self, f, a, b, truth):
        r1 = nk.integrate(f, a, b, nk.QuadratureConfig(abs_tol=1e-9))
        r2 = nk.integrate(f, a, b, nk.QuadratureConfig(abs_tol=1e-9, scheme="adaptive"))
        assert abs(r1.value - r2.value) <= r1.error_bound + r2.error_bound + 1e-9
        assert r1.value == pytest.approx(truth, abs=1e-7)

    def test_adaptive_handles_localized_spike(self):
        # narrow bump on a wide interval
        f = lambda x: np.exp(-((x - 3.0) ** 2) * 200.0)
        res = nk.integrate(f, -50.0, 50.0, nk.QuadratureConfig(abs_tol=1e-10, scheme="adaptive"))
        assert res.value == pytest.approx(math.sqrt(math.pi / 200.0), rel=1e-6)


class TestConfigValidation:
    def test_bad_tolerance(self):
        with pytest.raises(nk.DomainError):
            nk.QuadratureConfig(abs_tol=0.0)

    def test_bad_refinements(self):
        with pytest.raises(nk.DomainError):
            nk.QuadratureConfig(max_refinements=0)

    def test_bad_scheme(self):
        with pytest.raises(nk.DomainError):
            nk.QuadratureConfig(scheme="simpson")

    def test_negative_error_bound_rejected(self):
        with pytest.raises(nk.DomainError):
            nk.IntegralValue(1.0, -1e-3)
