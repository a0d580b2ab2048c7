"""Tests for special functions, quadrature and the MC layer.

Derived expected values are frozen from independent oracles implemented in
this file (composite Simpson on the density, bisection, defining-integral
evaluation), never from the code paths under test.
"""

import math

import numpy as np
import pytest

from gaussfrac.errors import DomainError, NonConvergenceError
from gaussfrac.numerics import (
    Estimate,
    QuadratureSpec,
    RngStream,
    gamma_function,
    integrate_1d,
    mc_mean,
    normal_cdf,
    normal_quantile,
    orthant_prob,
)


def simpson_normal_cdf(a: float, n: int = 40001) -> float:
    """Oracle: 0.5 + composite Simpson of the density on [0, a]."""
    xs = np.linspace(0.0, a, n)
    ys = np.exp(-0.5 * xs * xs) / math.sqrt(2.0 * math.pi)
    h = xs[1] - xs[0]
    weights = np.ones(n)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return 0.5 + h / 3.0 * float(np.dot(weights, ys))


class TestNormalCdf:
    def test_symmetry_at_zero(self):
        assert normal_cdf(0.0) == 0.5

    def test_far_tail(self):
        assert abs(normal_cdf(40.0) - 1.0) <= 1e-15

    def test_against_simpson_oracle(self):
        oracle = simpson_normal_cdf(1.0)
        assert abs(oracle - 0.8413447460685429) < 1e-12  # oracle sanity
        assert abs(normal_cdf(1.0) - 0.8413447460685429) <= 1e-15

    def test_reflection_and_monotone(self):
        grid = np.linspace(-8.0, 8.0, 81)
        vals = normal_cdf(grid)
        assert np.all(np.diff(vals) >= 0.0)
        assert np.max(np.abs(vals + normal_cdf(-grid) - 1.0)) <= 1e-15

    def test_rejects_nan(self):
        with pytest.raises(DomainError):
            normal_cdf(float("nan"))


class TestNormalQuantile:
    def test_center(self):
        assert normal_quantile(0.5) == 0.0

    def test_round_trip(self):
        for m in [1e-12, 1e-6, 0.3, normal_cdf(1.0), 0.9, 1.0 - 1e-12]:
            a = normal_quantile(m)
            assert abs(normal_cdf(a) - m) <= 1e-12
        assert abs(normal_quantile(normal_cdf(1.0)) - 1.0) <= 1e-10

    def test_against_bisection_oracle(self):
        lo, hi = 0.0, 8.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if normal_cdf(mid) < 0.975:
                lo = mid
            else:
                hi = mid
        oracle = 0.5 * (lo + hi)
        assert abs(oracle - 1.959963984540054) < 1e-10
        assert abs(normal_quantile(0.975) - 1.959963984540054) <= 1e-12

    @pytest.mark.parametrize("m", [0.0, 1.0, -0.1, 1.1])
    def test_domain(self, m):
        with pytest.raises(DomainError):
            normal_quantile(m)


class TestGamma:
    def test_classical_values(self):
        assert gamma_function(1.0) == 1.0
        assert abs(gamma_function(0.5) - math.sqrt(math.pi)) <= 4e-16

    def test_against_integral_oracle(self):
        spec = QuadratureSpec(scheme="double-exponential", rel_tol=1e-13)
        oracle = integrate_1d(lambda t: t ** (-0.25) * math.exp(-t), (0.0, math.inf), spec)
        assert abs(oracle.value - 1.225416702465178) < 1e-11
        assert abs(gamma_function(0.75) - 1.225416702465178) <= 1e-13 * 1.3

    def test_relative_accuracy_range(self):
        # recurrence consistency Gamma(z+1) = z Gamma(z) across (0, 50]
        for z in np.linspace(0.1, 49.0, 25):
            lhs = gamma_function(z + 1.0)
            rhs = z * gamma_function(z)
            assert abs(lhs - rhs) <= 1e-13 * abs(lhs)

    def test_domain(self):
        with pytest.raises(DomainError):
            gamma_function(0.0)
        with pytest.raises(DomainError):
            gamma_function(-1.5)


class TestOrthantProb:
    def test_independence(self):
        assert abs(orthant_prob(0.0, 0.0) - 0.25) <= 1e-15

    def test_classical_arcsin_value(self):
        # P(X<0, Y>0) with rho=1/2 equals 1/4 - arcsin(1/2)/(2 pi) = 1/6
        assert abs(orthant_prob(0.0, 0.5) - 1.0 / 6.0) <= 1e-12

    @pytest.mark.slow
    def test_against_mc_oracle(self):
        rng = np.random.Generator(np.random.PCG64(20240917))
        n = 10_000_000
        x = rng.standard_normal(n)
        z = rng.standard_normal(n)
        rho = 0.5
        y = rho * x + math.sqrt(1.0 - rho * rho) * z
        hits = np.mean((x < 0.0) & (y > 0.0))
        se = math.sqrt(hits * (1.0 - hits) / n)
        assert abs(orthant_prob(0.0, rho) - hits) <= 4.0 * se

    def test_perfect_correlation_limit(self):
        vals = [orthant_prob(0.0, rho) for rho in [0.9, 0.99, 0.999, 0.9999]]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 5e-3

    @pytest.mark.parametrize("a", [-2.0, 0.0, 2.0])
    def test_nonincreasing_in_rho(self, a):
        rhos = np.arange(-0.9, 0.91, 0.1)
        vals = [orthant_prob(a, r) for r in rhos]
        assert all(u >= v - 1e-13 for u, v in zip(vals, vals[1:]))

    @pytest.mark.parametrize("rho", [1.0, -1.0, 1.5])
    def test_domain(self, rho):
        with pytest.raises(DomainError):
            orthant_prob(0.0, rho)


class TestIntegrate1d:
    def test_endpoint_singular_power(self):
        spec = QuadratureSpec(scheme="double-exponential", rel_tol=1e-11)
        est = integrate_1d(lambda t: t ** -0.5, (0.0, 1.0), spec)
        assert abs(est.value - 2.0) <= 1e-10
        assert est.error <= 1e-9

    def test_exponential_halfline(self):
        spec = QuadratureSpec(scheme="double-exponential", rel_tol=1e-11)
        est = integrate_1d(lambda t: math.exp(-t), (0.0, math.inf), spec)
        assert abs(est.value - 1.0) <= 1e-10

    def test_subordinated_heat_kernel_edge(self):
        # int_0^inf H_t(1) t^{-1.25} dt for N=1 equals 2^{1/2} pi^{-1/2} Gamma(3/4)
        closed = 2.0 ** 0.5 * math.pi ** -0.5 * gamma_function(0.75)
        assert abs(closed - 0.977741) < 1e-6

        def f(t):
            return (4.0 * math.pi * t) ** -0.5 * math.exp(-0.25 / t) * t ** -1.25

        spec = QuadratureSpec(scheme="double-exponential", rel_tol=1e-10, max_evals=500_000)
        est = integrate_1d(f, (0.0, math.inf), spec)
        assert abs(est.value - closed) <= 1e-8 * closed

    @pytest.mark.parametrize("beta", [0.05, 0.1, 0.5, 1.0])
    def test_power_law_family(self, beta):
        spec = QuadratureSpec(scheme="double-exponential", rel_tol=1e-10)
        est = integrate_1d(lambda t, b=beta: t ** (b - 1.0), (0.0, 1.0), spec)
        assert abs(est.value - 1.0 / beta) <= spec.rel_tol * (1.0 / beta) * 10.0

    def test_adaptive_scheme(self):
        spec = QuadratureSpec(rel_tol=1e-10)
        est = integrate_1d(lambda t: math.exp(-t * t), (-math.inf, math.inf), spec)
        assert abs(est.value - math.sqrt(math.pi)) <= 1e-10

    def test_gauss_hermite_scheme(self):
        spec = QuadratureSpec(scheme="gauss-hermite", rel_tol=1e-10)
        est = integrate_1d(lambda x: math.exp(-0.5 * x * x), (-math.inf, math.inf), spec)
        assert abs(est.value - math.sqrt(2.0 * math.pi)) <= 1e-9

    def test_non_convergence_carries_best(self):
        spec = QuadratureSpec(scheme="double-exponential", rel_tol=1e-14, max_evals=40)
        with pytest.raises(NonConvergenceError) as exc:
            integrate_1d(lambda t: t ** -0.5, (0.0, 1.0), spec)
        assert isinstance(exc.value.best, Estimate)
        assert abs(exc.value.best.value - 2.0) < 0.5

    def test_spec_validation(self):
        with pytest.raises(DomainError):
            QuadratureSpec(scheme="simpson")
        with pytest.raises(DomainError):
            QuadratureSpec(rel_tol=0.0)
        with pytest.raises(DomainError):
            QuadratureSpec(max_evals=8)
        with pytest.raises(DomainError):
            QuadratureSpec(split_t=0.0)


class TestMcMean:
    def test_constant_sampler(self):
        est = mc_mean(lambda rng, m: np.full(m, 3.25), 10_000, RngStream(1, 0))
        assert est.value == 3.25
        assert est.error == 0.0

    def test_standard_normal_mean(self):
        est = mc_mean(lambda rng, m: rng.standard_normal(m), 1_000_000, RngStream(2, 0))
        assert abs(est.value) <= 5e-3
        assert abs(est.value) <= 5.0 * est.error

    def test_indicator_matches_cdf(self):
        est = mc_mean(lambda rng, m: (rng.standard_normal(m) < 1.0).astype(float),
                      1_000_000, RngStream(3, 1))
        assert abs(est.value - normal_cdf(1.0)) <= 4.0 * est.error

    @pytest.mark.parametrize("n", [1000, 65536, 200_001])
    def test_bitwise_reproducible_across_workers(self, n):
        runs = [mc_mean(lambda rng, m: rng.standard_normal(m), n, RngStream(7, 5), workers=w)
                for w in (1, 2, 8)]
        assert runs[0].value == runs[1].value == runs[2].value
        assert runs[0].error == runs[1].error == runs[2].error

    def test_domain(self):
        with pytest.raises(DomainError):
            mc_mean(lambda rng, m: np.zeros(m), 1, RngStream(0, 0))
