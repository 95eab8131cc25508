import math
import warnings
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest

from freshcache.coupon import (
    EnumerationTooLarge,
    WaitingTimeSample,
    approximation1_error,
    characteristic_time_tc,
    coefficient_of_variation,
    convergence_exponent_limit,
    empirical_tail_check,
    exact_expected_waiting_time,
    power_scaled,
    sample_per_content_characteristic_time,
    sample_waiting_time,
    tail_bounds,
    uniform_expected_waiting_time,
    waiting_time_sample,
    zipf_convergence_check,
)
from freshcache.model import build_zipf, make_rng


def dp_expected_waiting_time(p, m, skip=None):
    """Exact E(draws) via the first-step recursion on the collected set.

    ``skip`` marks a coupon that uses up a draw but never counts as collected.
    """
    p = [Fraction(x) for x in p]
    n = len(p)

    @lru_cache(maxsize=None)
    def expect(collected):
        if bin(collected).count("1") == m:
            return Fraction(0)
        stay = sum(p[j] for j in range(n) if collected >> j & 1 or j == skip)
        move = sum(p[j] * expect(collected | 1 << j)
                   for j in range(n) if not collected >> j & 1 and j != skip)
        return (1 + move) / (1 - stay)

    return expect(0)


def zipf_fractions(n, beta_num):
    """Exact Zipf pmf for integer beta."""
    w = [Fraction(1, i ** beta_num) for i in range(1, n + 1)]
    total = sum(w)
    return [x / total for x in w]


class TestExactExpectation:
    @pytest.mark.parametrize("p, m, expected", [
        ([1.0], 1, 1.0),
        ([2 / 3, 1 / 3], 2, 3.5),
        ([1 / 3] * 3, 2, 2.5),
    ])
    def test_examples(self, p, m, expected):
        assert exact_expected_waiting_time(p, m) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("n", range(1, 13))
    def test_matches_uniform_closed_form(self, n):
        model = build_zipf(n, 0.0)
        for m in range(1, n + 1):
            assert abs(exact_expected_waiting_time(model, m)
                       - uniform_expected_waiting_time(n, m)) <= 1e-9

    @pytest.mark.parametrize("n, m", [(4, 2), (5, 5), (6, 3), (7, 4)])
    def test_matches_recursion_oracle(self, n, m):
        exact = float(dp_expected_waiting_time(zipf_fractions(n, 1), m))
        assert exact_expected_waiting_time(build_zipf(n, 1.0), m) == pytest.approx(exact, rel=1e-11)

    def test_rejects_large_catalog(self):
        with pytest.raises(EnumerationTooLarge, match="exponential enumeration"):
            exact_expected_waiting_time(build_zipf(21, 1.0), 3)

    def test_increasing_in_m(self):
        model = build_zipf(10, 0.8)
        values = [exact_expected_waiting_time(model, m) for m in range(1, 11)]
        assert all(a < b for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("n, m, expected", [(2, 1, 1.0), (2, 2, 3.0), (3, 2, 2.5)])
    def test_uniform_closed_form(self, n, m, expected):
        assert uniform_expected_waiting_time(n, m) == pytest.approx(expected)


class TestSampling:
    def test_m_one(self):
        s = waiting_time_sample(build_zipf(50, 1.0), 1, 1000, make_rng(1))
        assert np.all(s.samples == 1)
        assert s.cv == 0.0

    def test_two_uniform_mean(self):
        s = waiting_time_sample(build_zipf(2, 0.0), 2, 100_000, make_rng(2))
        assert s.mean == pytest.approx(3.0, abs=0.05)

    @pytest.mark.parametrize("m", [1, 3, 7])
    def test_floor(self, m):
        s = waiting_time_sample(build_zipf(9, 1.1), m, 5000, make_rng(3))
        assert s.samples.min() >= m
        t = waiting_time_sample(build_zipf(9, 1.1), m, 5000, make_rng(3), skip=2)
        assert t.samples.min() >= m

    def test_scalar_samplers(self):
        rng = make_rng(4)
        assert sample_waiting_time(build_zipf(5, 1.0), 1, rng) == 1
        assert sample_per_content_characteristic_time(build_zipf(5, 1.0), 2, 1, rng) >= 2

    def test_deterministic_given_seed(self):
        a = waiting_time_sample(build_zipf(30, 0.9), 5, 2000, make_rng(9)).samples
        b = waiting_time_sample(build_zipf(30, 0.9), 5, 2000, make_rng(9)).samples
        np.testing.assert_array_equal(a, b)

    def test_per_content_two_uniform(self):
        s = waiting_time_sample(build_zipf(2, 0.0), 1, 100_000, make_rng(5), skip=1)
        assert s.mean == pytest.approx(2.0, abs=0.03)

    def test_per_content_rejects_full_catalog(self):
        with pytest.raises(ValueError):
            waiting_time_sample(build_zipf(4, 1.0), 4, 10, make_rng(0), skip=1)

    @pytest.mark.parametrize("n, m", [(5, 3), (8, 2), (12, 6)])
    def test_monte_carlo_matches_exact(self, n, m):
        model = build_zipf(n, 1.2)
        s = waiting_time_sample(model, m, 100_000, make_rng(n * m))
        assert abs(s.mean - exact_expected_waiting_time(model, m)) <= 3 * s.stderr

    def test_per_content_matches_recursion(self):
        n, m, i = 6, 3, 1
        exact = float(dp_expected_waiting_time(zipf_fractions(n, 1), m, skip=i - 1))
        s = waiting_time_sample(build_zipf(n, 1.0), m, 100_000, make_rng(6), skip=i)
        assert abs(s.mean - exact) <= 3 * s.stderr

    def test_sample_statistics(self):
        s = WaitingTimeSample(2, np.array([2, 4, 6]))
        assert s.mean == 4 and s.std == 2 and s.cv == 0.5


class TestCharacteristicTime:
    def test_exact_examples(self):
        assert characteristic_time_tc(build_zipf(3, 0.0), 1, exact=True) == pytest.approx(1.5)
        assert characteristic_time_tc(build_zipf(2, 0.0), 1, exact=True) == pytest.approx(2.0)

    @pytest.mark.parametrize("n, m", [(6, 2), (12, 5)])
    def test_monte_carlo_agrees(self, n, m):
        model = build_zipf(n, 0.9)
        exact = characteristic_time_tc(model, m, exact=True)
        s = waiting_time_sample(model, m + 1, 100_000, make_rng(m))
        assert abs(s.mean - 1 - exact) <= 3 * s.stderr

    def test_rejects_full_cache(self):
        with pytest.raises(ValueError):
            characteristic_time_tc(build_zipf(4, 1.0), 4, exact=True)

    def test_identity_exact(self):
        # 1 + sum_i E(T_c(i)) p_i = E(T_{m+1}) on exact values
        n, m = 5, 2
        p = zipf_fractions(n, 1)
        lhs = 1 + sum(dp_expected_waiting_time(p, m, skip=i) * p[i] for i in range(n))
        assert lhs == dp_expected_waiting_time(p, m + 1)

    def test_uniform_approximation_error_small(self):
        mu = approximation1_error(build_zipf(50, 0.0), 5, 7, 50_000, make_rng(11))
        assert mu < 0.01


    def test_error_grows_with_beta_for_tail_content(self):
        n, m = 1000, 100
        mu = [approximation1_error(build_zipf(n, beta), m, n, 5000, make_rng(21))
              for beta in (0.5, 1.5)]
        assert mu[0] < mu[1]


class TestVariation:
    def test_cv_shrinks_with_n(self):
        values = [coefficient_of_variation(build_zipf(n, 0.5), power_scaled(n, 0.5), 1,
                                           5_000, make_rng(n)) for n in (100, 1000, 10_000)]
        assert values[0] > values[1] > values[2]

    def test_cv_needs_two_samples(self):
        with pytest.raises(ValueError):
            coefficient_of_variation(build_zipf(5, 1.0), 2, 1, 1, make_rng(0))


class TestTails:
    def test_lower_arithmetic(self):
        assert tail_bounds(100, 8, 0.5).lower_bound == pytest.approx(math.exp(-1))

    def test_upper_arithmetic(self):
        assert tail_bounds(100, 4, 1.0).upper_bound == pytest.approx(0.006738, abs=1e-6)

    def test_small_delta(self):
        r = tail_bounds(100, 4, 1e-12)
        assert r.lower_bound == pytest.approx(1) and r.upper_bound == pytest.approx(1)

    @pytest.mark.parametrize("args", [(5, 5, 0.5), (5, 2, 0.0)])
    def test_rejects(self, args):
        with pytest.raises(ValueError):
            tail_bounds(*args)

    def test_empirical_within_bounds(self):
        samples = 5000
        r = empirical_tail_check(2000, 40, 0.5, samples, make_rng(12))
        for freq, bound in ((r.lower_freq, r.lower_bound), (r.upper_freq, r.upper_bound)):
            assert freq <= bound + 3 * math.sqrt(bound / samples)
        assert r.mean == pytest.approx(uniform_expected_waiting_time(2000, 40))


class TestConvergence:
    def test_limit(self):
        assert convergence_exponent_limit(0.5) == pytest.approx(1 / 3)

    def test_uniform_trend(self):
        f = zipf_convergence_check(0.0, [100, 1000, 10_000], 0.3, 5000, make_rng(13))
        assert np.all(np.diff(f) >= -0.01) and f[-1] > 0.9

    def test_m_one_exact(self):
        f = zipf_convergence_check(0.5, [10, 100], 0.0, 500, make_rng(0))
        np.testing.assert_array_equal(f, [1.0, 1.0])

    def test_rejects_exponent_outside_regime(self):
        with pytest.raises(ValueError):
            zipf_convergence_check(0.5, [100], 0.4, 10, make_rng(0))

    def test_warns_when_not_strict(self):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            zipf_convergence_check(0.5, [100], 0.4, 10, make_rng(0), strict=False)
        assert caught

    @pytest.mark.parametrize("beta", [-0.1, 1.0])
    def test_rejects_beta(self, beta):
        with pytest.raises(ValueError):
            zipf_convergence_check(beta, [100], 0.1, 10, make_rng(0))

    @pytest.mark.parametrize("n, e, expected", [(100_000, 0.2, 10), (100, 0.5, 10), (1000, 0.5, 32)])
    def test_power_scaled(self, n, e, expected):
        assert power_scaled(n, e) == expected
