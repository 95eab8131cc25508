from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freshcache.model import (
    FreshnessKind,
    FreshnessProfile,
    RequestStream,
    build_zipf,
    derive_seed,
    head_mass,
)


def zipf_fractions(n, beta_int):
    """Exact Zipf pmf for integer exponents."""
    w = [Fraction(1, i ** beta_int) for i in range(1, n + 1)]
    total = sum(w)
    return [x / total for x in w]


class TestBuildZipf:
    def test_uniform_pair(self):
        np.testing.assert_array_equal(build_zipf(2, 0).pmf, [0.5, 0.5])

    @pytest.mark.parametrize("n", [2, 3])
    def test_beta_one_matches_exact_fractions(self, n):
        expected = [float(x) for x in zipf_fractions(n, 1)]
        np.testing.assert_allclose(build_zipf(n, 1).pmf, expected, rtol=0, atol=1e-15)

    def test_three_contents_values(self):
        np.testing.assert_allclose(build_zipf(3, 1).pmf, [6 / 11, 3 / 11, 2 / 11], atol=1e-15)

    @pytest.mark.parametrize("n", [0, -3])
    def test_rejects_bad_n(self, n):
        with pytest.raises(ValueError):
            build_zipf(n, 1.0)

    @pytest.mark.parametrize("beta", [float("nan"), float("inf"), -0.5])
    def test_rejects_bad_beta(self, beta):
        with pytest.raises(ValueError):
            build_zipf(10, beta)

    @settings(max_examples=60, deadline=None)
    @given(n=st.integers(1, 5000), beta=st.floats(0, 3, allow_nan=False))
    def test_pmf_invariants(self, n, beta):
        model = build_zipf(n, beta)
        pmf = model.pmf
        assert abs(pmf.sum() - 1.0) <= 1e-12
        assert np.all(np.diff(pmf) <= 0)
        i = np.arange(1, n + 1, dtype=float)
        np.testing.assert_allclose(pmf * i ** beta, pmf[0], rtol=1e-12)
        assert model.cdf[-1] == 1.0


class TestHeadMass:
    def test_full_mass(self):
        assert head_mass(build_zipf(50, 0.7), 50) == 1.0

    def test_first_of_three(self):
        assert head_mass(build_zipf(3, 1), 1) == pytest.approx(6 / 11, abs=1e-15)

    def test_order_of_partial_sum(self):
        # direct summation against the (m/n)^(1-beta) growth order
        n, m, beta = 10_000, 100, 0.5
        mass = head_mass(build_zipf(n, beta), m)
        ratio = mass / (m / n) ** (1 - beta)
        assert 0.5 <= ratio <= 2

    def test_rejects_m_above_n(self):
        with pytest.raises(ValueError):
            head_mass(build_zipf(5, 1), 6)

    def test_monotone(self):
        model = build_zipf(200, 1.3)
        masses = [head_mass(model, m) for m in range(1, 201)]
        assert all(b >= a for a, b in zip(masses, masses[1:]))
        assert masses[-1] == 1.0


class TestFreshnessProfile:
    def test_uniform(self):
        prof = FreshnessProfile.uniform(5, 7)
        assert prof.kind is FreshnessKind.UNIFORM
        assert list(prof.values) == [7] * 5

    def test_linear_is_one_plus_index(self):
        prof = FreshnessProfile.linear(4)
        assert [prof.F(i) for i in range(1, 5)] == [2, 3, 4, 5]

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            FreshnessProfile.uniform(3, 0)
        with pytest.raises(ValueError):
            FreshnessProfile.explicit([1, 0, 2])

    def test_immutable(self):
        prof = FreshnessProfile.uniform(3, 2)
        with pytest.raises(ValueError):
            prof.values[0] = 5


class TestRequestStream:
    def test_single_content(self):
        stream = RequestStream(build_zipf(1, 0.8), seed=3)
        assert {stream.sample() for _ in range(100)} == {1}

    def test_uniform_pair_frequency(self):
        draws = RequestStream(build_zipf(2, 0), seed=11).sample_many(1_000_000)
        assert 0.498 <= np.mean(draws == 1) <= 0.502

    def test_same_seed_same_draws(self):
        model = build_zipf(100, 0.9)
        a = RequestStream(model, 5)
        b = RequestStream(model, 5)
        assert [a.sample() for _ in range(1000)] == [b.sample() for _ in range(1000)]

    def test_single_and_block_reads_agree(self):
        model = build_zipf(100, 0.9)
        a = RequestStream(model, 5)
        b = RequestStream(model, 5)
        singles = [a.sample() for _ in range(500)]
        block = list(b.sample_many(200)) + list(b.sample_many(300))
        assert singles == block
        assert a.slot == b.slot == 500

    def test_different_seeds_differ(self):
        model = build_zipf(100, 0.9)
        a = RequestStream(model, 1).sample_many(100)
        b = RequestStream(model, 2).sample_many(100)
        assert not np.array_equal(a, b)

    def test_sampling_law(self):
        model = build_zipf(20, 0.8)
        N = 1_000_000
        draws = RequestStream(model, 99).sample_many(N)
        freq = np.bincount(draws, minlength=21)[1:] / N
        assert np.all(np.abs(freq - model.pmf) <= 4 * np.sqrt(model.pmf / N))

    def test_indices_in_range(self):
        draws = RequestStream(build_zipf(7, 2.0), 4).sample_many(10_000)
        assert draws.min() >= 1 and draws.max() <= 7


def test_derived_seeds_distinct():
    seeds = {derive_seed(42, r) for r in range(1000)}
    assert len(seeds) == 1000
    assert derive_seed(42, 3) == derive_seed(42, 3)
