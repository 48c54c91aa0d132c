import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cogm2m.detectors import LocalDecision
from cogm2m.fusion import FusionRule, fuse_hard, fused_probability
from cogm2m.seeds import spawn_rng

RULE = FusionRule(k=5, n=10)


def decisions(flags):
    return [LocalDecision(occupied=f, statistic=float(f), sensor_id=f"s{i}")
            for i, f in enumerate(flags)]


def binomial_tail(k, n, p):
    """Independent oracle for the fused probability."""
    return sum(math.comb(n, j) * p ** j * (1 - p) ** (n - j)
               for j in range(k, n + 1))


class TestFuseHard:
    def test_unanimous_occupied(self):
        out = fuse_hard(decisions([True] * 10), RULE)
        assert out.occupied
        assert out.statistic == 10.0

    def test_just_below_k_vacant(self):
        out = fuse_hard(decisions([True] * 4 + [False] * 6), RULE)
        assert not out.occupied
        assert out.statistic == 4.0

    def test_exactly_k_occupied(self):
        out = fuse_hard(decisions([True] * 5 + [False] * 5), RULE)
        assert out.occupied

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            fuse_hard(decisions([True] * 9), RULE)

    def test_monte_carlo_matches_binomial_tail(self):
        # i.i.d. locals at Pd = 0.6 under the 5-of-10 rule
        expected = binomial_tail(5, 10, 0.6)
        assert expected == pytest.approx(0.8338, abs=5e-4)
        rng = spawn_rng(1, "fusion-mc")
        trials = 100_000
        votes = (rng.random((trials, 10)) < 0.6).sum(axis=1)
        fused = np.mean(votes >= 5)
        assert fused == pytest.approx(expected, abs=0.01)


class TestFusedProbability:
    def test_zero_local(self):
        assert fused_probability(0.0, RULE) == 0.0

    def test_certain_local(self):
        assert fused_probability(1.0, RULE) == 1.0

    def test_exact_half(self):
        assert fused_probability(0.5, RULE) == 638 / 1024

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            fused_probability(1.5, RULE)
        with pytest.raises(ValueError):
            fused_probability(-0.1, RULE)

    @given(st.floats(min_value=0.0, max_value=1.0),
           st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=50, deadline=None)
    def test_monotone_in_p_local(self, a, b):
        lo, hi = sorted((a, b))
        assert fused_probability(lo, RULE) <= fused_probability(hi, RULE) + 1e-12

    @given(st.integers(min_value=1, max_value=10),
           st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=50, deadline=None)
    def test_monotone_in_k(self, k, p):
        if k < 10:
            softer = fused_probability(p, FusionRule(k=k, n=10))
            stricter = fused_probability(p, FusionRule(k=k + 1, n=10))
            assert stricter <= softer + 1e-12

    @given(st.integers(min_value=1, max_value=12), st.integers(min_value=1, max_value=12),
           st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=60, deadline=None)
    def test_matches_oracle(self, k, n, p):
        if k <= n:
            rule = FusionRule(k=k, n=n)
            assert fused_probability(p, rule) == pytest.approx(
                binomial_tail(k, n, p), abs=1e-12)


class TestFusionRule:
    def test_rejects_bad_rules(self):
        with pytest.raises(ValueError):
            FusionRule(k=0, n=10)
        with pytest.raises(ValueError):
            FusionRule(k=11, n=10)
