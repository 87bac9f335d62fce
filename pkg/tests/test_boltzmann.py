from __future__ import annotations

import math

import hypothesis.strategies as st
import pytest
from hypothesis import given

from treesearch.boltzmann import (
    boltzmann_weights, entropy, exploration_weight, log_sum_exp, mix_uniform,
    search_distribution, soft_sum_parts,
)

finite = st.floats(min_value=-50.0, max_value=50.0, allow_nan=False, allow_infinity=False)
logit_vectors = st.lists(finite, min_size=1, max_size=12)


class TestBoltzmannWeights:

    @given(logit_vectors, st.floats(min_value=0.05, max_value=20.0))
    def test_sums_to_one(self, logits, temperature):
        w = boltzmann_weights(logits, temperature)
        assert math.fsum(w) == pytest.approx(1.0, abs=1e-12)
        assert all(p >= 0 for p in w)

    @given(logit_vectors, finite)
    def test_shift_invariant(self, logits, shift):
        a = boltzmann_weights(logits, 1.0)
        b = boltzmann_weights([x + shift for x in logits], 1.0)
        assert a == pytest.approx(b, abs=1e-9)

    def test_huge_logits_do_not_overflow(self):
        w = boltzmann_weights([1000.0, 1000.0, 0.0], 0.01)
        assert w[0] == pytest.approx(0.5)
        assert w[2] == 0.0

    @pytest.mark.parametrize("temperature", [0.0, -1.0])
    def test_rejects_non_positive_temperature(self, temperature):
        with pytest.raises(ValueError):
            boltzmann_weights([0.0, 1.0], temperature)

    def test_rejects_non_finite_logit(self):
        with pytest.raises(ValueError):
            boltzmann_weights([0.0, math.inf], 1.0)


class TestSoftValues:

    def test_log_sum_exp_of_two_zeros(self):
        assert log_sum_exp([0.0, 0.0], 1.0) == pytest.approx(math.log(2.0))

    def test_log_sum_exp_large_values(self):
        assert log_sum_exp([1000.0, 1000.0], 1.0) == pytest.approx(1000.0 + math.log(2.0))

    @given(logit_vectors, st.floats(min_value=0.05, max_value=20.0))
    def test_log_sum_exp_bounds(self, values, temperature):
        v = log_sum_exp(values, temperature)
        assert max(values) - 1e-9 <= v <= max(values) + temperature * math.log(len(values)) + 1e-9

    @given(logit_vectors)
    def test_soft_sum_parts_rebuild_log_sum_exp(self, keys):
        m, e = soft_sum_parts(keys, 2.0)
        assert m == max(keys)
        assert e >= 1.0
        assert 2.0 * math.log(e) + m == pytest.approx(log_sum_exp(keys, 2.0), abs=1e-9)


class TestExploration:

    def test_entropy_of_uniform(self):
        assert entropy([0.25] * 4) == pytest.approx(math.log(4))

    def test_entropy_ignores_zeros(self):
        assert entropy([1.0, 0.0, 0.0]) == 0.0

    def test_weight_is_one_at_first_visit(self):
        assert exploration_weight(0, 1.0) == pytest.approx(1.0)

    def test_weight_decays(self):
        assert exploration_weight(1000, 1.0) == pytest.approx(1.0 / math.log(math.e + 1000))
        assert exploration_weight(1000, 1.0) < exploration_weight(10, 1.0)

    def test_weight_is_capped(self):
        assert exploration_weight(5, 10.0) == 1.0

    def test_mix_uniform(self):
        assert mix_uniform([1.0, 0.0], 0.5) == pytest.approx([0.75, 0.25])

    def test_minimizer_prefers_small_values(self):
        probs = search_distribution([0.0, 5.0], -1, 1.0, 1e-6, 10_000)
        assert probs[0] > 0.99

    def test_maximizer_prefers_large_values(self):
        probs = search_distribution([0.0, 5.0], 1, 1.0, 1e-6, 10_000)
        assert probs[1] > 0.99
