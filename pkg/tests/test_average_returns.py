from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given

from treesearch.algorithm import Algorithm, AlgorithmConfig
from treesearch.average_returns import (
    ar_bts_policy, ar_dents_entropy_mix, ar_fixed_alpha_limit, ar_q_update,
)
from treesearch.environments import ArCounterexampleSpec, make_ar_counterexample
from treesearch.node import SearchNode
from treesearch.tree import SearchTree

returns = st.lists(st.floats(min_value=-100, max_value=100, allow_nan=False), min_size=1, max_size=50)


class TestRunningMean:

    @given(returns)
    def test_matches_batch_mean(self, values):
        q = 0.0
        for k, r in enumerate(values):
            q = ar_q_update(q, k, r)
        assert q == pytest.approx(float(np.mean(values)), abs=1e-9)

    def test_first_return_replaces_initial_value(self):
        assert ar_q_update(-200.0, 0, 3.0) == 3.0

    def test_rejects_non_finite_return(self):
        with pytest.raises(ValueError):
            ar_q_update(0.0, 3, math.nan)


class TestPolicies:

    def _node(self) -> SearchNode:
        node = SearchNode(0, 0, 1, (0, 1), [0.0, 0.0], 0.0, 0.0, 50)
        node.q_bar = [1.0, 0.0]
        node.h_q = [0.0, 2.0]
        return node

    def test_ar_bts_uses_average_returns(self):
        cfg = AlgorithmConfig(Algorithm.AR_BTS, alpha=1.0, alpha_schedule="constant", epsilon=1e-9)
        probs = ar_bts_policy(self._node(), cfg)
        assert probs[0] == pytest.approx(math.e / (1 + math.e), abs=1e-6)

    def test_entropy_bonus_shifts_mass(self):
        node = self._node()
        cfg = AlgorithmConfig(Algorithm.AR_MENTS, alpha=1.0, epsilon=1e-9)
        # 1.0 + 0 vs 0.0 + 1.0 * 2.0
        probs = ar_dents_entropy_mix(node, cfg)
        assert probs[1] > probs[0]


class TestFixedAlphaLimit:

    def test_bound_dominates_limit(self):
        limit, bound = ar_fixed_alpha_limit(10, 1.0)
        e = math.exp(2) / (1 + math.exp(2))
        assert bound == pytest.approx(2 * e ** 9)
        assert 0 < limit < bound

    def test_short_chain_limit_is_below_one(self):
        limit, _ = ar_fixed_alpha_limit(6, 1.0)
        assert limit < 1.0

    def test_two_state_chain(self):
        limit, bound = ar_fixed_alpha_limit(2, 1.0)
        assert limit == pytest.approx(bound)

    def test_rejects_short_chain(self):
        with pytest.raises(ValueError):
            ar_fixed_alpha_limit(1)


def _search(alpha_schedule: str, seed: int, trials: int, length: int = 6) -> SearchTree:
    mdp = make_ar_counterexample(ArCounterexampleSpec(length))
    cfg = AlgorithmConfig(Algorithm.AR_BTS, alpha=1.0, alpha_schedule=alpha_schedule)
    return SearchTree(mdp, cfg, np.random.default_rng(seed)).search(trials)


def _full_budget_cell(cell: tuple[str, int]) -> tuple[float, int]:
    """Chain-entry average return and recommended root action after 5 * 10**5 trials on D=10."""
    alpha_schedule, seed = cell
    tree = _search(alpha_schedule, seed, 500_000, length=10)
    return tree.node_at([(0, 2)]).v_bar, tree.recommend()


class TestCounterexample:

    def test_fixed_alpha_prefers_the_safe_action(self):
        for seed in range(3):
            tree = _search("constant", seed, 5000)
            assert tree.recommend() == 1

    def test_decaying_alpha_values_the_chain_higher(self):
        fixed = _search("constant", 0, 20_000).node_at([(0, 2)]).v_bar
        decaying = _search("inverse_sqrt", 0, 20_000).node_at([(0, 2)]).v_bar
        assert decaying > fixed

    @pytest.mark.slow
    def test_fixed_alpha_converges_to_the_recursion_limit(self):
        _, bound = ar_fixed_alpha_limit(10, 1.0)
        with ProcessPoolExecutor() as executor:
            cells = list(executor.map(_full_budget_cell, [("constant", seed) for seed in range(20)]))
        for chain_value, _ in cells:
            assert chain_value <= bound + 0.05
        assert sum(action == 1 for _, action in cells) >= 18

    @pytest.mark.slow
    def test_decaying_alpha_recommends_optimal(self):
        with ProcessPoolExecutor() as executor:
            cells = list(executor.map(_full_budget_cell, [("inverse_sqrt", seed) for seed in range(20)]))
        assert sum(action == 0 for _, action in cells) >= 18
