from __future__ import annotations

import itertools
import math

import pytest

from treesearch.environments import A_LEFT, A_RIGHT, make_random_mdp, make_tictactoe
from treesearch.mdp import (
    InvalidModelError, Role, TabularMdp, delta_gap, minimax_solve, reachable_layers,
    soft_value_iterate, value_iterate,
)


def _two_step_mdp(p_good: float = 0.5) -> TabularMdp:
    # state 0 -> {1, 2}; both 1 and 2 have a single action
    return TabularMdp(
        "two-step", 2, 0,
        actions={0: (0, 1), 1: (0,), 2: (0,)},
        transitions={(0, 0): [(1, p_good), (2, 1.0 - p_good)], (0, 1): [(2, 1.0)],
                     (1, 0): [(1, 1.0)], (2, 0): [(2, 1.0)]},
        rewards={(0, 0): 0.0, (0, 1): 0.4, (1, 0): 1.0, (2, 0): 0.0},
    )


class TestValueIterate:

    def test_chain_optimal_value(self, chain10):
        tables = value_iterate(chain10)
        assert tables.value(1) == pytest.approx(1.0)
        assert tables.q_value(1, A_LEFT) == pytest.approx(0.9)
        assert tables.best_actions(1) == [A_RIGHT]

    def test_modified_chain(self, modified_chain10):
        tables = value_iterate(modified_chain10)
        assert tables.value(1) == pytest.approx(0.9)
        assert tables.q_value(1, A_RIGHT) == pytest.approx(0.8)
        assert tables.best_actions(1) == [A_LEFT]

    def test_expectation_over_successors(self):
        tables = value_iterate(_two_step_mdp(0.5))
        assert tables.q_values(0) == pytest.approx([0.5, 0.4])
        assert tables.value(0) == pytest.approx(0.5)

    def test_value_beyond_horizon_is_zero(self, chain10):
        assert value_iterate(chain10).value(1, t=chain10.horizon) == 0.0

    def test_layers_cover_horizon(self, chain10):
        layers = reachable_layers(chain10)
        assert len(layers) == chain10.horizon + 1
        assert layers[0] == [1]


class TestSoftValueIterate:

    def test_closed_form_on_modified_chain(self, modified_chain10):
        tables = soft_value_iterate(modified_chain10, 1.0)
        expected = math.log(math.exp(0.5) + sum(math.exp(i / 10) for i in range(9)))
        q_right = tables.q_value(1, A_RIGHT)
        assert q_right == pytest.approx(expected, abs=1e-9)
        assert round(q_right, 2) == 2.74

    def test_soft_value_exceeds_max(self, chain10):
        hard = value_iterate(chain10).value(1)
        soft = soft_value_iterate(chain10, 0.5).value(1)
        assert soft > hard

    @pytest.mark.parametrize("alpha", [0.0, -1.0])
    def test_rejects_bad_alpha(self, chain10, alpha):
        with pytest.raises(ValueError):
            soft_value_iterate(chain10, alpha)


class TestMinimax:

    def test_tictactoe_is_a_draw(self):
        game = make_tictactoe()
        tables = minimax_solve(game)
        assert tables.value(0) == 0.0
        assert tables.q_values(0) == [0.0] * 9

    def test_minimizer_takes_min(self):
        game = TabularMdp(
            "tiny-game", 1, 0,
            actions={0: (0, 1)},
            transitions={(0, 0): [(1, 1.0)], (0, 1): [(2, 1.0)]},
            rewards={(0, 0): -1.0, (0, 1): 1.0},
            roles={0: Role.MINIMIZER},
        )
        assert minimax_solve(game).value(0) == -1.0
        assert value_iterate(game).value(0) == 1.0


class TestValidation:

    def test_valid_model_passes(self, stochastic_mdp):
        stochastic_mdp.validate()

    def test_probabilities_must_sum_to_one(self):
        bad = TabularMdp("bad", 1, 0, {0: (0,)}, {(0, 0): [(1, 0.6), (2, 0.6)]}, {(0, 0): 0.0})
        with pytest.raises(InvalidModelError):
            bad.validate()

    def test_negative_probability(self):
        bad = TabularMdp("bad", 1, 0, {0: (0,)}, {(0, 0): [(1, 1.5), (2, -0.5)]}, {(0, 0): 0.0})
        with pytest.raises(InvalidModelError):
            bad.validate()

    def test_horizon_must_be_positive(self):
        bad = TabularMdp("bad", 0, 0, {0: (0,)}, {(0, 0): [(0, 1.0)]}, {(0, 0): 0.0})
        with pytest.raises(InvalidModelError):
            bad.validate()


class TestDeltaGap:

    def test_modified_chain_gap(self, modified_chain10):
        assert delta_gap(value_iterate(modified_chain10)) == pytest.approx(0.1)

    def test_no_gap_is_infinite(self):
        mdp = TabularMdp("flat", 1, 0, {0: (0, 1)}, {(0, 0): [(1, 1.0)], (0, 1): [(1, 1.0)]},
                         {(0, 0): 0.3, (0, 1): 0.3})
        assert delta_gap(value_iterate(mdp)) == math.inf


class TestZeroProbabilitySuccessors:

    def _mdp(self) -> TabularMdp:
        return TabularMdp(
            "zero-branch", 2, 0,
            actions={0: (0, 1), 1: (0,)},
            transitions={(0, 0): [(1, 1.0), (2, 0.0)], (0, 1): [(1, 1.0)], (1, 0): [(1, 1.0)]},
            rewards={(0, 0): 0.5, (0, 1): 0.0, (1, 0): 1.0},
        )

    def test_validates(self):
        self._mdp().validate()

    def test_every_oracle_ignores_the_dead_branch(self):
        mdp = self._mdp()
        assert value_iterate(mdp).value(0) == pytest.approx(1.5)
        assert soft_value_iterate(mdp, 1.0).q_value(0, 0) == pytest.approx(1.5)
        assert minimax_solve(mdp).value(0) == pytest.approx(1.5)
        assert delta_gap(value_iterate(mdp)) == pytest.approx(0.5)


def _all_q(tables):
    for (s, t), qs in tables.q.items():
        for a, q in zip(tables.actions[(s, t)], qs):
            yield (s, a, t), q


class TestSoftHardRelations:

    @pytest.mark.parametrize("alpha", [0.1, 1.0, 10.0])
    def test_soft_q_dominates_hard_q(self, stochastic_mdp, alpha):
        hard = dict(_all_q(value_iterate(stochastic_mdp)))
        soft = dict(_all_q(soft_value_iterate(stochastic_mdp, alpha)))
        assert hard.keys() == soft.keys()
        for key, q in hard.items():
            assert q <= soft[key] + 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_small_alpha_keeps_the_greedy_action(self, seed):
        mdp = make_random_mdp(n_states=6, n_actions=3, horizon=4, n_successors=2, seed=seed)
        hard = value_iterate(mdp)
        gap = delta_gap(hard)
        alpha = 0.9 * gap / (mdp.horizon * math.log(3))
        soft = soft_value_iterate(mdp, alpha)
        for (s, t), qs in hard.q.items():
            best = hard.best_actions(s, t, tol=0.0)
            if len(best) != 1:
                continue
            soft_qs = soft.q[(s, t)]
            acts = soft.actions[(s, t)]
            assert acts[soft_qs.index(max(soft_qs))] == best[0]

    def test_vanishing_alpha_recovers_hard_values(self, stochastic_mdp, deterministic_mdp):
        for mdp in (stochastic_mdp, deterministic_mdp):
            hard = value_iterate(mdp)
            soft = soft_value_iterate(mdp, 1e-9)
            for key, v in hard.v.items():
                assert soft.v[key] == pytest.approx(v, abs=1e-6)

    def test_single_action_soft_equals_hard(self):
        mdp = TabularMdp("one-action", 3, 0, {0: (0,)}, {(0, 0): [(0, 1.0)]}, {(0, 0): 0.25})
        assert soft_value_iterate(mdp, 0.3).value(0) == pytest.approx(value_iterate(mdp).value(0))
        assert value_iterate(mdp).value(0) == pytest.approx(0.75)

    def test_symmetric_arms(self):
        mdp = TabularMdp("two-arm", 1, 0, {0: (0, 1)}, {(0, 0): [(1, 1.0)], (0, 1): [(2, 1.0)]},
                         {(0, 0): 0.0, (0, 1): 0.0})
        assert soft_value_iterate(mdp, 1.0).value(0) == pytest.approx(math.log(2))


class TestDeltaGapBruteForce:

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_pair_scan(self, seed):
        tables = value_iterate(make_random_mdp(n_states=5, n_actions=3, horizon=3, seed=seed))
        expected = math.inf
        for qs in tables.q.values():
            for i, j in itertools.combinations(range(len(qs)), 2):
                d = abs(qs[i] - qs[j])
                if d > 1e-12:
                    expected = min(expected, d)
        assert delta_gap(tables) == expected
