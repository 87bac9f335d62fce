"""
Search policies and backups for UCT, MENTS, BTS and DENTS.

Every value backup comes in two forms: a naive reference that recomputes
the visit-weighted child average and the max (or log-sum-exp) over all
actions, and a fast form that applies the change of one child in O(1) and
keeps the max in an indexed heap. Both walk a trajectory from the leaf
back to the root and must agree to floating-point accuracy.

Two-player games are handled with a sign per node: +1 at maximizer nodes,
-1 at minimizer nodes. Values stay in the maximizer's frame; the sign
flips the softmax logits, turns max into min and negates the node's own
entropy term.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from treesearch.alias import cached_policy_sample, install_policy, refresh_policy
from treesearch.algorithm import Algorithm, AlgorithmConfig, BackupMode, Recommendation
from treesearch.average_returns import ar_bts_policy, ar_dents_entropy_mix, ar_q_update
from treesearch.boltzmann import entropy, log_sum_exp, search_distribution, soft_sum_parts
from treesearch.mdp import Role
from treesearch.node import IndexedMaxHeap, SearchNode, Trajectory

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Opponent transform
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OpponentTransform:
    """Rule set for one agent role; the identity at maximizer nodes."""
    sign: int = 1

    def logits(self, values: Sequence[float]) -> list[float]:
        return list(values) if self.sign == 1 else [-v for v in values]

    def best(self, values: Sequence[float]) -> float:
        return max(values) if self.sign == 1 else min(values)

    def soft_value(self, values: Sequence[float], alpha: float) -> float:
        return self.sign * log_sum_exp(self.logits(values), alpha)

    def own_entropy(self, probs: Sequence[float]) -> float:
        return self.sign * entropy(probs)

    def pick(self, values: Sequence[float]) -> int:
        """Position of the best value; ties go to the lowest position."""
        sign = self.sign
        return max(range(len(values)), key=lambda i: sign * values[i])


_TRANSFORMS = {1: OpponentTransform(1), -1: OpponentTransform(-1)}


def apply_opponent_transform(role: Role | int) -> OpponentTransform:
    return _TRANSFORMS[int(role)]


# ---------------------------------------------------------------------------
# UCT
# ---------------------------------------------------------------------------

def uct_select(node: SearchNode, c: float, rng: np.random.Generator) -> int:
    """Untried actions first (uniformly), then the largest upper confidence bound."""
    unvisited = [i for i, k in enumerate(node.n_sa) if k == 0]
    if unvisited:
        if len(unvisited) == 1:
            return unvisited[0]
        return unvisited[int(rng.integers(len(unvisited)))]
    log_n = math.log(node.n)
    sign, q, n_sa = node.sign, node.q_bar, node.n_sa
    return max(range(len(q)), key=lambda i: sign * q[i] + c * math.sqrt(log_n / n_sa[i]))


def uct_backup(trajectory: Trajectory) -> None:
    """Running-mean returns Q̄ and V̄ along the trajectory; every algorithm keeps these."""
    leaf = trajectory.leaf
    if not trajectory.leaf_is_new:
        leaf.v_bar = ar_q_update(leaf.v_bar, leaf.n - 1, trajectory.leaf_value)
    for node, a, g in zip(trajectory.nodes, trajectory.actions, trajectory.returns()):
        node.q_bar[a] = ar_q_update(node.q_bar[a], node.n_sa[a] - 1, g)
        node.v_bar = ar_q_update(node.v_bar, node.n - 1, g)


# ---------------------------------------------------------------------------
# Boltzmann search policies
# ---------------------------------------------------------------------------

def ments_policy(node: SearchNode, cfg: AlgorithmConfig) -> list[float]:
    return search_distribution(node.q_soft, node.sign, cfg.alpha, cfg.epsilon, node.n)


def bts_policy(node: SearchNode, cfg: AlgorithmConfig) -> list[float]:
    return search_distribution(node.q_hat, node.sign, cfg.temperature(node.n),
                               cfg.epsilon, node.n)


def dents_policy(node: SearchNode, cfg: AlgorithmConfig) -> list[float]:
    beta = cfg.beta(node.n)
    values = [q + beta * h for q, h in zip(node.q_hat, node.h_q)]
    return search_distribution(values, node.sign, cfg.temperature(node.n),
                               cfg.epsilon, node.n)


_POLICIES = {
    Algorithm.MENTS: ments_policy,
    Algorithm.BTS: bts_policy,
    Algorithm.DENTS: dents_policy,
    Algorithm.AR_BTS: ar_bts_policy,
    Algorithm.AR_DENTS: ar_dents_entropy_mix,
    Algorithm.AR_MENTS: ar_dents_entropy_mix,
}


def search_policy(node: SearchNode, cfg: AlgorithmConfig) -> list[float]:
    """Fresh search-policy vector of a Boltzmann algorithm at ``node``."""
    try:
        policy = _POLICIES[cfg.algorithm]
    except KeyError:
        raise ValueError(f"{cfg.algorithm.value} has no Boltzmann search policy") from None
    return policy(node, cfg)


def _refresh(node: SearchNode, cfg: AlgorithmConfig) -> bool:
    return refresh_policy(node, lambda n: search_policy(n, cfg),
                          cfg.rebuild_cadence(node.num_actions), cfg.use_alias)


def refresh_policies(trajectory: Trajectory, cfg: AlgorithmConfig) -> None:
    for node in trajectory.nodes[:-1]:
        _refresh(node, cfg)


# ---------------------------------------------------------------------------
# Bellman backups (BTS, DENTS)
# ---------------------------------------------------------------------------

def bellman_backup_naive(trajectory: Trajectory, cfg: AlgorithmConfig) -> None:
    leaf = trajectory.leaf
    leaf.v_hat_prev = leaf.v_hat
    for t in range(len(trajectory) - 1, -1, -1):
        node = trajectory.nodes[t]
        a = trajectory.actions[t]
        total = math.fsum(c.n * c.v_hat for c in node.children[a].values())
        node.q_hat[a] = node.reward[a] + total / node.n_sa[a]
        node.v_hat_prev = node.v_hat
        node.v_hat = apply_opponent_transform(node.sign).best(node.q_hat)


def bellman_backup_fast(trajectory: Trajectory, cfg: AlgorithmConfig) -> None:
    leaf = trajectory.leaf
    leaf.v_hat_prev = leaf.v_hat
    for t in range(len(trajectory) - 1, -1, -1):
        node = trajectory.nodes[t]
        a = trajectory.actions[t]
        child = trajectory.nodes[t + 1]
        # only this child's term of the visit-weighted sum changed
        s = node.q_hat_sum[a] + child.n * child.v_hat - (child.n - 1) * child.v_hat_prev
        node.q_hat_sum[a] = s
        q = node.reward[a] + s / node.n_sa[a]
        node.q_hat[a] = q
        node.heap.update(a, node.sign * q)
        node.v_hat_prev = node.v_hat
        node.v_hat = node.sign * node.heap.top_key()


# ---------------------------------------------------------------------------
# Soft backups (MENTS)
# ---------------------------------------------------------------------------

def ments_backup_naive(trajectory: Trajectory, cfg: AlgorithmConfig) -> None:
    alpha = cfg.alpha
    leaf = trajectory.leaf
    leaf.v_soft_prev = leaf.v_soft
    for t in range(len(trajectory) - 1, -1, -1):
        node = trajectory.nodes[t]
        a = trajectory.actions[t]
        total = math.fsum(c.n * c.v_soft for c in node.children[a].values())
        node.q_soft[a] = node.reward[a] + total / node.n_sa[a]
        node.v_soft_prev = node.v_soft
        node.v_soft = apply_opponent_transform(node.sign).soft_value(node.q_soft, alpha)


def ments_backup_fast(trajectory: Trajectory, cfg: AlgorithmConfig) -> None:
    """Soft backup keeping M = max key and E = sum exp((key - M) / alpha) per node.

    Keys are sign * Q_sft. When M drops (the old maximum was lowered) E is
    rebuilt from the heap keys, otherwise it is rescaled in O(1).
    """
    alpha = cfg.alpha
    leaf = trajectory.leaf
    leaf.v_soft_prev = leaf.v_soft
    for t in range(len(trajectory) - 1, -1, -1):
        node = trajectory.nodes[t]
        a = trajectory.actions[t]
        child = trajectory.nodes[t + 1]
        sign = node.sign

        s = node.q_soft_sum[a] + child.n * child.v_soft - (child.n - 1) * child.v_soft_prev
        node.q_soft_sum[a] = s
        q = node.reward[a] + s / node.n_sa[a]
        k_old = sign * node.q_soft[a]
        k_new = sign * q
        node.q_soft[a] = q

        heap = node.soft_heap
        m_old = node.soft_max
        heap.update(a, k_new)
        m = heap.top_key()
        if m < m_old:
            e = math.fsum(math.exp((k - m) / alpha) for k in heap.keys)
        else:
            e = ((node.soft_exp - math.exp((k_old - m_old) / alpha)) * math.exp((m_old - m) / alpha)
                 + math.exp((k_new - m) / alpha))
            # the maximum key alone contributes exp(0)
            e = max(e, 1.0)
        node.soft_max = m
        node.soft_exp = e
        node.v_soft_prev = node.v_soft
        node.v_soft = sign * (alpha * math.log(e) + m)


# ---------------------------------------------------------------------------
# Entropy backups (DENTS, AR-DENTS, AR-MENTS)
# ---------------------------------------------------------------------------

def _full_entropy_value(node: SearchNode) -> float:
    transform = apply_opponent_transform(node.sign)
    return transform.own_entropy(node.policy) + math.fsum(
        p * h for p, h in zip(node.policy, node.h_q))


def entropy_backup(trajectory: Trajectory, cfg: AlgorithmConfig, mode: BackupMode | str) -> None:
    """H_Q as a visit-weighted child average, H_V under the node's cached policy.

    The node's policy snapshot is refreshed here (on its rebuild cadence)
    before H_V is computed. In fast mode H_V is recomputed in full only when
    the snapshot changed, otherwise only the updated action's term moves.
    """
    fast = BackupMode(mode) is BackupMode.FAST
    leaf = trajectory.leaf
    leaf.h_v_prev = leaf.h_v
    for t in range(len(trajectory) - 1, -1, -1):
        node = trajectory.nodes[t]
        a = trajectory.actions[t]
        child = trajectory.nodes[t + 1]
        h_q_old = node.h_q[a]
        if fast:
            s = node.h_q_sum[a] + child.n * child.h_v - (child.n - 1) * child.h_v_prev
            node.h_q_sum[a] = s
            node.h_q[a] = s / node.n_sa[a]
        else:
            total = math.fsum(c.n * c.h_v for c in node.children[a].values())
            node.h_q[a] = total / node.n_sa[a]

        _refresh(node, cfg)
        node.h_v_prev = node.h_v
        if fast and not node.policy_fresh:
            node.h_v += node.policy[a] * (node.h_q[a] - h_q_old)
        else:
            node.h_v = _full_entropy_value(node)
        node.policy_fresh = False


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------

def prepare_node(node: SearchNode, cfg: AlgorithmConfig) -> None:
    """Set up the per-algorithm state of a freshly created non-terminal node."""
    if node.terminal:
        return
    algo = cfg.algorithm
    sign = node.sign
    fast = cfg.backup is BackupMode.FAST
    if algo.uses_bellman and fast:
        node.heap = IndexedMaxHeap([sign * q for q in node.q_hat])
    if algo.uses_soft:
        keys = [sign * q for q in node.q_soft]
        node.soft_max, node.soft_exp = soft_sum_parts(keys, cfg.alpha)
        if fast:
            node.soft_heap = IndexedMaxHeap(keys)
    if algo.is_boltzmann:
        install_policy(node, search_policy(node, cfg), cfg.use_alias)
        node.policy_fresh = False
    if algo.uses_entropy:
        node.h_v = apply_opponent_transform(sign).own_entropy(node.policy)
        node.h_v_prev = node.h_v


def backup(trajectory: Trajectory, cfg: AlgorithmConfig) -> None:
    """Run every backup the configured algorithm needs, leaf to root."""
    algo = cfg.algorithm
    fast = cfg.backup is BackupMode.FAST
    uct_backup(trajectory)
    if algo.uses_bellman:
        (bellman_backup_fast if fast else bellman_backup_naive)(trajectory, cfg)
    elif algo.uses_soft:
        (ments_backup_fast if fast else ments_backup_naive)(trajectory, cfg)
    if algo.uses_entropy:
        entropy_backup(trajectory, cfg, cfg.backup)
    elif algo.is_boltzmann:
        refresh_policies(trajectory, cfg)


def select_action(node: SearchNode, cfg: AlgorithmConfig, rng: np.random.Generator) -> int:
    if cfg.algorithm is Algorithm.UCT:
        return uct_select(node, cfg.bias(node.v_bar), rng)
    return cached_policy_sample(node, lambda n: search_policy(n, cfg), rng,
                                cfg.rebuild_cadence(node.num_actions), cfg.use_alias)


# ---------------------------------------------------------------------------
# Recommendation
# ---------------------------------------------------------------------------

def recommendation_table(node: SearchNode, cfg: AlgorithmConfig) -> list[float]:
    algo = cfg.algorithm
    if algo is Algorithm.MENTS:
        return node.q_soft
    if algo.uses_bellman:
        return node.q_hat
    return node.q_bar


def recommend(node: SearchNode, cfg: AlgorithmConfig) -> int:
    """Recommended action position at ``node``; lowest position wins ties."""
    if node.terminal:
        raise ValueError(f"no action to recommend at terminal node {node!r}")
    if cfg.recommendation is Recommendation.MOST_VISITED:
        return OpponentTransform(1).pick(node.n_sa)
    return apply_opponent_transform(node.sign).pick(recommendation_table(node, cfg))
