"""
Average-return Boltzmann search (AR-BTS, AR-DENTS, AR-MENTS).

These variants skip dynamic-programming backups and build the Boltzmann
policy straight from the running-mean returns Q̄. A constant temperature
makes them converge to the wrong values on chains where each step leaks
probability mass to a worse branch; a temperature that decays with the
node's visit count fixes that.
"""

from __future__ import annotations

import math

from treesearch.algorithm import AlgorithmConfig
from treesearch.boltzmann import boltzmann_weights, search_distribution
from treesearch.node import SearchNode


def ar_q_update(q_bar: float, visits_before: int, ret: float) -> float:
    """Running mean after one more return: Q̄ + (R̄ - Q̄) / (N + 1)."""
    if not math.isfinite(ret):
        raise ValueError(f"non-finite return: {ret!r}")
    return q_bar + (ret - q_bar) / (visits_before + 1)


def ar_bts_policy(node: SearchNode, cfg: AlgorithmConfig) -> list[float]:
    return search_distribution(node.q_bar, node.sign, cfg.temperature(node.n),
                               cfg.epsilon, node.n)


def ar_dents_entropy_mix(node: SearchNode, cfg: AlgorithmConfig) -> list[float]:
    """Softmax of (Q̄ + beta(N) * H_Q) / alpha(N); AR-MENTS is the beta = alpha = const case."""
    beta = cfg.beta(node.n)
    values = [q + beta * h for q, h in zip(node.q_bar, node.h_q)]
    return search_distribution(values, node.sign, cfg.temperature(node.n),
                               cfg.epsilon, node.n)


def ar_fixed_alpha_limit(chain_length: int, alpha: float = 1.0) -> tuple[float, float]:
    """Limit of V̄ at the first chain state of the counterexample MDP under a fixed alpha.

    Each chain state continues with softmax weight sigmoid(v / alpha) and
    absorbs with reward 0 otherwise, so the limit obeys
    v_k = sigmoid(v_{k+1} / alpha) * v_{k+1}, starting from the reward 2 at
    the end of the chain. Returns ``(limit, bound)`` where ``bound`` is
    2 * sigmoid(2 / alpha) ** (chain_length - 1), the value obtained by
    freezing every continuation weight at its largest possible value.
    """
    if chain_length < 2:
        raise ValueError(f"chain_length must be >= 2, got {chain_length!r}")
    v = 2.0
    for _ in range(chain_length - 1):
        p_continue = boltzmann_weights([v, 0.0], alpha)[0]
        v *= p_continue
    bound = 2.0 * boltzmann_weights([2.0, 0.0], alpha)[0] ** (chain_length - 1)
    return v, bound
