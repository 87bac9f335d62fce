"""
Shared softmax kernel.

Every exponential in the planner goes through these helpers, which shift
by the maximum logit first. Vectors here are short (one entry per action),
so plain floats and the math module beat numpy round-trips.
"""

from __future__ import annotations

import math
from typing import Sequence


def _check_finite(values: Sequence[float]) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"non-finite logit: {v!r}")


def boltzmann_weights(logits: Sequence[float], temperature: float) -> list[float]:
    """Softmax of ``logits / temperature``; sums to 1."""
    if not temperature > 0:
        raise ValueError(f"temperature must be > 0, got {temperature!r}")
    _check_finite(logits)
    top = max(logits)
    exps = [math.exp((x - top) / temperature) for x in logits]
    total = math.fsum(exps)
    return [e / total for e in exps]


def log_sum_exp(values: Sequence[float], temperature: float) -> float:
    """``temperature * log(sum(exp(v / temperature)))``, max-shifted."""
    if not temperature > 0:
        raise ValueError(f"temperature must be > 0, got {temperature!r}")
    top = max(values)
    total = math.fsum(math.exp((v - top) / temperature) for v in values)
    return temperature * math.log(total) + top


def soft_sum_parts(keys: Sequence[float], temperature: float) -> tuple[float, float]:
    """Return ``(M, E)`` with M = max(keys), E = sum(exp((k - M) / temperature))."""
    top = max(keys)
    return top, math.fsum(math.exp((k - top) / temperature) for k in keys)


def entropy(probs: Sequence[float]) -> float:
    """Shannon entropy in nats; zero-probability entries contribute nothing."""
    return -math.fsum(p * math.log(p) for p in probs if p > 0.0)


def exploration_weight(visits: int, epsilon: float) -> float:
    """Uniform mixing weight min(1, epsilon / log(e + N))."""
    return min(1.0, epsilon / math.log(math.e + visits))


def mix_uniform(rho: Sequence[float], lam: float) -> list[float]:
    """(1 - lam) * rho + lam / |A|."""
    share = lam / len(rho)
    keep = 1.0 - lam
    return [keep * p + share for p in rho]


def search_distribution(
    values: Sequence[float],
    sign: int,
    temperature: float,
    epsilon: float,
    visits: int,
) -> list[float]:
    """Boltzmann search policy over ``sign * values``, mixed with uniform by exploration_weight(visits).

    ``sign`` is -1 at minimizer nodes, which moves the mass onto small values.
    """
    logits = values if sign == 1 else [-v for v in values]
    rho = boltzmann_weights(logits, temperature)
    return mix_uniform(rho, exploration_weight(visits, epsilon))
