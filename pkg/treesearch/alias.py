"""
Alias-method categorical sampling.

A table is built in O(m) from a weight vector and then sampled in O(1):
draw a column uniformly, then keep it or follow its alias depending on a
single uniform real. Search nodes cache one table and rebuild it on a
fixed visit cadence, so between rebuilds they sample a frozen policy.
"""

from __future__ import annotations

import bisect
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

log = logging.getLogger(__name__)


class InvalidWeightsError(ValueError):
    """Raised when a weight vector cannot define a categorical distribution."""


@dataclass(frozen=True)
class AliasTable:
    thresholds: tuple[float, ...]
    aliases: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.thresholds)

    def probabilities(self) -> list[float]:
        """Exact sampling probability of every category implied by the table."""
        m = self.size
        mass = list(self.thresholds)
        for thr, alias in zip(self.thresholds, self.aliases):
            if thr < 1.0:
                mass[alias] += 1.0 - thr
        return [x / m for x in mass]


def alias_build(weights: Sequence[float]) -> AliasTable:
    """Build a Walker/Vose alias table from nonnegative weights."""
    m = len(weights)
    if m == 0:
        raise InvalidWeightsError("empty weight vector")
    for w in weights:
        if not math.isfinite(w):
            raise InvalidWeightsError(f"non-finite weight: {w!r}")
        if w < 0:
            raise InvalidWeightsError(f"negative weight: {w!r}")
    total = math.fsum(weights)
    if total <= 0:
        raise InvalidWeightsError("all weights are zero")

    scaled = [w * m / total for w in weights]
    aliases = list(range(m))
    smaller = [i for i, p in enumerate(scaled) if p < 1.0]
    larger = [i for i, p in enumerate(scaled) if p >= 1.0]

    while smaller and larger:
        small, large = smaller.pop(), larger.pop()
        aliases[small] = large
        scaled[large] = (scaled[large] - 1.0) + scaled[small]
        if scaled[large] < 1.0:
            smaller.append(large)
        else:
            larger.append(large)

    # leftovers only differ from 1 by rounding
    for i in itertools.chain(smaller, larger):
        scaled[i] = 1.0
        aliases[i] = i

    return AliasTable(thresholds=tuple(scaled), aliases=tuple(aliases))


def alias_sample(table: AliasTable, rng: np.random.Generator) -> int:
    """One index draw plus one uniform real."""
    i = int(rng.integers(table.size))
    if rng.random() < table.thresholds[i]:
        return i
    return table.aliases[i]


def alias_sample_many(table: AliasTable, size: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorised draws: same rule as alias_sample, applied to ``size`` columns at once."""
    thresholds = np.asarray(table.thresholds)
    aliases = np.asarray(table.aliases)
    cols = rng.integers(table.size, size=size)
    keep = rng.random(size) < thresholds[cols]
    return np.where(keep, cols, aliases[cols])


def categorical_sample(probs: Sequence[float], rng: np.random.Generator) -> int:
    """Direct inverse-CDF draw; the reference the alias sampler is checked against."""
    cum = list(itertools.accumulate(probs))
    i = bisect.bisect_right(cum, rng.random() * cum[-1])
    return min(i, len(probs) - 1)


# ---------------------------------------------------------------------------
# Per-node policy cache
# ---------------------------------------------------------------------------

PolicyProvider = Callable[[object], list]


def refresh_policy(node, provider: PolicyProvider, cadence: int, use_alias: bool) -> bool:
    """Rebuild the node's policy snapshot when its visit count hits the cadence.

    A snapshot is rebuilt at most once per visit count. Returns True when a
    rebuild happened.
    """
    if node.policy_visit == node.n or node.n % cadence != 0:
        return False
    install_policy(node, provider(node), use_alias)
    return True


def install_policy(node, probs: list[float], use_alias: bool) -> None:
    node.policy = probs
    node.alias = alias_build(probs) if use_alias else None
    node.policy_visit = node.n
    node.policy_fresh = True


def cached_policy_sample(
    node,
    provider: PolicyProvider,
    rng: np.random.Generator,
    cadence: int,
    use_alias: bool = True,
) -> int:
    """Sample an action index from the node's cached policy, rebuilding it on schedule."""
    refresh_policy(node, provider, cadence, use_alias)
    if node.alias is not None:
        return alias_sample(node.alias, rng)
    return categorical_sample(node.policy, rng)
