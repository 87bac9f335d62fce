"""
Finite-horizon MDP model and exact dynamic-programming oracles.

An MdpModel hands out opaque integer states. Time is explicit: decisions are
taken at t = 0..H-1 and V(s, H) = 0. The oracles enumerate every (state, t)
pair reachable from the initial state and run backward induction, so they
stay exact on anything small enough to enumerate.
"""

from __future__ import annotations

import bisect
import itertools
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np

from treesearch.boltzmann import log_sum_exp

log = logging.getLogger(__name__)

PROBABILITY_TOLERANCE = 1e-12


class InvalidModelError(ValueError):
    """Raised when an MDP breaks a structural invariant."""


class Role(IntEnum):
    """Who picks the action at a state; the value doubles as the sign of the objective."""
    MAXIMIZER = 1
    MINIMIZER = -1


class Flavor(str, Enum):
    STANDARD = "standard"
    SOFT = "soft"
    MINIMAX = "minimax"


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------

class MdpModel(ABC):
    """Finite-horizon MDP: states, actions, transition distribution, reward, horizon."""

    name: str = "mdp"
    two_player: bool = False
    horizon: int

    @abstractmethod
    def initial_state(self) -> int:
        ...

    @abstractmethod
    def actions(self, state: int) -> tuple[int, ...]:
        """Action labels offered at ``state``; empty for terminal states."""

    @abstractmethod
    def transitions(self, state: int, action: int) -> list[tuple[int, float]]:
        """Successor distribution as (state, probability) pairs."""

    @abstractmethod
    def reward(self, state: int, action: int) -> float:
        ...

    def is_terminal(self, state: int) -> bool:
        return not self.actions(state)

    def role(self, state: int) -> Role:
        return Role.MAXIMIZER

    def sample_next(self, state: int, action: int, rng: np.random.Generator) -> int:
        succ = self.transitions(state, action)
        if len(succ) == 1:
            return succ[0][0]
        x = rng.random()
        acc = 0.0
        for s, p in succ:
            acc += p
            if x < acc:
                return s
        return succ[-1][0]

    def validate(self) -> None:
        """Check every reachable transition row; raise InvalidModelError on failure."""
        if self.horizon < 1:
            raise InvalidModelError(f"horizon must be >= 1, got {self.horizon}")
        for t, layer in enumerate(reachable_layers(self)):
            if t == self.horizon:
                break
            for s in layer:
                for a in self.actions(s):
                    check_distribution(self.transitions(s, a), where=f"state {s}, action {a}")


def check_distribution(succ: list[tuple[int, float]], where: str = "") -> None:
    if not succ:
        raise InvalidModelError(f"empty successor list ({where})")
    if any(p < 0 for _, p in succ):
        raise InvalidModelError(f"negative transition probability ({where})")
    total = math.fsum(p for _, p in succ)
    if abs(total - 1.0) > PROBABILITY_TOLERANCE:
        raise InvalidModelError(f"transition probabilities sum to {total!r} ({where})")


class TabularMdp(MdpModel):
    """MDP backed by explicit tables; environments with small state spaces build these."""

    def __init__(
        self,
        name: str,
        horizon: int,
        initial: int,
        actions: dict[int, tuple[int, ...]],
        transitions: dict[tuple[int, int], list[tuple[int, float]]],
        rewards: dict[tuple[int, int], float],
        roles: dict[int, Role] | None = None,
    ) -> None:
        self.name = name
        self.horizon = horizon
        self._initial = initial
        self._actions = actions
        self._transitions = transitions
        self._rewards = rewards
        self._roles = roles or {}
        self._cumulative = {
            key: list(itertools.accumulate(p for _, p in succ))
            for key, succ in transitions.items()
        }

    def initial_state(self) -> int:
        return self._initial

    def actions(self, state: int) -> tuple[int, ...]:
        return self._actions.get(state, ())

    def transitions(self, state: int, action: int) -> list[tuple[int, float]]:
        return self._transitions[(state, action)]

    def reward(self, state: int, action: int) -> float:
        return self._rewards[(state, action)]

    def role(self, state: int) -> Role:
        return self._roles.get(state, Role.MAXIMIZER)

    def sample_next(self, state: int, action: int, rng: np.random.Generator) -> int:
        succ = self._transitions[(state, action)]
        if len(succ) == 1:
            return succ[0][0]
        cum = self._cumulative[(state, action)]
        i = bisect.bisect_right(cum, rng.random() * cum[-1])
        return succ[min(i, len(succ) - 1)][0]


def reachable_layers(mdp: MdpModel) -> list[list[int]]:
    """States reachable at each t = 0..H (layer t holds states after t steps)."""
    layers = [[mdp.initial_state()]]
    for _ in range(mdp.horizon):
        seen: dict[int, None] = {}
        for s in layers[-1]:
            for a in mdp.actions(s):
                for s2, p in mdp.transitions(s, a):
                    if p > 0:
                        seen[s2] = None
        layers.append(list(seen))
    return layers


# ---------------------------------------------------------------------------
# Value tables
# ---------------------------------------------------------------------------

@dataclass
class ValueTables:
    """V(s, t) and Q(s, ·, t) over the reachable (state, t) pairs."""
    flavor: Flavor
    horizon: int
    alpha: float | None = None
    v: dict[tuple[int, int], float] = field(default_factory=dict)
    q: dict[tuple[int, int], list[float]] = field(default_factory=dict)
    actions: dict[tuple[int, int], tuple[int, ...]] = field(default_factory=dict)

    def value(self, state: int, t: int = 0) -> float:
        if t >= self.horizon:
            return 0.0
        return self.v[(state, t)]

    def q_values(self, state: int, t: int = 0) -> list[float]:
        return self.q.get((state, t), [])

    def q_value(self, state: int, action: int, t: int = 0) -> float:
        acts = self.actions[(state, t)]
        return self.q[(state, t)][acts.index(action)]

    def best_actions(self, state: int, t: int = 0, tol: float = 1e-12) -> list[int]:
        """Action labels whose Q is within ``tol`` of the best (max, or min at minimizer rows)."""
        qs = self.q_values(state, t)
        if not qs:
            return []
        acts = self.actions[(state, t)]
        target = self.v[(state, t)]
        return [a for a, qv in zip(acts, qs) if abs(qv - target) <= tol]


def _backward_induction(mdp: MdpModel, flavor: Flavor, alpha: float | None) -> ValueTables:
    tables = ValueTables(flavor=flavor, horizon=mdp.horizon, alpha=alpha)
    layers = reachable_layers(mdp)
    H = mdp.horizon
    for s in layers[H]:
        tables.v[(s, H)] = 0.0
    for t in range(H - 1, -1, -1):
        for s in layers[t]:
            acts = mdp.actions(s)
            tables.actions[(s, t)] = acts
            if not acts:
                tables.v[(s, t)] = 0.0
                tables.q[(s, t)] = []
                continue
            qs = [
                mdp.reward(s, a)
                + math.fsum(p * tables.v[(s2, t + 1)] for s2, p in mdp.transitions(s, a) if p > 0)
                for a in acts
            ]
            tables.q[(s, t)] = qs
            if flavor is Flavor.SOFT:
                tables.v[(s, t)] = log_sum_exp(qs, alpha)
            elif flavor is Flavor.MINIMAX and mdp.role(s) is Role.MINIMIZER:
                tables.v[(s, t)] = min(qs)
            else:
                tables.v[(s, t)] = max(qs)
    log.debug("%s oracle for %s: %d (state, t) pairs",
              flavor.value, mdp.name, len(tables.v))
    return tables


def value_iterate(mdp: MdpModel) -> ValueTables:
    """Optimal values V*(s, t), Q*(s, a, t) by backward induction."""
    return _backward_induction(mdp, Flavor.STANDARD, None)


def soft_value_iterate(mdp: MdpModel, alpha: float) -> ValueTables:
    """Soft optimal values: the max in the Bellman backup becomes alpha * log-sum-exp."""
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha!r}")
    return _backward_induction(mdp, Flavor.SOFT, alpha)


def minimax_solve(game: MdpModel) -> ValueTables:
    """Max at maximizer states, min at minimizer states."""
    return _backward_induction(game, Flavor.MINIMAX, None)


def delta_gap(tables: ValueTables, tol: float = 1e-12) -> float:
    """Smallest nonzero gap between two Q-values at one (state, t); +inf if none."""
    gap = math.inf
    for qs in tables.q.values():
        ordered = sorted(qs)
        for lo, hi in zip(ordered, ordered[1:]):
            d = hi - lo
            if d > tol:
                gap = min(gap, d)
    return gap
