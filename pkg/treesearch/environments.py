"""
Benchmark environments.

Every factory returns an MdpModel with integer states. Small chains and
random MDPs are built as explicit tables; grid worlds, the board game and
the synthetic wide tree compute their dynamics on demand.
"""

from __future__ import annotations

import functools
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from treesearch import config
from treesearch.mdp import InvalidModelError, MdpModel, Role, TabularMdp, check_distribution

log = logging.getLogger(__name__)

MAPS_DIR = Path(__file__).parent / "maps"


class InvalidMapError(ValueError):
    """Raised when a grid map is malformed or has no route from start to goal."""


# ---------------------------------------------------------------------------
# D-chain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DChainSpec:
    length: int = 10
    final_reward: float = 1.0


A_LEFT, A_RIGHT = 0, 1
CHAIN_EXIT = 0


def make_dchain(spec: DChainSpec) -> TabularMdp:
    """States 1..D plus the absorbing exit 0; a_L at d pays (D - d) / D, a_R at D pays R_f."""
    D = spec.length
    if D < 1:
        raise ValueError(f"chain length must be >= 1, got {D!r}")
    actions, transitions, rewards = {}, {}, {}
    for d in range(1, D + 1):
        actions[d] = (A_LEFT, A_RIGHT)
        transitions[(d, A_LEFT)] = [(CHAIN_EXIT, 1.0)]
        rewards[(d, A_LEFT)] = (D - d) / D
        if d < D:
            transitions[(d, A_RIGHT)] = [(d + 1, 1.0)]
            rewards[(d, A_RIGHT)] = 0.0
        else:
            transitions[(d, A_RIGHT)] = [(CHAIN_EXIT, 1.0)]
            rewards[(d, A_RIGHT)] = spec.final_reward
    return TabularMdp(f"dchain-{D}-{spec.final_reward:g}", D + 1, 1,
                      actions, transitions, rewards)


# ---------------------------------------------------------------------------
# Average-return counterexample
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ArCounterexampleSpec:
    length: int = 10


def make_ar_counterexample(spec: ArCounterexampleSpec) -> TabularMdp:
    """Root 1 offers a_1 (into the chain 2..D) and a_2 (reward 1, ends).

    Every chain state can continue (action 0) or absorb with reward 0
    (action 1); continuing out of state D pays 2. With D = 1 the root's a_1
    pays 2 directly.
    """
    D = spec.length
    if D < 1:
        raise ValueError(f"chain length must be >= 1, got {D!r}")
    actions = {1: (0, 1)}
    transitions = {(1, 1): [(CHAIN_EXIT, 1.0)]}
    rewards = {(1, 1): 1.0}
    if D == 1:
        transitions[(1, 0)] = [(CHAIN_EXIT, 1.0)]
        rewards[(1, 0)] = 2.0
    else:
        transitions[(1, 0)] = [(2, 1.0)]
        rewards[(1, 0)] = 0.0
    for k in range(2, D + 1):
        actions[k] = (0, 1)
        transitions[(k, 1)] = [(CHAIN_EXIT, 1.0)]
        rewards[(k, 1)] = 0.0
        if k < D:
            transitions[(k, 0)] = [(k + 1, 1.0)]
            rewards[(k, 0)] = 0.0
        else:
            transitions[(k, 0)] = [(CHAIN_EXIT, 1.0)]
            rewards[(k, 0)] = 2.0
    return TabularMdp(f"ar-counterexample-{D}", D, 1, actions, transitions, rewards)


# ---------------------------------------------------------------------------
# Grid maps
# ---------------------------------------------------------------------------

MAP_CHARS = frozenset("SFHG")


@dataclass(frozen=True)
class GridMap:
    rows: tuple[str, ...]
    horizon: int = config.FROZEN_LAKE_HORIZON

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.rows[0])

    @property
    def n_cells(self) -> int:
        return self.n_rows * self.n_cols

    def cell(self, index: int) -> str:
        r, c = divmod(index, self.n_cols)
        return self.rows[r][c]

    def cells_of(self, char: str) -> list[int]:
        return [i for i in range(self.n_cells) if self.cell(i) == char]

    @property
    def start(self) -> int:
        return self.cells_of("S")[0]

    def shortest_path_length(self) -> int | None:
        """Fewest 4-neighbour moves from start to a goal avoiding holes; None if unreachable."""
        dist = {self.start: 0}
        queue = deque([self.start])
        while queue:
            i = queue.popleft()
            if self.cell(i) == "G":
                return dist[i]
            r, c = divmod(i, self.n_cols)
            for dr, dc in ((-1, 0), (0, 1), (1, 0), (0, -1)):
                rr, cc = r + dr, c + dc
                if 0 <= rr < self.n_rows and 0 <= cc < self.n_cols:
                    j = rr * self.n_cols + cc
                    if j not in dist and self.cell(j) != "H":
                        dist[j] = dist[i] + 1
                        queue.append(j)
        return None


def parse_map(text: str, horizon: int = config.FROZEN_LAKE_HORIZON) -> GridMap:
    rows = tuple(line.strip() for line in text.strip().splitlines() if line.strip())
    if not rows:
        raise InvalidMapError("empty map")
    width = len(rows[0])
    for n, row in enumerate(rows, start=1):
        if len(row) != width:
            raise InvalidMapError(f"row {n} has {len(row)} cells, expected {width}")
        bad = set(row) - MAP_CHARS
        if bad:
            raise InvalidMapError(f"row {n} has unknown cell(s) {''.join(sorted(bad))!r}")
    grid = GridMap(rows, horizon)
    starts = grid.cells_of("S")
    if len(starts) != 1:
        raise InvalidMapError(f"map needs exactly one S, found {len(starts)}")
    if not grid.cells_of("G"):
        raise InvalidMapError("map has no G")
    if grid.shortest_path_length() is None:
        raise InvalidMapError("no path from S to G")
    if horizon < 1:
        raise InvalidMapError(f"horizon must be >= 1, got {horizon}")
    return grid


def load_map(name: str, horizon: int = config.FROZEN_LAKE_HORIZON) -> GridMap:
    """Load a bundled map (fl8, fl12, fl12_test, sailing6) or a map file path."""
    path = MAPS_DIR / f"{name}.txt"
    if not path.exists():
        path = Path(name)
    if not path.exists():
        known = ", ".join(sorted(p.stem for p in MAPS_DIR.glob("*.txt")))
        raise InvalidMapError(f"unknown map {name!r} (bundled maps: {known})")
    return parse_map(path.read_text(encoding="utf-8"), horizon)


# ---------------------------------------------------------------------------
# Frozen Lake
# ---------------------------------------------------------------------------

# up, right, down, left
LAKE_MOVES = ((-1, 0), (0, 1), (1, 0), (0, -1))


class FrozenLake(MdpModel):
    """Deterministic Frozen Lake; the state id is t * n_cells + cell.

    Reaching a goal on move t pays discount ** t and ends the episode,
    falling into a hole ends it with nothing, bumping a wall stays put.
    """

    name = "frozen_lake"

    def __init__(self, grid: GridMap, discount: float = config.FROZEN_LAKE_DISCOUNT) -> None:
        self.grid = grid
        self.horizon = grid.horizon
        self.discount = discount
        self.n_cells = grid.n_cells
        self._absorbing = frozenset(grid.cells_of("H") + grid.cells_of("G"))
        self._goals = frozenset(grid.cells_of("G"))
        self._next_cell = [[self._move(i, a) for a in range(4)] for i in range(self.n_cells)]

    def _move(self, cell: int, action: int) -> int:
        r, c = divmod(cell, self.grid.n_cols)
        dr, dc = LAKE_MOVES[action]
        rr, cc = r + dr, c + dc
        if 0 <= rr < self.grid.n_rows and 0 <= cc < self.grid.n_cols:
            return rr * self.grid.n_cols + cc
        return cell

    def initial_state(self) -> int:
        return self.grid.start

    def actions(self, state: int) -> tuple[int, ...]:
        t, cell = divmod(state, self.n_cells)
        if t >= self.horizon or cell in self._absorbing:
            return ()
        return (0, 1, 2, 3)

    def transitions(self, state: int, action: int) -> list[tuple[int, float]]:
        t, cell = divmod(state, self.n_cells)
        return [((t + 1) * self.n_cells + self._next_cell[cell][action], 1.0)]

    def sample_next(self, state: int, action: int, rng: np.random.Generator) -> int:
        t, cell = divmod(state, self.n_cells)
        return (t + 1) * self.n_cells + self._next_cell[cell][action]

    def reward(self, state: int, action: int) -> float:
        t, cell = divmod(state, self.n_cells)
        if self._next_cell[cell][action] in self._goals:
            return self.discount ** (t + 1)
        return 0.0


def make_frozen_lake(grid: GridMap) -> FrozenLake:
    return FrozenLake(grid)


# ---------------------------------------------------------------------------
# Sailing
# ---------------------------------------------------------------------------

# 0 = North, clockwise in 45 degree steps
SAIL_MOVES = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))

WIND_TRANSITIONS = (
    (0.4, 0.3, 0.0, 0.0, 0.0, 0.0, 0.0, 0.3),
    (0.4, 0.3, 0.3, 0.0, 0.0, 0.0, 0.0, 0.0),
    (0.0, 0.4, 0.3, 0.3, 0.0, 0.0, 0.0, 0.0),
    (0.0, 0.0, 0.4, 0.3, 0.3, 0.0, 0.0, 0.0),
    (0.0, 0.0, 0.0, 0.4, 0.2, 0.4, 0.0, 0.0),
    (0.0, 0.0, 0.0, 0.0, 0.3, 0.3, 0.4, 0.0),
    (0.0, 0.0, 0.0, 0.0, 0.0, 0.3, 0.3, 0.4),
    (0.4, 0.0, 0.0, 0.0, 0.0, 0.0, 0.3, 0.3),
)

# tack angle class (45 degree steps away from the wind) -> cost per move
TACK_COSTS = {1: 4.0, 2: 3.0, 3: 2.0, 4: 1.0}


def tack(heading: int, wind: int) -> int:
    d = abs(heading - wind) % 8
    return min(d, 8 - d)


@dataclass(frozen=True)
class SailingSpec:
    grid: GridMap
    wind_matrix: tuple[tuple[float, ...], ...] = WIND_TRANSITIONS
    tack_costs: dict[int, float] = field(default_factory=lambda: dict(TACK_COSTS))
    initial_wind: int = config.SAILING_INITIAL_WIND


class Sailing(MdpModel):
    """Sailing on a grid; the state id is cell * 8 + wind.

    ``wind`` is the direction the wind blows from, so heading == wind is
    never offered. The goal cell is absorbing.
    """

    name = "sailing"

    def __init__(self, spec: SailingSpec) -> None:
        if len(spec.wind_matrix) != 8:
            raise InvalidModelError("wind matrix must be 8x8")
        for w, row in enumerate(spec.wind_matrix):
            if len(row) != 8:
                raise InvalidModelError("wind matrix must be 8x8")
            check_distribution(list(enumerate(row)), where=f"wind row {w}")
        if sorted(spec.tack_costs) != [1, 2, 3, 4] or min(spec.tack_costs.values()) <= 0:
            raise InvalidModelError(f"tack costs must be positive for classes 1..4, got {spec.tack_costs}")
        if not 0 <= spec.initial_wind < 8:
            raise InvalidModelError(f"initial wind must be in 0..7, got {spec.initial_wind}")
        self.spec = spec
        self.grid = spec.grid
        self.horizon = spec.grid.horizon
        self._goals = frozenset(spec.grid.cells_of("G"))
        self._wind_next = [[(w2, p) for w2, p in enumerate(row) if p > 0] for row in spec.wind_matrix]
        self._wind_cum = [np.cumsum([p for _, p in row]).tolist() for row in self._wind_next]
        n_cols = spec.grid.n_cols
        self._next_cell = []
        for cell in range(spec.grid.n_cells):
            r, c = divmod(cell, n_cols)
            moves = []
            for dr, dc in SAIL_MOVES:
                rr, cc = r + dr, c + dc
                inside = 0 <= rr < spec.grid.n_rows and 0 <= cc < n_cols
                moves.append(rr * n_cols + cc if inside else cell)
            self._next_cell.append(moves)

    def initial_state(self) -> int:
        return self.grid.start * 8 + self.spec.initial_wind

    def actions(self, state: int) -> tuple[int, ...]:
        cell, wind = divmod(state, 8)
        if cell in self._goals:
            return ()
        return tuple(a for a in range(8) if a != wind)

    def transitions(self, state: int, action: int) -> list[tuple[int, float]]:
        cell, wind = divmod(state, 8)
        nxt = self._next_cell[cell][action] * 8
        return [(nxt + w2, p) for w2, p in self._wind_next[wind]]

    def sample_next(self, state: int, action: int, rng: np.random.Generator) -> int:
        cell, wind = divmod(state, 8)
        row = self._wind_next[wind]
        cum = self._wind_cum[wind]
        x = rng.random() * cum[-1]
        i = 0
        while i < len(cum) - 1 and x >= cum[i]:
            i += 1
        return self._next_cell[cell][action] * 8 + row[i][0]

    def reward(self, state: int, action: int) -> float:
        return -self.spec.tack_costs[tack(action, state % 8)]


def make_sailing(spec: SailingSpec) -> Sailing:
    return Sailing(spec)


# ---------------------------------------------------------------------------
# Tic-tac-toe
# ---------------------------------------------------------------------------

LINES = ((0, 1, 2), (3, 4, 5), (6, 7, 8), (0, 3, 6), (1, 4, 7), (2, 5, 8), (0, 4, 8), (2, 4, 6))
EMPTY, CROSS, NOUGHT = 0, 1, 2
POW3 = tuple(3 ** i for i in range(9))


@functools.lru_cache(maxsize=None)
def decode_board(board: int) -> tuple[int, ...]:
    cells = []
    for _ in range(9):
        board, v = divmod(board, 3)
        cells.append(v)
    return tuple(cells)


def encode_board(cells) -> int:
    return sum(v * p for v, p in zip(cells, POW3))


def winner(cells: tuple[int, ...]) -> int:
    for a, b, c in LINES:
        if cells[a] != EMPTY and cells[a] == cells[b] == cells[c]:
            return cells[a]
    return EMPTY


class TicTacToe(MdpModel):
    """3x3 noughts and crosses; crosses maximize, noughts minimize.

    The state is the board as a base-3 integer (cell i is digit i). The side
    to move follows from the piece counts.
    """

    name = "tictactoe"
    two_player = True

    def __init__(self, board: int = 0) -> None:
        self._initial = board
        self.horizon = max(1, decode_board(board).count(EMPTY))

    def initial_state(self) -> int:
        return self._initial

    def _to_move(self, cells: tuple[int, ...]) -> int:
        return CROSS if cells.count(CROSS) == cells.count(NOUGHT) else NOUGHT

    def actions(self, state: int) -> tuple[int, ...]:
        cells = decode_board(state)
        if winner(cells) != EMPTY:
            return ()
        return tuple(i for i, v in enumerate(cells) if v == EMPTY)

    def role(self, state: int) -> Role:
        if self._to_move(decode_board(state)) == CROSS:
            return Role.MAXIMIZER
        return Role.MINIMIZER

    def transitions(self, state: int, action: int) -> list[tuple[int, float]]:
        return [(self.sample_next(state, action, None), 1.0)]

    def sample_next(self, state: int, action: int, rng) -> int:
        return state + self._to_move(decode_board(state)) * POW3[action]

    def reward(self, state: int, action: int) -> float:
        mark = self._to_move(decode_board(state))
        after = decode_board(state + mark * POW3[action])
        if winner(after) == EMPTY:
            return 0.0
        return 1.0 if mark == CROSS else -1.0


def make_tictactoe(board: int = 0) -> TicTacToe:
    return TicTacToe(board)


# ---------------------------------------------------------------------------
# Wide tree
# ---------------------------------------------------------------------------

class WideTree(MdpModel):
    """Deterministic A-ary tree of depth d with rewards on the moves into leaves.

    States are level-order indices (root 0, children of i are i*A+1..i*A+A).
    Leaf rewards are uniform in [0, 1), drawn lazily per parent from a
    generator seeded by (seed, parent).
    """

    name = "wide_tree"

    def __init__(self, branching: int, depth: int, seed: int = 0,
                 leaf_rewards: np.ndarray | None = None) -> None:
        if branching < 2:
            raise ValueError(f"branching must be >= 2, got {branching!r}")
        if depth < 1:
            raise ValueError(f"depth must be >= 1, got {depth!r}")
        self.branching = branching
        self.depth = depth
        self.horizon = depth
        self.seed = seed
        self._offsets = [(branching ** level - 1) // (branching - 1) for level in range(depth + 2)]
        self._actions = tuple(range(branching))
        self._leaf_cache: dict[int, list[float]] = {}
        if leaf_rewards is not None:
            leaf_rewards = np.asarray(leaf_rewards, dtype=float).ravel()
            if leaf_rewards.size != branching ** depth:
                raise ValueError(f"expected {branching ** depth} leaf rewards, got {leaf_rewards.size}")
        self._fixed = leaf_rewards

    @property
    def interior_count(self) -> int:
        return self._offsets[self.depth]

    def level(self, state: int) -> int:
        for level in range(self.depth + 1):
            if state < self._offsets[level + 1]:
                return level
        raise ValueError(f"state {state} is outside the tree")

    def initial_state(self) -> int:
        return 0

    def actions(self, state: int) -> tuple[int, ...]:
        return self._actions if state < self._offsets[self.depth] else ()

    def transitions(self, state: int, action: int) -> list[tuple[int, float]]:
        return [(state * self.branching + 1 + action, 1.0)]

    def sample_next(self, state: int, action: int, rng) -> int:
        return state * self.branching + 1 + action

    def _leaf_block(self, parent: int) -> list[float]:
        block = self._leaf_cache.get(parent)
        if block is None:
            if self._fixed is not None:
                start = (parent - self._offsets[self.depth - 1]) * self.branching
                block = self._fixed[start:start + self.branching].tolist()
            else:
                block = np.random.default_rng((self.seed, parent)).random(self.branching).tolist()
            self._leaf_cache[parent] = block
        return block

    def reward(self, state: int, action: int) -> float:
        if state < self._offsets[self.depth - 1]:
            return 0.0
        return self._leaf_block(state)[action]

    def reward_tensor(self) -> np.ndarray:
        """All leaf rewards in level order; meant for small trees."""
        first = self._offsets[self.depth - 1]
        parents = range(first, self._offsets[self.depth])
        return np.array([r for p in parents for r in self._leaf_block(p)])


def make_wide_tree(branching: int, depth: int, seed: int = 0,
                   leaf_rewards: np.ndarray | None = None) -> WideTree:
    return WideTree(branching, depth, seed, leaf_rewards)


# ---------------------------------------------------------------------------
# Random MDPs
# ---------------------------------------------------------------------------

def make_random_mdp(
    n_states: int = 5,
    n_actions: int = 2,
    horizon: int = 3,
    n_successors: int = 2,
    seed: int = 0,
    deterministic: bool = False,
) -> TabularMdp:
    """Seeded random finite-horizon MDP with rewards in [0, 1) and no terminal states."""
    if n_states < 1 or n_actions < 1 or horizon < 1:
        raise ValueError("n_states, n_actions and horizon must be >= 1")
    k = 1 if deterministic else min(n_successors, n_states)
    rng = np.random.default_rng(seed)
    actions, transitions, rewards = {}, {}, {}
    for s in range(n_states):
        actions[s] = tuple(range(n_actions))
        for a in range(n_actions):
            rewards[(s, a)] = float(rng.random())
            succ = rng.choice(n_states, size=k, replace=False).tolist()
            probs = rng.dirichlet(np.ones(k)).tolist()
            probs[-1] = 1.0 - math.fsum(probs[:-1])
            transitions[(s, a)] = list(zip(succ, probs))
    kind = "det" if deterministic else "stoch"
    return TabularMdp(f"random-{kind}-{n_states}x{n_actions}-h{horizon}-s{seed}", horizon, 0,
                      actions, transitions, rewards)


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnvEntry:
    factory: Callable[..., MdpModel]
    defaults: dict
    description: str


def _frozen_lake(map: str = "fl8", horizon: int = config.FROZEN_LAKE_HORIZON) -> FrozenLake:
    return make_frozen_lake(load_map(map, horizon))


def _sailing(map: str = "sailing6", initial_wind: int = config.SAILING_INITIAL_WIND,
             horizon: int = config.SAILING_HORIZON) -> Sailing:
    return make_sailing(SailingSpec(load_map(map, horizon), initial_wind=initial_wind))


ENVIRONMENTS: dict[str, EnvEntry] = {
    "dchain": EnvEntry(
        lambda length=10, final_reward=1.0: make_dchain(DChainSpec(length, final_reward)),
        {"length": 10, "final_reward": 1.0},
        "D-chain; final_reward 0.5 gives the modified chain"),
    "frozen_lake": EnvEntry(
        _frozen_lake, {"map": "fl8", "horizon": config.FROZEN_LAKE_HORIZON},
        "deterministic Frozen Lake on a bundled map (fl8, fl12, fl12_test)"),
    "sailing": EnvEntry(
        _sailing, {"map": "sailing6", "initial_wind": config.SAILING_INITIAL_WIND,
                   "horizon": config.SAILING_HORIZON},
        "Sailing Problem with stochastic wind"),
    "ar_counterexample": EnvEntry(
        lambda length=10: make_ar_counterexample(ArCounterexampleSpec(length)),
        {"length": 10},
        "chain where fixed-temperature average-return search prefers the worse root action"),
    "tictactoe": EnvEntry(
        make_tictactoe, {"board": 0}, "two-player noughts and crosses"),
    "wide_tree": EnvEntry(
        make_wide_tree, {"branching": 16, "depth": 2, "seed": 0},
        "deterministic A-ary tree with random leaf rewards"),
    "random_mdp": EnvEntry(
        make_random_mdp,
        {"n_states": 5, "n_actions": 2, "horizon": 3, "n_successors": 2, "seed": 0,
         "deterministic": False},
        "seeded random finite-horizon MDP"),
}


def make_env(name: str, **params) -> MdpModel:
    try:
        entry = ENVIRONMENTS[name]
    except KeyError:
        raise ValueError(f"unknown environment {name!r} (known: {', '.join(sorted(ENVIRONMENTS))})") from None
    unknown = set(params) - set(entry.defaults)
    if unknown:
        raise ValueError(f"unknown parameter(s) for {name}: {', '.join(sorted(unknown))}")
    merged = {**entry.defaults, **params}
    mdp = entry.factory(**merged)
    log.debug("built %s with %s", name, merged)
    return mdp
