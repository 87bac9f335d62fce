"""
Search-tree node statistics.

Per-action statistics are parallel Python lists indexed by action position
(not label); the owning MdpModel's action tuple maps positions to labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class IndexedMaxHeap:
    """Binary max-heap over a fixed set of indices 0..n-1 with O(log n) key updates."""

    __slots__ = ("keys", "heap", "pos")

    def __init__(self, keys: list[float]) -> None:
        self.keys = list(keys)
        self.heap = sorted(range(len(keys)), key=lambda i: -self.keys[i])
        self.pos = [0] * len(keys)
        for slot, i in enumerate(self.heap):
            self.pos[i] = slot

    def __len__(self) -> int:
        return len(self.heap)

    def top(self) -> int:
        return self.heap[0]

    def top_key(self) -> float:
        return self.keys[self.heap[0]]

    def update(self, i: int, key: float) -> None:
        old = self.keys[i]
        self.keys[i] = key
        if key > old:
            self._sift_up(self.pos[i])
        elif key < old:
            self._sift_down(self.pos[i])

    def _swap(self, a: int, b: int) -> None:
        heap, pos = self.heap, self.pos
        heap[a], heap[b] = heap[b], heap[a]
        pos[heap[a]] = a
        pos[heap[b]] = b

    def _sift_up(self, slot: int) -> None:
        keys, heap = self.keys, self.heap
        while slot > 0:
            parent = (slot - 1) >> 1
            if keys[heap[slot]] <= keys[heap[parent]]:
                break
            self._swap(slot, parent)
            slot = parent

    def _sift_down(self, slot: int) -> None:
        keys, heap = self.keys, self.heap
        n = len(heap)
        while True:
            left = 2 * slot + 1
            if left >= n:
                break
            child = left
            right = left + 1
            if right < n and keys[heap[right]] > keys[heap[left]]:
                child = right
            if keys[heap[child]] <= keys[heap[slot]]:
                break
            self._swap(slot, child)
            slot = child


class SearchNode:
    """One tree node: a state reached by a unique action/successor path."""

    __slots__ = (
        "state", "depth", "sign", "actions", "terminal", "n",
        # per action
        "n_sa", "reward", "q_bar", "q_hat", "q_soft", "h_q",
        "q_hat_sum", "q_soft_sum", "h_q_sum", "children",
        # per node
        "v_bar", "v_hat", "v_soft", "h_v",
        "v_hat_prev", "v_soft_prev", "h_v_prev",
        "soft_max", "soft_exp", "heap", "soft_heap",
        # cached search policy
        "policy", "alias", "policy_visit", "policy_fresh",
    )

    def __init__(
        self,
        state: int,
        depth: int,
        sign: int,
        actions: tuple[int, ...],
        rewards: list[float],
        v_init: float,
        q_init: float,
        visits: int,
    ) -> None:
        self.state = state
        self.depth = depth
        self.sign = sign
        self.actions = actions
        self.terminal = not actions
        self.n = visits

        k = len(actions)
        self.n_sa = [0] * k
        self.reward = rewards
        self.q_bar = [q_init] * k
        self.q_hat = [q_init] * k
        self.q_soft = [q_init] * k
        self.h_q = [0.0] * k
        self.q_hat_sum = [0.0] * k
        self.q_soft_sum = [0.0] * k
        self.h_q_sum = [0.0] * k
        self.children: list[dict[int, SearchNode]] = [{} for _ in range(k)]

        self.v_bar = v_init
        self.v_hat = v_init
        self.v_soft = v_init
        self.h_v = 0.0
        self.v_hat_prev = v_init
        self.v_soft_prev = v_init
        self.h_v_prev = 0.0

        self.soft_max = 0.0
        self.soft_exp = 0.0
        self.heap: IndexedMaxHeap | None = None
        self.soft_heap: IndexedMaxHeap | None = None

        self.policy: list[float] = []
        self.alias = None
        self.policy_visit = -1
        self.policy_fresh = False

    @property
    def num_actions(self) -> int:
        return len(self.actions)

    def child(self, action_index: int, state: int) -> SearchNode | None:
        return self.children[action_index].get(state)

    def iter_children(self):
        for by_state in self.children:
            yield from by_state.values()

    def __repr__(self) -> str:
        return (f"SearchNode(state={self.state}, depth={self.depth}, n={self.n}, "
                f"actions={len(self.actions)})")


@dataclass
class Trajectory:
    """Nodes s_0..s_h visited by one trial, the action positions taken and the rewards collected."""
    nodes: list[SearchNode]
    actions: list[int] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    # V^init of a freshly added leaf, 0 for terminal and horizon leaves
    leaf_value: float = 0.0
    leaf_is_new: bool = True

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def leaf(self) -> SearchNode:
        return self.nodes[-1]

    def returns(self) -> list[float]:
        """Return from every step t = 0..h-1, leaf value included."""
        out = [0.0] * len(self.actions)
        g = self.leaf_value
        for t in range(len(self.actions) - 1, -1, -1):
            g += self.rewards[t]
            out[t] = g
        return out
