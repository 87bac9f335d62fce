from __future__ import annotations

import hypothesis.strategies as st
import pytest
from hypothesis import given

from treesearch.node import IndexedMaxHeap, SearchNode, Trajectory

keys = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


class TestIndexedMaxHeap:

    @given(st.lists(keys, min_size=1, max_size=20),
           st.lists(st.tuples(st.integers(0, 19), keys), max_size=60))
    def test_top_tracks_max_under_updates(self, initial, updates):
        heap = IndexedMaxHeap(initial)
        current = list(initial)
        for i, key in updates:
            i %= len(current)
            heap.update(i, key)
            current[i] = key
            assert heap.top_key() == max(current)
            assert current[heap.top()] == max(current)

    def test_positions_stay_consistent(self):
        heap = IndexedMaxHeap([3.0, 1.0, 2.0])
        heap.update(1, 5.0)
        heap.update(0, -1.0)
        assert all(heap.heap[heap.pos[i]] == i for i in range(3))
        assert heap.top() == 1
        assert len(heap) == 3


class TestSearchNode:

    def test_initial_statistics(self):
        node = SearchNode(7, 2, 1, (0, 1, 2), [0.1, 0.2, 0.3], v_init=-5.0, q_init=-1.0, visits=1)
        assert node.n == 1
        assert node.num_actions == 3
        assert node.q_bar == [-1.0] * 3
        assert node.v_hat == -5.0
        assert not node.terminal
        assert node.child(0, 4) is None
        assert list(node.iter_children()) == []

    def test_no_actions_is_terminal(self):
        assert SearchNode(0, 3, 1, (), [], 0.0, 0.0, 1).terminal


class TestTrajectory:

    def test_returns_include_leaf_value(self):
        nodes = [SearchNode(s, d, 1, (0,), [0.0], 0.0, 0.0, 1) for d, s in enumerate((0, 1, 2))]
        traj = Trajectory(nodes, actions=[0, 0], rewards=[1.0, 2.0], leaf_value=0.5)
        assert len(traj) == 2
        assert traj.leaf is nodes[-1]
        assert traj.returns() == pytest.approx([3.5, 2.5])
