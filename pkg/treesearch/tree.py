"""
MCTS trial engine.

Nodes are keyed by the path that reaches them (action position, successor
state), so a state met along two different paths gets two nodes. A trial
selects down the tree, adds exactly one new node (or stops at a terminal
or horizon node), then runs the configured backups from leaf to root.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from treesearch.algorithm import AlgorithmConfig, Initializer
from treesearch.mdp import MdpModel
from treesearch.node import SearchNode, Trajectory
from treesearch.policies import backup, prepare_node, recommend, select_action

log = logging.getLogger(__name__)


class NodeNotInTreeError(KeyError):
    """Raised when a path does not lead to a node of the tree."""


class DuplicateNodeError(RuntimeError):
    """Raised when expanding a (parent, action, successor) that already has a node."""


def rollout_return(mdp: MdpModel, state: int, depth: int, rng: np.random.Generator) -> float:
    """Return of a uniformly random rollout from ``state`` at time ``depth`` to the horizon."""
    g = 0.0
    t = depth
    while t < mdp.horizon:
        acts = mdp.actions(state)
        if not acts:
            break
        a = acts[int(rng.integers(len(acts)))]
        g += mdp.reward(state, a)
        state = mdp.sample_next(state, a, rng)
        t += 1
    return g


@dataclass(frozen=True)
class ValueInitializer:
    kind: Initializer = Initializer.CONSTANT
    v_init: float = 0.0
    q_init: float = 0.0

    @classmethod
    def from_config(cls, cfg: AlgorithmConfig) -> ValueInitializer:
        return cls(cfg.initializer, cfg.v_init, cfg.q_init)

    def value(self, mdp: MdpModel, state: int, depth: int, rng: np.random.Generator) -> float:
        if self.kind is Initializer.ROLLOUT:
            return rollout_return(mdp, state, depth, rng)
        return self.v_init


class SearchTree:
    def __init__(self, mdp: MdpModel, cfg: AlgorithmConfig, rng: np.random.Generator | None = None) -> None:
        self.mdp = mdp
        self.cfg = cfg
        self.rng = rng if rng is not None else np.random.default_rng()
        self.init = ValueInitializer.from_config(cfg)
        self.trials = 0
        self.node_count = 0
        self.root = self._make_node(mdp.initial_state(), 0, visits=0)

    def _make_node(self, state: int, depth: int, visits: int) -> SearchNode:
        mdp = self.mdp
        actions = mdp.actions(state) if depth < mdp.horizon else ()
        if actions:
            rewards = [mdp.reward(state, a) for a in actions]
            v_init = self.init.value(mdp, state, depth, self.rng)
            q_init = self.init.q_init
        else:
            rewards, v_init, q_init = [], 0.0, 0.0
        node = SearchNode(state, depth, int(mdp.role(state)), actions, rewards,
                          v_init, q_init, visits)
        prepare_node(node, self.cfg)
        self.node_count += 1
        return node

    def expand(self, parent: SearchNode, action_index: int, state: int) -> SearchNode:
        """Add the node reached from ``parent`` by ``action_index`` and successor ``state``."""
        if state in parent.children[action_index]:
            raise DuplicateNodeError(
                f"node for action {action_index}, successor {state} already exists under {parent!r}")
        child = self._make_node(state, parent.depth + 1, visits=1)
        parent.children[action_index][state] = child
        return child

    def run_trial(self) -> Trajectory:
        mdp, cfg, rng = self.mdp, self.cfg, self.rng
        node = self.root
        traj = Trajectory([node])
        if node.terminal:
            node.n += 1
            traj.leaf_is_new = False
            self.trials += 1
            return traj

        while True:
            a = select_action(node, cfg, rng)
            node.n += 1
            node.n_sa[a] += 1
            succ = mdp.sample_next(node.state, node.actions[a], rng)
            traj.actions.append(a)
            traj.rewards.append(node.reward[a])
            child = node.children[a].get(succ)
            if child is None:
                child = self.expand(node, a, succ)
                traj.nodes.append(child)
                traj.leaf_value = child.v_bar
                break
            traj.nodes.append(child)
            if child.terminal:
                child.n += 1
                traj.leaf_is_new = False
                break
            node = child

        backup(traj, cfg)
        self.trials += 1
        return traj

    def search(self, n_trials: int) -> SearchTree:
        for _ in range(n_trials):
            self.run_trial()
        log.debug("%s: %d trials, %d nodes", self.cfg.label, self.trials, self.node_count)
        return self

    def node_at(self, path: Sequence[tuple[int, int]] = ()) -> SearchNode:
        """Node reached from the root by a sequence of (action label, successor state)."""
        node = self.root
        for action, state in path:
            try:
                index = node.actions.index(action)
            except ValueError:
                raise NodeNotInTreeError(f"action {action!r} not available at {node!r}") from None
            child = node.children[index].get(state)
            if child is None:
                raise NodeNotInTreeError(f"no node for action {action!r}, successor {state!r}")
            node = child
        return node

    def recommend(self, node: SearchNode | None = None) -> int:
        """Recommended action label at ``node`` (the root by default)."""
        node = self.root if node is None else node
        return node.actions[recommend(node, self.cfg)]

    def iter_nodes(self) -> Iterator[SearchNode]:
        queue = deque([self.root])
        while queue:
            node = queue.popleft()
            yield node
            queue.extend(node.iter_children())
