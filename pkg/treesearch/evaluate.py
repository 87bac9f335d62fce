"""
Evaluation harness.

A search tree is turned into a complete policy (recommendation inside the
tree, uniform random outside it) and scored by Monte-Carlo rollouts. The
learning-curve runner interleaves search with periodic evaluation, keeping
search and evaluation on independent random streams split from one seed.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from treesearch import config
from treesearch.algorithm import AlgorithmConfig
from treesearch.mdp import MdpModel, minimax_solve, value_iterate
from treesearch.node import SearchNode
from treesearch.policies import recommend
from treesearch.tree import SearchTree

log = logging.getLogger(__name__)

RESULT_COLUMNS = [
    "algorithm", "env", "seed", "n_trials", "est_value", "std_err",
    "simple_regret", "wallclock_ns", "trials_per_sec",
]


# ---------------------------------------------------------------------------
# Complete policy
# ---------------------------------------------------------------------------

class CompletePolicy:
    """Deterministic recommendation at tree nodes, uniform over actions elsewhere.

    Holds a read-only view of the tree; recommendations are cached per node
    for the lifetime of the object, so build a fresh one after more search.
    """

    def __init__(self, tree: SearchTree) -> None:
        self.tree = tree
        self._cache: dict[int, int] = {}

    def in_tree_action(self, node: SearchNode) -> int:
        key = id(node)
        index = self._cache.get(key)
        if index is None:
            index = recommend(node, self.tree.cfg)
            self._cache[key] = index
        return index

    def probabilities(self, node: SearchNode | None, actions: tuple[int, ...]) -> list[float]:
        """Action distribution at a state reached at ``node`` (None when outside the tree)."""
        if node is None or node.terminal:
            return [1.0 / len(actions)] * len(actions)
        probs = [0.0] * len(actions)
        probs[self.in_tree_action(node)] = 1.0
        return probs

    def rollout(self, mdp: MdpModel, rng: np.random.Generator) -> float:
        """Return of one trajectory from the initial state to the horizon."""
        node: SearchNode | None = self.tree.root
        state = mdp.initial_state()
        g = 0.0
        for _ in range(mdp.horizon):
            actions = mdp.actions(state)
            if not actions:
                break
            if node is not None and not node.terminal:
                index = self.in_tree_action(node)
            else:
                node = None
                index = int(rng.integers(len(actions)))
            g += mdp.reward(state, actions[index])
            state = mdp.sample_next(state, actions[index], rng)
            if node is not None:
                node = node.children[index].get(state)
        return g


def complete_policy(tree: SearchTree) -> CompletePolicy:
    return CompletePolicy(tree)


@dataclass(frozen=True)
class PolicyValue:
    mean: float
    std_err: float
    std: float
    n: int


def evaluate_policy(policy: CompletePolicy, mdp: MdpModel, n_traj: int,
                    rng: np.random.Generator) -> PolicyValue:
    """Monte-Carlo estimate of the policy's value at the initial state."""
    if n_traj < 1:
        raise ValueError(f"n_traj must be >= 1, got {n_traj!r}")
    returns = np.array([policy.rollout(mdp, rng) for _ in range(n_traj)])
    std = float(returns.std(ddof=1)) if n_traj > 1 else 0.0
    return PolicyValue(float(returns.mean()), std / math.sqrt(n_traj), std, n_traj)


@dataclass(frozen=True)
class Regret:
    raw: float
    clamped: float


def simple_regret(estimate: float, oracle_v: float) -> Regret:
    """V*(s_0) minus the estimate; the raw value may dip below 0 from sampling noise."""
    raw = oracle_v - estimate
    return Regret(raw, max(0.0, raw))


def oracle_value(mdp: MdpModel) -> float:
    """Exact optimal (or minimax, for two-player games) value of the initial state."""
    tables = minimax_solve(mdp) if mdp.two_player else value_iterate(mdp)
    return tables.value(mdp.initial_state(), 0)


# ---------------------------------------------------------------------------
# Learning curves
# ---------------------------------------------------------------------------

@dataclass
class Checkpoint:
    n_trials: int
    est_value: float
    std_err: float
    std: float
    simple_regret: float
    wallclock_ns: int | None
    trials_per_sec: float | None


@dataclass
class EvalReport:
    algorithm: str
    env: str
    seed: int
    eval_trajectories: int
    checkpoints: list[Checkpoint] = field(default_factory=list)

    def rows(self) -> list[dict]:
        """One results-CSV row per checkpoint; timing cells are blank when not recorded."""
        out = []
        for cp in self.checkpoints:
            out.append({
                "algorithm": self.algorithm,
                "env": self.env,
                "seed": self.seed,
                "n_trials": cp.n_trials,
                "est_value": repr(cp.est_value),
                "std_err": repr(cp.std_err),
                "simple_regret": repr(cp.simple_regret),
                "wallclock_ns": "" if cp.wallclock_ns is None else cp.wallclock_ns,
                "trials_per_sec": "" if cp.trials_per_sec is None else f"{cp.trials_per_sec:.1f}",
            })
        return out

    @property
    def final(self) -> Checkpoint:
        return self.checkpoints[-1]


def checkpoint_schedule(n_total: int, checkpoint_every: int) -> list[int]:
    points = list(range(checkpoint_every, n_total + 1, checkpoint_every))
    if not points or points[-1] != n_total:
        points.append(n_total)
    return points


def run_learning_curve(
    mdp: MdpModel,
    cfg: AlgorithmConfig,
    n_total: int = config.DEFAULT_TRIALS,
    checkpoint_every: int = config.CHECKPOINT_EVERY,
    eval_traj: int = config.EVAL_TRAJECTORIES,
    seed: int = 0,
    oracle_v: float | None = None,
    record_timing: bool = True,
) -> EvalReport:
    """Search for ``n_total`` trials, evaluating the complete policy at each checkpoint."""
    if n_total < 1 or checkpoint_every < 1 or eval_traj < 1:
        raise ValueError("n_total, checkpoint_every and eval_traj must be >= 1")
    if oracle_v is None:
        oracle_v = oracle_value(mdp)

    search_seq, eval_seq = np.random.SeedSequence(seed).spawn(2)
    tree = SearchTree(mdp, cfg, np.random.default_rng(search_seq))
    eval_rng = np.random.default_rng(eval_seq)
    report = EvalReport(cfg.label, mdp.name, seed, eval_traj)

    elapsed_ns = 0
    for point in checkpoint_schedule(n_total, checkpoint_every):
        start = time.perf_counter_ns()
        tree.search(point - tree.trials)
        elapsed_ns += time.perf_counter_ns() - start

        value = evaluate_policy(complete_policy(tree), mdp, eval_traj, eval_rng)
        regret = simple_regret(value.mean, oracle_v)
        if record_timing:
            wallclock = elapsed_ns
            rate = point / (elapsed_ns / 1e9) if elapsed_ns > 0 else math.inf
        else:
            wallclock, rate = None, None
        report.checkpoints.append(Checkpoint(
            point, value.mean, value.std_err, value.std, regret.raw, wallclock, rate))
        log.info("  %s seed=%d  n=%-6d value=%.4f  regret=%.4f",
                 cfg.label, seed, point, value.mean, regret.raw)

    return report


def summarize_reports(rows: pd.DataFrame | list[EvalReport]) -> pd.DataFrame:
    """Aggregate checkpoints across seeds: mean value, std deviation, std error, mean regret."""
    if not isinstance(rows, pd.DataFrame):
        records = []
        for report in rows:
            for cp in report.checkpoints:
                records.append({"algorithm": report.algorithm, "env": report.env,
                                 "seed": report.seed, "n_trials": cp.n_trials,
                                 "est_value": cp.est_value,
                                 "simple_regret": cp.simple_regret})
        rows = pd.DataFrame.from_records(records, columns=[
            "algorithm", "env", "seed", "n_trials", "est_value", "simple_regret"])

    grouped = rows.groupby(["algorithm", "env", "n_trials"], sort=True)
    summary = grouped.agg(
        seeds=("seed", "nunique"),
        mean_value=("est_value", "mean"),
        std_value=("est_value", "std"),
        mean_regret=("simple_regret", "mean"),
        std_regret=("simple_regret", "std"),
    ).reset_index()
    summary[["std_value", "std_regret"]] = summary[["std_value", "std_regret"]].fillna(0.0)
    root_n = np.sqrt(summary["seeds"].astype(float))
    summary["stderr_value"] = summary["std_value"] / root_n
    summary["stderr_regret"] = summary["std_regret"] / root_n
    return summary
