"""
Micro-benchmarks and oracle dumps.

The sampling benchmark runs BTS on synthetic wide trees and compares
trials per second with and without alias tables, and with fast versus naive
Bellman backups. Only ratios are meant to be compared across machines.
"""

from __future__ import annotations

import logging
import math
import time
from pathlib import Path

import numpy as np
import pandas as pd

from treesearch import config
from treesearch.algorithm import Algorithm, AlgorithmConfig, BackupMode
from treesearch.alias import alias_build, alias_sample, alias_sample_many
from treesearch.environments import make_wide_tree
from treesearch.mdp import Flavor, MdpModel, minimax_solve, soft_value_iterate, value_iterate
from treesearch.tree import SearchTree

log = logging.getLogger(__name__)

# (comparison, baseline settings, variant settings); settings are (use_alias, backup)
COMPARISONS = {
    "alias": ((False, BackupMode.FAST), (True, BackupMode.FAST)),
    "fast_backup": ((True, BackupMode.NAIVE), (True, BackupMode.FAST)),
}


def _trials_per_sec(n_actions: int, depth: int, n_trials: int, use_alias: bool,
                    backup: BackupMode, seed: int) -> float:
    mdp = make_wide_tree(n_actions, depth, seed=seed)
    cfg = AlgorithmConfig(Algorithm.BTS, use_alias=use_alias, backup=backup)
    tree = SearchTree(mdp, cfg, np.random.default_rng(seed))
    start = time.perf_counter_ns()
    tree.search(n_trials)
    elapsed = time.perf_counter_ns() - start
    return n_trials / (elapsed / 1e9) if elapsed > 0 else math.inf


def bench_sampling(
    action_counts: list[int] = config.BENCH_ACTION_COUNTS,
    n_trials: int = config.BENCH_TRIALS,
    repeats: int = config.BENCH_REPEATS,
    depth: int = config.BENCH_TREE_DEPTH,
    seed: int = 0,
) -> pd.DataFrame:
    """Median trials/sec of BTS per (|A|, comparison) and the variant/baseline ratio."""
    for a in action_counts:
        if a < 2:
            raise ValueError(f"action counts must be >= 2, got {a!r}")
    records = []
    for a in action_counts:
        for name, (base, variant) in COMPARISONS.items():
            for rep in range(repeats):
                for role, (use_alias, backup) in (("baseline", base), ("variant", variant)):
                    tps = _trials_per_sec(a, depth, n_trials, use_alias, backup, seed + rep)
                    records.append({"n_actions": a, "comparison": name, "role": role,
                                    "repeat": rep, "trials_per_sec": tps})
            log.info("  |A|=%-4d %-12s done", a, name)

    raw = pd.DataFrame.from_records(records)
    medians = (raw.groupby(["n_actions", "comparison", "role"])["trials_per_sec"]
               .median().unstack("role").reset_index())
    medians = medians.rename(columns={"baseline": "baseline_tps", "variant": "variant_tps"})
    medians.columns.name = None
    medians["ratio"] = medians["variant_tps"] / medians["baseline_tps"]
    return medians[["n_actions", "comparison", "baseline_tps", "variant_tps", "ratio"]]


def bench_alias_draws(
    sizes: list[int] = config.BENCH_SAMPLE_SIZES,
    draws: int = config.BENCH_DRAWS,
    repeats: int = config.BENCH_REPEATS,
    seed: int = 0,
) -> pd.DataFrame:
    """Median nanoseconds per alias draw, per distribution size.

    ``ns_per_draw`` times single draws, ``bulk_ns_per_draw`` one vectorised
    batch of the same size.
    """
    rng = np.random.default_rng(seed)
    records = []
    for m in sizes:
        table = alias_build(rng.random(m) + 1e-3)
        for rep in range(repeats):
            start = time.perf_counter_ns()
            for _ in range(draws):
                alias_sample(table, rng)
            elapsed = time.perf_counter_ns() - start
            single = elapsed / draws
            start = time.perf_counter_ns()
            alias_sample_many(table, draws, rng)
            bulk = (time.perf_counter_ns() - start) / draws
            records.append({"size": m, "repeat": rep, "ns_per_draw": single,
                            "bulk_ns_per_draw": bulk})
    raw = pd.DataFrame.from_records(records)
    return raw.groupby("size", as_index=False)[["ns_per_draw", "bulk_ns_per_draw"]].median()


# ---------------------------------------------------------------------------
# Oracle tables
# ---------------------------------------------------------------------------

def oracle_table(mdp: MdpModel, kind: Flavor | str = Flavor.STANDARD,
                 alpha: float | None = None) -> pd.DataFrame:
    """Every reachable (state, t) with one row per action: state, t, action, q, v."""
    kind = Flavor(kind)
    if kind is Flavor.SOFT:
        if alpha is None:
            raise ValueError("a soft oracle needs alpha")
        tables = soft_value_iterate(mdp, alpha)
    elif kind is Flavor.MINIMAX:
        tables = minimax_solve(mdp)
    else:
        tables = value_iterate(mdp)

    records = []
    for (state, t), v in tables.v.items():
        acts = tables.actions.get((state, t), ())
        if not acts:
            records.append({"state": state, "t": t, "action": None, "q": None, "v": v})
            continue
        for action, q in zip(acts, tables.q[(state, t)]):
            records.append({"state": state, "t": t, "action": action, "q": q, "v": v})
    frame = pd.DataFrame.from_records(records, columns=["state", "t", "action", "q", "v"])
    frame["action"] = frame["action"].astype("Int64")
    return frame.sort_values(["t", "state", "action"], kind="stable").reset_index(drop=True)


def dump_oracle(mdp: MdpModel, path: str | Path, kind: Flavor | str = Flavor.STANDARD,
                alpha: float | None = None) -> pd.DataFrame:
    frame = oracle_table(mdp, kind, alpha)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.12g")
    log.info("Wrote %d oracle rows for %s to %s", len(frame), mdp.name, path)
    return frame
