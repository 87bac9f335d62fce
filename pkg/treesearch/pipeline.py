#!/usr/bin/env python3
"""
Tree Search Experiment Runner
=============================
Usage:

    # Run an experiment file (JSON) and write a results CSV:
    python3 run.py run experiments/frozen_lake.json

    # Override seeds / parallelism, resume after an interruption:
    python3 run.py run experiments/chain.json --seeds 0 1 2 --workers 4 --resume

    # Micro-benchmarks (alias sampling, fast backups):
    python3 run.py bench --actions 16 64 256

    # Exact value table of an environment:
    python3 run.py oracle dchain --param final_reward=0.5 --kind soft --alpha 1

    # What can be run:
    python3 run.py list-envs

    # Mean / std / stderr per checkpoint across seeds:
    python3 run.py summarize results/frozen_lake.csv

Defaults (output folder, workers, log level) live in treesearch/config.py
and can be overridden from a .env file.

Each (algorithm, seed) cell:
  1. Build the environment and a fresh search tree
  2. Search, pausing every `checkpoint_every` trials
  3. Score the complete policy with Monte-Carlo rollouts
  4. Append one CSV row per checkpoint
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd

# Allow running as: python3 treesearch/pipeline.py  OR  python3 run.py
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from treesearch import config
from treesearch.algorithm import AlgorithmConfig, default_config
from treesearch.bench import bench_alias_draws, bench_sampling, dump_oracle
from treesearch.environments import ENVIRONMENTS, make_env
from treesearch.evaluate import RESULT_COLUMNS, oracle_value, run_learning_curve, summarize_reports

log = logging.getLogger(__name__)

SCHEMA_LINE = "# schema: treesearch-results v1"

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INTERRUPTED = 130


class ConfigError(ValueError):
    """Raised when an experiment file cannot be parsed; carries the line and field at fault."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None) -> None:
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


# ---------------------------------------------------------------------------
# Experiment files
# ---------------------------------------------------------------------------

EXPERIMENT_FIELDS = {
    "env", "algorithms", "seeds", "n_trials", "checkpoint_every",
    "eval_trajectories", "output", "record_timing",
}


@dataclass
class ExperimentConfig:
    env: str
    env_params: dict = field(default_factory=dict)
    algorithms: list[AlgorithmConfig] = field(default_factory=list)
    seeds: list[int] = field(default_factory=lambda: list(config.DEFAULT_SEEDS))
    n_trials: int = config.DEFAULT_TRIALS
    checkpoint_every: int = config.CHECKPOINT_EVERY
    eval_trajectories: int = config.EVAL_TRAJECTORIES
    output: str = ""
    record_timing: bool = True

    def __post_init__(self) -> None:
        if not self.output:
            self.output = f"{self.env}.csv"

    def resolved(self) -> dict:
        """The experiment with every default expanded, as written next to the results."""
        env_defaults = ENVIRONMENTS[self.env].defaults if self.env in ENVIRONMENTS else {}
        return {
            "env": {"name": self.env, "params": {**env_defaults, **self.env_params}},
            "algorithms": [cfg.to_dict() for cfg in self.algorithms],
            "seeds": list(self.seeds),
            "n_trials": self.n_trials,
            "checkpoint_every": self.checkpoint_every,
            "eval_trajectories": self.eval_trajectories,
            "output": self.output,
            "record_timing": self.record_timing,
        }


def _line_of(text: str, key: str) -> int | None:
    needle = f'"{key}"'
    for n, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return n
    return None


def _positive_int(data: dict, key: str, default: int, text: str) -> int:
    value = data.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"expected a positive integer, got {value!r}", _line_of(text, key), key)
    return value


def parse_experiment(text: str) -> ExperimentConfig:
    """Parse a JSON experiment document; tuned hyperparameters fill fields left unset."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    if not isinstance(data, dict):
        raise ConfigError("experiment must be a JSON object", 1)

    unknown = sorted(set(data) - EXPERIMENT_FIELDS)
    if unknown:
        raise ConfigError("unknown field", _line_of(text, unknown[0]), unknown[0])

    env = data.get("env")
    if isinstance(env, str):
        env = {"name": env}
    if not isinstance(env, dict) or "name" not in env:
        raise ConfigError("env needs a name", _line_of(text, "env"), "env")
    env_name = env["name"]
    if env_name not in ENVIRONMENTS:
        raise ConfigError(f"unknown environment {env_name!r}", _line_of(text, "env"), "env.name")
    env_params = env.get("params", {})
    bad = sorted(set(env_params) - set(ENVIRONMENTS[env_name].defaults))
    if bad:
        raise ConfigError(f"unknown parameter for {env_name}", _line_of(text, bad[0]),
                          f"env.params.{bad[0]}")

    raw_algorithms = data.get("algorithms")
    if not isinstance(raw_algorithms, list) or not raw_algorithms:
        raise ConfigError("algorithms must be a non-empty list",
                          _line_of(text, "algorithms"), "algorithms")
    algorithms = []
    for i, entry in enumerate(raw_algorithms):
        if isinstance(entry, str):
            entry = {"algorithm": entry}
        try:
            entry = dict(entry)
            name = entry.pop("algorithm", None)
            algorithms.append(default_config(name, env_name, **entry))
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc), _line_of(text, "algorithms"), f"algorithms[{i}]") from None
    labels = [cfg.label for cfg in algorithms]
    duplicates = sorted({label for label in labels if labels.count(label) > 1})
    if duplicates:
        raise ConfigError(f"duplicate algorithm label {duplicates[0]!r}; set 'label' to tell them apart",
                          _line_of(text, "algorithms"), "algorithms")

    seeds = data.get("seeds", list(config.DEFAULT_SEEDS))
    if not isinstance(seeds, list) or not seeds or not all(
            isinstance(s, int) and not isinstance(s, bool) and s >= 0 for s in seeds):
        raise ConfigError("seeds must be a non-empty list of non-negative integers",
                          _line_of(text, "seeds"), "seeds")

    record_timing = data.get("record_timing", True)
    if not isinstance(record_timing, bool):
        raise ConfigError("record_timing must be true or false",
                          _line_of(text, "record_timing"), "record_timing")

    return ExperimentConfig(
        env=env_name,
        env_params=env_params,
        algorithms=algorithms,
        seeds=seeds,
        n_trials=_positive_int(data, "n_trials", config.DEFAULT_TRIALS, text),
        checkpoint_every=_positive_int(data, "checkpoint_every", config.CHECKPOINT_EVERY, text),
        eval_trajectories=_positive_int(data, "eval_trajectories", config.EVAL_TRAJECTORIES, text),
        output=str(data.get("output", "")),
        record_timing=record_timing,
    )


def load_experiment(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_experiment(text)


# ---------------------------------------------------------------------------
# CSV helpers
# ---------------------------------------------------------------------------

def _read_results(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as f:
        first = f.readline()
        if first.rstrip("\n") != SCHEMA_LINE:
            raise ConfigError(f"{path} is not a results file (schema line: {first.strip()!r})", 1)
        return list(csv.DictReader(f))


def _load_already_done(path: Path) -> set[tuple[str, int]]:
    """(algorithm, seed) cells already present in an existing results CSV."""
    done: set[tuple[str, int]] = set()
    if not path.exists():
        return done
    for row in _read_results(path):
        done.add((row.get("algorithm", ""), int(row.get("seed", -1))))
    return done


def _start_csv(path: Path, resume: bool) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if resume and path.exists():
        with open(path, newline="", encoding="utf-8") as f:
            f.readline()
            header = next(csv.reader(f), None)
        if header != RESULT_COLUMNS:
            raise ConfigError(f"cannot resume: {path} has columns {header}", 2)
        return
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(SCHEMA_LINE + "\n")
        csv.DictWriter(f, fieldnames=RESULT_COLUMNS).writeheader()


def _append_rows(path: Path, rows: list[dict]) -> None:
    with open(path, "a", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=RESULT_COLUMNS)
        writer.writerows(rows)
        f.flush()


# ---------------------------------------------------------------------------
# Batch runner
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CellTask:
    env: str
    env_params: dict
    algorithm: dict
    seed: int
    n_trials: int
    checkpoint_every: int
    eval_trajectories: int
    oracle_v: float
    record_timing: bool


def run_cell(task: CellTask) -> tuple[tuple[str, int], list[dict], str | None]:
    """One (algorithm, seed) learning curve; errors come back as text instead of raising."""
    cfg = AlgorithmConfig.from_dict(task.algorithm)
    key = (cfg.label, task.seed)
    try:
        mdp = make_env(task.env, **task.env_params)
        report = run_learning_curve(
            mdp, cfg, task.n_trials, task.checkpoint_every, task.eval_trajectories,
            task.seed, oracle_v=task.oracle_v, record_timing=task.record_timing)
    except Exception as exc:
        log.error("Cell %s seed=%d failed: %s", cfg.label, task.seed, exc)
        return key, [], f"{type(exc).__name__}: {exc}"
    return key, report.rows(), None


@dataclass
class RunSummary:
    output: Path
    cells: int = 0
    skipped: int = 0
    failed: list[tuple[str, int]] = field(default_factory=list)


def run_experiments(
    exp: ExperimentConfig,
    output_dir: str | Path = config.OUTPUT_DIR,
    workers: int = config.WORKERS,
    resume: bool = False,
) -> RunSummary:
    """Run every (algorithm, seed) cell and append its checkpoints to the results CSV."""
    output = Path(exp.output)
    if not output.is_absolute():
        output = Path(output_dir) / output
    summary = RunSummary(output)

    _start_csv(output, resume)
    config_path = output.with_name(output.name + ".config.json")
    config_path.write_text(json.dumps(exp.resolved(), indent=2, sort_keys=True) + "\n",
                           encoding="utf-8")

    done = _load_already_done(output) if resume else set()
    mdp = make_env(exp.env, **exp.env_params)
    oracle_v = oracle_value(mdp)
    log.info("Environment %s, oracle value %.6f", mdp.name, oracle_v)

    tasks = []
    for cfg in exp.algorithms:
        for seed in exp.seeds:
            if (cfg.label, seed) in done:
                summary.skipped += 1
                log.info("Already done (skipping): %s seed=%d", cfg.label, seed)
                continue
            tasks.append(CellTask(exp.env, dict(exp.env_params), cfg.to_dict(), seed,
                                  exp.n_trials, exp.checkpoint_every, exp.eval_trajectories,
                                  oracle_v, exp.record_timing))

    print(f"\n{'=' * 60}")
    print(f"  {len(tasks)} cell(s) to run on {exp.env}  "
          f"({len(exp.algorithms)} algorithm(s) x {len(exp.seeds)} seed(s))")
    if summary.skipped:
        print(f"  Resuming: {summary.skipped} cell(s) already in {output}")
    print(f"{'=' * 60}")

    def consume(results) -> None:
        for i, ((label, seed), rows, error) in enumerate(results, start=1):
            summary.cells += 1
            if error is not None:
                summary.failed.append((label, seed))
                print(f"  [{i}/{len(tasks)}] {label} seed={seed}  ERROR: {error}")
                continue
            _append_rows(output, rows)
            final = rows[-1] if rows else {}
            print(f"  [{i}/{len(tasks)}] {label} seed={seed}  "
                  f"value={float(final.get('est_value', 'nan')):.4f}  "
                  f"regret={float(final.get('simple_regret', 'nan')):.4f}")

    if workers <= 1 or len(tasks) <= 1:
        consume(map(run_cell, tasks))
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            try:
                consume(executor.map(run_cell, tasks))
            except KeyboardInterrupt:
                executor.shutdown(wait=False, cancel_futures=True)
                raise

    print(f"\n{'=' * 60}")
    print(f"  DONE! {summary.cells} cell(s) run, {summary.skipped} skipped.")
    if summary.failed:
        print(f"  Errors: {len(summary.failed)} cell(s) failed")
    print(f"  Results saved to: {output}")
    print(f"{'=' * 60}")
    return summary


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _parse_param(item: str) -> tuple[str, object]:
    key, sep, raw = item.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {item!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _cmd_run(args: argparse.Namespace) -> int:
    exp = load_experiment(args.config)
    if args.seeds:
        exp.seeds = list(args.seeds)
    summary = run_experiments(exp, args.output_dir, args.workers, args.resume)
    return EXIT_FAILED if summary.failed else EXIT_OK


def _cmd_bench(args: argparse.Namespace) -> int:
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sampling = bench_sampling(args.actions, args.trials, args.repeats)
    draws = bench_alias_draws(args.sizes, args.draws, args.repeats)
    sampling.to_csv(out_dir / "bench_sampling.csv", index=False, float_format="%.6g")
    draws.to_csv(out_dir / "bench_alias_draws.csv", index=False, float_format="%.6g")
    print(f"\n{'=' * 60}")
    print("  BTS trials/sec (median), variant / baseline")
    print(sampling.to_string(index=False))
    print("\n  Alias draw time (median ns per draw)")
    print(draws.to_string(index=False))
    print(f"\n  Results saved to: {out_dir}")
    print(f"{'=' * 60}")
    return EXIT_OK


def _cmd_oracle(args: argparse.Namespace) -> int:
    params = dict(args.param or [])
    mdp = make_env(args.env, **params)
    output = Path(args.output or Path(args.output_dir) / f"{args.env}.oracle.{args.kind}.csv")
    frame = dump_oracle(mdp, output, args.kind, args.alpha)
    root = frame[(frame["t"] == 0) & (frame["state"] == mdp.initial_state())]
    print(f"  {mdp.name}: V(s0) = {root['v'].iloc[0]:.6f}  ({len(frame)} rows -> {output})")
    return EXIT_OK


def _cmd_list_envs(args: argparse.Namespace) -> int:
    for name, entry in ENVIRONMENTS.items():
        params = ", ".join(f"{k}={v!r}" for k, v in entry.defaults.items())
        print(f"  {name:<18} {entry.description}")
        print(f"  {'':<18} defaults: {params or '-'}")
    return EXIT_OK


def _cmd_summarize(args: argparse.Namespace) -> int:
    rows = pd.DataFrame(_read_results(Path(args.results)))
    if rows.empty:
        print(f"  {args.results}: no rows")
        return EXIT_OK
    for col in ("seed", "n_trials"):
        rows[col] = rows[col].astype(int)
    for col in ("est_value", "simple_regret"):
        rows[col] = rows[col].astype(float)
    summary = summarize_reports(rows)
    if args.output:
        summary.to_csv(args.output, index=False, float_format="%.6g")
        print(f"  Summary saved to: {args.output}")
    else:
        print(summary.to_string(index=False))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Boltzmann / UCT tree search experiments: run, bench, oracle, list-envs, summarize",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run an experiment file and write a results CSV")
    run.add_argument("config", help="JSON experiment file (see experiments/)")
    run.add_argument("--output-dir", default=config.OUTPUT_DIR,
                     help=f"Folder for results (default: {config.OUTPUT_DIR})")
    run.add_argument("--seeds", type=int, nargs="+", help="Override the experiment's seeds")
    run.add_argument("--workers", type=int, default=config.WORKERS,
                     help=f"Worker processes (default: {config.WORKERS})")
    run.add_argument("--resume", action="store_true",
                     help="Skip (algorithm, seed) cells already present in the output CSV")
    run.set_defaults(handler=_cmd_run)

    bench = sub.add_parser("bench", help="Alias-sampling and fast-backup micro-benchmarks")
    bench.add_argument("--actions", type=int, nargs="+", default=config.BENCH_ACTION_COUNTS)
    bench.add_argument("--trials", type=int, default=config.BENCH_TRIALS)
    bench.add_argument("--repeats", type=int, default=config.BENCH_REPEATS)
    bench.add_argument("--sizes", type=int, nargs="+", default=config.BENCH_SAMPLE_SIZES)
    bench.add_argument("--draws", type=int, default=config.BENCH_DRAWS)
    bench.add_argument("--output-dir", default=config.OUTPUT_DIR)
    bench.set_defaults(handler=_cmd_bench)

    oracle = sub.add_parser("oracle", help="Dump an exact value table")
    oracle.add_argument("env", choices=sorted(ENVIRONMENTS))
    oracle.add_argument("--param", type=_parse_param, action="append",
                        help="Environment parameter as key=value (repeatable)")
    oracle.add_argument("--kind", choices=["standard", "soft", "minimax"], default="standard")
    oracle.add_argument("--alpha", type=float, help="Temperature for --kind soft")
    oracle.add_argument("-o", "--output", help="Output CSV (default: <output-dir>/<env>.oracle.<kind>.csv)")
    oracle.add_argument("--output-dir", default=config.OUTPUT_DIR)
    oracle.set_defaults(handler=_cmd_oracle)

    envs = sub.add_parser("list-envs", help="List environments and their default parameters")
    envs.set_defaults(handler=_cmd_list_envs)

    summarize = sub.add_parser("summarize", help="Aggregate a results CSV across seeds")
    summarize.add_argument("results", help="Results CSV written by 'run'")
    summarize.add_argument("-o", "--output", help="Write the summary to a CSV instead of stdout")
    summarize.set_defaults(handler=_cmd_summarize)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else config.LOG_LEVEL,
        format="%(asctime)s  %(levelname)-8s  %(message)s",
        datefmt="%H:%M:%S",
    )
    try:
        return args.handler(args)
    except ConfigError as exc:
        log.error("Config error: %s", exc)
        print(f"  CONFIG ERROR: {exc}")
        return EXIT_FAILED
    except ValueError as exc:
        log.error("%s", exc)
        print(f"  ERROR: {exc}")
        return EXIT_FAILED
    except KeyboardInterrupt:
        print("\n  Interrupted. Rows written so far are kept; rerun with --resume to continue.")
        return EXIT_INTERRUPTED


if __name__ == "__main__":
    sys.exit(main())
