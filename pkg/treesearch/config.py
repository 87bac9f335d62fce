"""
Planner Configuration
=====================
Edit the .env file at the project root to override run defaults
(output folder, worker count, log level). Experiment-specific settings
live in JSON experiment files; see experiments/ for examples.
"""

from __future__ import annotations

import os
from dotenv import load_dotenv

load_dotenv()

# ---------------------------------------------------------------------------
# Run defaults
# ---------------------------------------------------------------------------

# Folder where CSV results, oracle tables and benchmark timings are written
OUTPUT_DIR = os.getenv("TREESEARCH_OUTPUT_DIR", "results")

# Worker processes for (algorithm, seed) cells; 1 = run inline
WORKERS = int(os.getenv("TREESEARCH_WORKERS", "1"))

LOG_LEVEL = os.getenv("TREESEARCH_LOG_LEVEL", "INFO")

# ---------------------------------------------------------------------------
# Evaluation protocol
# ---------------------------------------------------------------------------

# Checkpoint every N trials, each evaluated with M sampled trajectories
CHECKPOINT_EVERY = int(os.getenv("TREESEARCH_CHECKPOINT_EVERY", "250"))
EVAL_TRAJECTORIES = int(os.getenv("TREESEARCH_EVAL_TRAJECTORIES", "250"))

DEFAULT_TRIALS = 5000
DEFAULT_SEEDS = [0]

# ---------------------------------------------------------------------------
# Environments
# ---------------------------------------------------------------------------

FROZEN_LAKE_HORIZON = 100
FROZEN_LAKE_DISCOUNT = 0.99        # goal reward is 0.99^t on arrival at step t

SAILING_HORIZON = 50
SAILING_INITIAL_WIND = 3           # South-East (test setting); 0 = North
# Lowest possible return: horizon 50 at a cost of at most 4 per step
SAILING_INITIAL_VALUE = -200.0

# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------

# Alias tables are rebuilt every |A| visits of a node; None keeps that rule
ALIAS_REBUILD_EVERY: int | None = None

DEFAULT_EPSILON = 1.0
DEFAULT_ALPHA = 1.0

# Final hyperparameters for the gridworld experiments, per algorithm.
# Keys mirror AlgorithmConfig field names; missing fields keep their defaults.
HYPERPARAMETERS: dict[str, dict[str, dict]] = {
    "frozen_lake": {
        "uct": {"uct_bias": "auto", "v_init": 0.0, "q_init": 0.0},
        "ments": {"epsilon": 1.0, "alpha": 0.001, "v_init": 0.0, "q_init": 0.0},
        "bts": {"epsilon": 2.0, "alpha": 0.1, "v_init": 0.0, "q_init": 0.0},
        "dents": {"epsilon": 1.0, "alpha": 0.1, "beta_init": 1.0,
                  "v_init": 0.0, "q_init": 0.0},
    },
    "sailing": {
        "uct": {"uct_bias": "auto", "v_init": SAILING_INITIAL_VALUE,
                "q_init": SAILING_INITIAL_VALUE},
        "ments": {"epsilon": 1.0, "alpha": 10.0, "v_init": SAILING_INITIAL_VALUE,
                  "q_init": SAILING_INITIAL_VALUE},
        "bts": {"epsilon": 1.0, "alpha": 10.0, "v_init": SAILING_INITIAL_VALUE,
                "q_init": SAILING_INITIAL_VALUE},
        "dents": {"epsilon": 1.0, "alpha": 10.0, "beta_init": 10.0,
                  "v_init": SAILING_INITIAL_VALUE, "q_init": SAILING_INITIAL_VALUE},
    },
}

# ---------------------------------------------------------------------------
# Micro-benchmarks
# ---------------------------------------------------------------------------

BENCH_ACTION_COUNTS = [16, 64, 256]
BENCH_TREE_DEPTH = 2
BENCH_TRIALS = 2000
BENCH_REPEATS = 3
BENCH_SAMPLE_SIZES = [16, 4096]
BENCH_DRAWS = 200_000
