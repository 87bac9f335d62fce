#!/usr/bin/env python3
"""
Launcher for the experiment CLI:

    python3 run.py run experiments/chain.json          # Run an experiment file
    python3 run.py run experiments/chain.json --resume # Resume after interruption
    python3 run.py bench                               # Alias / fast-backup timings
    python3 run.py oracle dchain                       # Exact value table
    python3 run.py list-envs                           # Available environments

Config: edit treesearch/config.py (or a .env file) to change run defaults.
"""

from __future__ import annotations

import sys

from treesearch.pipeline import main

if __name__ == "__main__":
    sys.exit(main())
