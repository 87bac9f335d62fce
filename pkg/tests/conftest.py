"""Shared fixtures and the --runslow switch for full-budget acceptance runs."""

from __future__ import annotations

import numpy as np
import pytest

from treesearch.environments import DChainSpec, make_dchain, make_random_mdp


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run full-budget acceptance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def chain10():
    return make_dchain(DChainSpec(10, 1.0))


@pytest.fixture
def modified_chain10():
    return make_dchain(DChainSpec(10, 0.5))


@pytest.fixture
def stochastic_mdp():
    return make_random_mdp(n_states=6, n_actions=3, horizon=4, n_successors=3, seed=7)


@pytest.fixture
def deterministic_mdp():
    return make_random_mdp(n_states=6, n_actions=3, horizon=3, seed=11, deterministic=True)
