"""Shared fixtures: one synthetic demo dataset per test session."""

import pytest

from reservekit import make_demo_dataset


@pytest.fixture(scope="session")
def demo_config(tmp_path_factory):
    """Path to the config.yaml of a self-contained synthetic dataset
    (14 training days, 7 holdout days) used by the CLI and gate tests."""
    root = tmp_path_factory.mktemp("demo")
    return make_demo_dataset(root, seed=7, days=14, holdout_days=7)
