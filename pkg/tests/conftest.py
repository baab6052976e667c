"""Shared test fixtures and configuration."""

from __future__ import annotations

from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np
import pytest

from pose_affordance.core.config import Settings, deep_merge
from pose_affordance.core.logging import clear_global_context
from pose_affordance.core.telemetry import MetricsManager, reset_metrics_manager
from pose_affordance.dataset import synth_generate

# Small widths so whole training runs finish in seconds.
TINY_SETTINGS: dict[str, Any] = {
    "tensor": {"precision": "float64"},
    "attention": {"heads": 2, "head_dim": 4, "feature_channels": 8, "pool_size": 2},
    "heads": {"shared_dim": 8, "hidden_dim": 8, "latent_dim": 4},
    "templates": {"count": 2, "max_iterations": 20},
    "training": {"epochs": 2, "batch_size": 8},
}

SYNTH_SEED = 7
SYNTH_SCENES = 10


def pytest_addoption(parser: pytest.Parser) -> None:
    """Add the ``--runslow`` switch."""
    parser.addoption("--runslow", action="store_true", default=False, help="run end-to-end training tests")


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
    """Skip tests marked ``slow`` unless ``--runslow`` is given."""
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def clean_metrics_registry():
    """Give every test a fresh metrics registry and no leftover log context."""
    manager = reset_metrics_manager()
    yield manager
    clear_global_context()


@pytest.fixture
def isolated_manager() -> MetricsManager:
    """A metrics manager that is not the global one."""
    return MetricsManager(namespace="test")


@pytest.fixture
def make_settings() -> Callable[..., Settings]:
    """Build tiny settings with nested overrides, ignoring the environment."""

    def factory(overrides: dict[str, Any] | None = None) -> Settings:
        return Settings.model_validate(deep_merge(TINY_SETTINGS, overrides or {}))

    return factory


@pytest.fixture
def tiny_settings(make_settings: Callable[..., Settings]) -> Settings:
    """Tiny settings with every default flag."""
    return make_settings()


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator."""
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def synth_dataset(tmp_path_factory: pytest.TempPathFactory) -> Path:
    """A small synthetic dataset shared by the whole session (8 train, 2 test scenes)."""
    root = tmp_path_factory.mktemp("synth")
    synth_generate(root, seed=SYNTH_SEED, n_scenes=SYNTH_SCENES)
    return root


@pytest.fixture(scope="session")
def trained_run(synth_dataset: Path, tmp_path_factory: pytest.TempPathFactory) -> Path:
    """A run directory with every default head trained for two epochs on tiny settings."""
    from pose_affordance.pipeline import train_run

    run_dir = tmp_path_factory.mktemp("run")
    train_run(Settings.model_validate(TINY_SETTINGS), synth_dataset, run_dir)
    return run_dir
