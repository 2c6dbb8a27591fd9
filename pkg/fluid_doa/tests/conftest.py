"""
Test configuration for the fluid-antenna DOA toolkit.

This module provides fixtures shared across the test modules: array specs,
scenes, random Hermitian matrices, small experiment configurations and run
dependencies writing into a temporary directory.
"""
from pathlib import Path

import numpy as np
import pytest

from ..dependencies import RunDependencies
from ..models import ArraySpec, ExperimentConfig, ReceiveMode, Scene
from ..settings import Settings


# Settings and dependencies
@pytest.fixture
def test_settings(tmp_path):
    """Create test settings."""
    return Settings(
        grid_step_deg=0.1,
        default_trials=3,
        master_seed=7,
        workers=1,
        output_dir=str(tmp_path),
        debug=True,
    )


@pytest.fixture
def run_deps(tmp_path) -> RunDependencies:
    """Dependencies for small harness runs."""
    return RunDependencies(
        master_seed=7,
        trials=3,
        workers=1,
        grid_step_deg=0.1,
        nystrom_fraction=0.5,
        output_dir=Path(tmp_path) / "out",
    )


# Arrays and scenes
@pytest.fixture
def ars_spec() -> ArraySpec:
    return ArraySpec(mode=ReceiveMode.ARS, num_antennas=2, num_movements=2)


@pytest.fixture
def nars_spec() -> ArraySpec:
    return ArraySpec(mode=ReceiveMode.NARS, num_antennas=3, num_movements=2)


@pytest.fixture
def two_path_scene() -> Scene:
    return Scene(doas_deg=[[-20.0, 35.0]], noise_var=0.1)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def make_random_hermitian(rng: np.random.Generator, size: int, num_blocks: int = 50) -> np.ndarray:
    """Sample covariance of complex Gaussian data: Hermitian and PSD."""
    data = rng.standard_normal((size, num_blocks)) + 1j * rng.standard_normal((size, num_blocks))
    return data @ data.conj().T / num_blocks


@pytest.fixture
def random_hermitian(rng):
    """Factory for random Hermitian PSD matrices."""
    def _make(size: int, num_blocks: int = 50) -> np.ndarray:
        return make_random_hermitian(rng, size, num_blocks)
    return _make


# Experiments
SMALL_EXPERIMENT = {
    "name": "small",
    "description": "two well separated paths, M=4",
    "trials": 3,
    "master_seed": 11,
    "array": {"mode": "ARS", "num_antennas": 4},
    "scene": {"doas_deg": [[-20.0, 30.0]]},
    "estimator": {"grid_step_deg": 0.1},
    "sweep": {
        "snr_db": [10.0, 20.0],
        "num_blocks": [50],
        "num_movements": [1],
        "variants": ["TMRLS_MUSIC", "FPA_MUSIC"],
    },
}


@pytest.fixture
def small_experiment() -> ExperimentConfig:
    return ExperimentConfig.model_validate(SMALL_EXPERIMENT)


SMALL_EXPERIMENT_TOML = """
name = "small"
trials = 2
master_seed = 3

[array]
mode = "ARS"
num_antennas = 4

[scene]
doas_deg = [[-20.0, 30.0]]

[estimator]
grid_step_deg = 0.1

[sweep]
snr_db = [20.0]
num_blocks = [40]
num_movements = [1]
variants = ["TMRLS_MUSIC"]
"""


@pytest.fixture
def small_config_file(tmp_path) -> Path:
    path = Path(tmp_path) / "small.toml"
    path.write_text(SMALL_EXPERIMENT_TOML)
    return path
