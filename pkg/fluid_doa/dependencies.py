"""
Run dependencies for the fluid-antenna DOA harness.

This module carries the process-level knobs a Monte-Carlo run needs, the
per-experiment context used for provenance, and the fork/join pool that fans
trials out over worker processes.
"""
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, TypeVar

from loguru import logger

from .settings import load_settings

T = TypeVar("T")
R = TypeVar("R")


@dataclass
class RunDependencies:
    """
    Process-level configuration injected into every harness entry point.
    Values come from Settings unless overridden on the command line.
    """

    master_seed: int
    trials: int
    workers: int = 1
    grid_step_deg: float = 0.05
    nystrom_fraction: float = 0.5
    output_dir: Path = Path("./results")
    save_trials: bool = False

    @classmethod
    def from_settings(cls, **kwargs):
        """Create dependencies from settings; None-valued overrides are ignored."""
        settings = load_settings()
        overrides = {k: v for k, v in kwargs.items() if v is not None}
        return cls(
            master_seed=overrides.get("master_seed", settings.master_seed),
            trials=overrides.get("trials", settings.default_trials),
            workers=overrides.get("workers", settings.workers),
            grid_step_deg=overrides.get("grid_step_deg", settings.grid_step_deg),
            nystrom_fraction=overrides.get("nystrom_fraction", settings.nystrom_fraction),
            output_dir=Path(overrides.get("output_dir", settings.output_dir)),
            save_trials=overrides.get("save_trials", False),
        )


@dataclass
class ExperimentContext:
    """
    Context for one experiment run.
    """
    command: str  # "rmse", "spectrum" or "rho-surface"
    config: Dict[str, Any]
    config_hash: Optional[str] = None

    def generate_config_hash(self) -> str:
        """Hash of the canonical JSON form of the experiment configuration."""
        config_str = json.dumps(self.config, sort_keys=True, default=str)
        return hashlib.sha256(f"{self.command}:{config_str}".encode()).hexdigest()

    def __post_init__(self):
        if self.config_hash is None:
            self.config_hash = self.generate_config_hash()


def run_fork_join(fn: Callable[[T], R], tasks: Iterable[T], workers: int = 1) -> List[R]:
    """
    Apply fn to every task and return results in task order.

    With one worker the tasks run in-process; otherwise they are mapped over a
    process pool. fn must be a module-level function so it can be pickled.
    """
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]

    logger.debug(f"Fanning {len(tasks)} tasks over {workers} worker processes")
    chunksize = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=chunksize))
