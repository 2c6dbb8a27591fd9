"""
Monte-Carlo experiment engine.

Loads experiment configurations, fans seeded trials out over the worker pool,
scores them with the RMSE metric and writes CSV/JSON artifacts.
"""
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import jsonlines
import numpy as np
import pandas as pd
import scipy
import toml
from loguru import logger
from pydantic import ValidationError

from .covariance import scm, shrinkage_coefficient, toeplitz_rectify
from .dependencies import ExperimentContext, RunDependencies, run_fork_join
from .models import (
    ConfigValidationError,
    EstimationError,
    EstimatorVariant,
    ExperimentConfig,
    ReceiveMode,
    ResolutionError,
    RmseRow,
    RmseTable,
    RunManifest,
    SpectrumGrid,
    SweepPoint,
    TrialFailure,
    TrialRecord,
)
from .pipelines import run_pipeline
from .providers import trial_seeds
from .simulation import simulate_dataset
from .virtual_array import rearrange_ars

PRESET_DIR = Path(__file__).parent / "presets"
FLOAT_FORMAT = "%.10g"
WORST_CASE_OFFSET_DEG = 90.0

RMSE_COLUMNS = [
    "variant", "snr_db", "num_blocks", "num_movements",
    "rmse_deg", "failures", "trials", "mean_rho",
]
RHO_COLUMNS = ["snr_db", "num_blocks", "mean_rho", "min_rho", "max_rho", "trials"]


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------

def compute_rmse(estimates: Sequence[Sequence[float]], truth: Sequence[float]) -> float:
    """
    Root-mean-square DOA error in degrees over trials and paths.

    Estimates and truth are paired positionally after sorting both.
    """
    truth_sorted = np.sort(np.asarray(truth, dtype=float))
    if len(estimates) == 0:
        raise ValueError("no trials to score")
    squared = 0.0
    for trial in estimates:
        if len(trial) != len(truth_sorted):
            raise ValueError(f"trial has {len(trial)} estimates, expected {len(truth_sorted)}")
        squared += float(np.sum((np.sort(np.asarray(trial, dtype=float)) - truth_sorted) ** 2))
    return math.sqrt(squared / (len(estimates) * len(truth_sorted)))


def worst_case_estimates(truth: Sequence[float]) -> List[float]:
    """Stand-in estimates for a failed trial, each 90 degrees off."""
    return [float(theta) + WORST_CASE_OFFSET_DEG for theta in sorted(truth)]


# ---------------------------------------------------------------------------
# Configuration loading
# ---------------------------------------------------------------------------

def list_presets() -> Dict[str, str]:
    """Preset name -> description for every shipped preset."""
    presets = {}
    for path in sorted(PRESET_DIR.glob("*.toml")):
        with path.open(encoding="utf-8") as fh:
            presets[path.stem] = toml.load(fh).get("description", "")
    return presets


def load_config(path: Path) -> ExperimentConfig:
    """
    Parse and validate a TOML experiment file.

    Raises:
        ConfigValidationError: unreadable TOML or a model/identifiability violation
    """
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as fh:
            raw = toml.load(fh)
    except FileNotFoundError as e:
        raise ConfigValidationError(f"config file not found: {path}") from e
    except toml.TomlDecodeError as e:
        raise ConfigValidationError(f"invalid TOML in {path}: {e}") from e

    raw.setdefault("name", path.stem)
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigValidationError(f"{path.name}: {e}") from e


def load_preset(name: str) -> ExperimentConfig:
    path = PRESET_DIR / f"{name}.toml"
    if not path.exists():
        available = ", ".join(sorted(list_presets()))
        raise ConfigValidationError(f"unknown preset {name!r}; available: {available}")
    return load_config(path)


def resolve_config(config: ExperimentConfig, deps: RunDependencies) -> ExperimentConfig:
    """Fill values the file leaves open from the run dependencies."""
    try:
        return config.with_overrides(
            only_missing=True,
            trials=deps.trials,
            master_seed=deps.master_seed,
            grid_step_deg=deps.grid_step_deg,
            nystrom_fraction=deps.nystrom_fraction,
        )
    except ValidationError as e:
        raise ConfigValidationError(str(e)) from e


# ---------------------------------------------------------------------------
# Trials
# ---------------------------------------------------------------------------

@dataclass
class TrialTask:
    """One Monte-Carlo trial; picklable for the process pool."""

    config: ExperimentConfig
    point: SweepPoint
    trial: int
    keep_spectrum: bool = False


@dataclass
class TrialOutcome:
    record: TrialRecord
    spectrum: Optional[SpectrumGrid] = None


def run_trial(task: TrialTask) -> TrialOutcome:
    """Simulate and estimate one trial; estimation failures are scored, not raised."""
    config = task.config
    dataset_seed, nystrom_seed = trial_seeds(config.master_seed, task.point.index, task.trial)
    pipeline = config.pipeline_config(task.point, seed=dataset_seed, nystrom_seed=nystrom_seed)
    dataset = simulate_dataset(pipeline.scene, pipeline.array, pipeline.num_blocks, pipeline.seed)

    try:
        result = run_pipeline(pipeline, dataset)
    except EstimationError as e:
        details = {"found": e.found, "required": e.required} if isinstance(e, ResolutionError) else None
        record = TrialRecord(
            point=task.point.index,
            trial=task.trial,
            estimates_deg=worst_case_estimates(pipeline.scene.flat_doas_deg),
            failed=True,
            failure=TrialFailure(error_type=type(e).__name__, message=str(e), details=details),
        )
        spectrum = getattr(e, "spectrum", None) if task.keep_spectrum else None
        return TrialOutcome(record=record, spectrum=spectrum)

    record = TrialRecord(
        point=task.point.index,
        trial=task.trial,
        estimates_deg=result.doas_deg,
        rho=result.rho,
    )
    return TrialOutcome(record=record, spectrum=result.spectrum if task.keep_spectrum else None)


def _summarize_point(point: SweepPoint, records: List[TrialRecord], truth: List[float]) -> RmseRow:
    rhos = [r.rho for r in records if r.rho is not None]
    return RmseRow(
        variant=point.variant,
        snr_db=point.snr_db,
        num_blocks=point.num_blocks,
        num_movements=point.num_movements,
        rmse_deg=compute_rmse([r.estimates_deg for r in records], truth),
        failures=sum(r.failed for r in records),
        trials=len(records),
        mean_rho=float(np.mean(rhos)) if rhos else None,
    )


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _versions() -> Dict[str, str]:
    from . import __version__

    return {
        "fluid_doa": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
    }


def write_manifest(out_dir: Path, context: ExperimentContext, config: ExperimentConfig) -> Path:
    manifest = RunManifest(
        experiment=config.name,
        command=context.command,
        config_hash=context.config_hash,
        master_seed=config.master_seed,
        trials=config.trials,
        versions=_versions(),
    )
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest.model_dump(), indent=2))
    return path


def write_spectrum_csv(spectrum: SpectrumGrid, path: Path) -> Path:
    frame = pd.DataFrame({"angle_deg": spectrum.angles_deg, "spectrum": spectrum.values})
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def rmse_frame(table: RmseTable) -> pd.DataFrame:
    rows = [row.model_dump(mode="json") for row in table.rows]
    frame = pd.DataFrame(rows, columns=RMSE_COLUMNS)
    frame["mean_rho"] = pd.to_numeric(frame["mean_rho"]).astype(float)
    return frame


def _prepare_out_dir(out_dir: Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------

def run_experiment(config: ExperimentConfig, deps: RunDependencies) -> RmseTable:
    """
    Run every sweep point for the configured number of trials.

    Writes rmse.csv and manifest.json to deps.output_dir, plus trials.jsonl and
    spectra/point_XXX.csv when the config or deps ask for them. Results are
    identical for any worker count.
    """
    config = resolve_config(config, deps)
    out_dir = _prepare_out_dir(deps.output_dir)
    context = ExperimentContext(command="rmse", config=config.model_dump(mode="json"))
    points = config.sweep_points()
    keep_spectra = config.output.spectra

    logger.info(
        f"Experiment {config.name}: {len(points)} sweep points x {config.trials} trials "
        f"on {deps.workers} worker(s)"
    )
    tasks = [
        TrialTask(config=config, point=point, trial=t, keep_spectrum=keep_spectra and t == 0)
        for point in points
        for t in range(config.trials)
    ]
    outcomes = run_fork_join(run_trial, tasks, deps.workers)

    truth = sorted(theta for row in config.scene.doas_deg for theta in row)
    table = RmseTable(experiment=config.name)
    for point in points:
        start = point.index * config.trials
        chunk = outcomes[start:start + config.trials]
        row = _summarize_point(point, [o.record for o in chunk], truth)
        table.rows.append(row)
        logger.info(
            f"[{point.index}] {point.variant.value} SNR={point.snr_db:g} dB N={point.num_blocks} "
            f"G={point.num_movements}: RMSE={row.rmse_deg:.4g} deg, failures={row.failures}"
        )
        if keep_spectra and chunk[0].spectrum is not None:
            spectra_dir = _prepare_out_dir(out_dir / "spectra")
            write_spectrum_csv(chunk[0].spectrum, spectra_dir / f"point_{point.index:03d}.csv")

    rmse_frame(table).to_csv(out_dir / "rmse.csv", index=False, float_format=FLOAT_FORMAT)
    if config.output.save_trials or deps.save_trials:
        with jsonlines.open(out_dir / "trials.jsonl", mode="w") as writer:
            writer.write_all(o.record.model_dump(mode="json") for o in outcomes)
    write_manifest(out_dir, context, config)
    logger.info(f"Wrote {out_dir / 'rmse.csv'}")
    return table


def run_spectrum(config: ExperimentConfig, deps: RunDependencies, point_index: int = 0) -> SpectrumGrid:
    """
    Spectrum of one realization (trial 0) at a sweep point; writes spectrum.csv.

    The spectrum is written even when peak picking fails for that realization.
    """
    config = resolve_config(config, deps)
    points = config.sweep_points()
    if not 0 <= point_index < len(points):
        raise ConfigValidationError(f"sweep point {point_index} outside [0, {len(points) - 1}]")
    point = points[point_index]
    outcome = run_trial(TrialTask(config=config, point=point, trial=0, keep_spectrum=True))
    if outcome.spectrum is None:
        raise EstimationError(outcome.record.failure.message if outcome.record.failure else "no spectrum")
    if outcome.record.failed:
        logger.warning(f"Peak picking failed: {outcome.record.failure.message}")
    else:
        logger.info(f"Estimated DOAs: {[round(t, 3) for t in outcome.record.estimates_deg]}")

    out_dir = _prepare_out_dir(deps.output_dir)
    context = ExperimentContext(command="spectrum", config=config.model_dump(mode="json"))
    write_spectrum_csv(outcome.spectrum, out_dir / "spectrum.csv")
    write_manifest(out_dir, context, config)
    return outcome.spectrum


@dataclass
class RhoTask:
    config: ExperimentConfig
    cell: int
    snr_db: float
    num_blocks: int
    num_movements: int
    trial: int


def run_rho_trial(task: RhoTask) -> float:
    """Shrinkage coefficient of one simulated ARS dataset."""
    config = task.config
    dataset_seed, _ = trial_seeds(config.master_seed, task.cell, task.trial)
    point = SweepPoint(
        index=task.cell,
        variant=EstimatorVariant.TMRLS_MUSIC,
        snr_db=task.snr_db,
        num_blocks=task.num_blocks,
        num_movements=task.num_movements,
    )
    pipeline = config.pipeline_config(point, seed=dataset_seed)
    dataset = simulate_dataset(pipeline.scene, pipeline.array, pipeline.num_blocks, pipeline.seed)
    sample = scm(rearrange_ars(dataset.stacked, pipeline.array).data)
    return shrinkage_coefficient(sample, toeplitz_rectify(sample), pipeline.num_blocks).rho


def run_rho_surface(config: ExperimentConfig, deps: RunDependencies) -> pd.DataFrame:
    """
    Mean shrinkage coefficient over the (SNR, N) grid; writes rho_surface.csv.

    Uses the first movement count of the sweep. Only the covariance stages
    run, not the subspace search.
    """
    config = resolve_config(config, deps)
    if config.array.mode is not ReceiveMode.ARS:
        raise ConfigValidationError("rho-surface needs an ARS configuration")
    if min(config.sweep.num_blocks) < 4:
        raise ConfigValidationError("rho-surface needs N >= 4 blocks at every sweep point")

    movements = config.sweep.num_movements[0]
    cells: List[Tuple[float, int]] = [
        (snr, n) for n in config.sweep.num_blocks for snr in config.sweep.snr_db
    ]
    logger.info(f"rho surface: {len(cells)} cells x {config.trials} trials, G={movements}")
    tasks = [
        RhoTask(config=config, cell=i, snr_db=snr, num_blocks=n, num_movements=movements, trial=t)
        for i, (snr, n) in enumerate(cells)
        for t in range(config.trials)
    ]
    rhos = np.asarray(run_fork_join(run_rho_trial, tasks, deps.workers)).reshape(len(cells), config.trials)

    frame = pd.DataFrame(
        {
            "snr_db": [snr for snr, _ in cells],
            "num_blocks": [n for _, n in cells],
            "mean_rho": rhos.mean(axis=1),
            "min_rho": rhos.min(axis=1),
            "max_rho": rhos.max(axis=1),
            "trials": config.trials,
        },
        columns=RHO_COLUMNS,
    )
    out_dir = _prepare_out_dir(deps.output_dir)
    frame.to_csv(out_dir / "rho_surface.csv", index=False, float_format=FLOAT_FORMAT)
    context = ExperimentContext(command="rho-surface", config=config.model_dump(mode="json"))
    write_manifest(out_dir, context, config)
    logger.info(f"Wrote {out_dir / 'rho_surface.csv'}")
    return frame
