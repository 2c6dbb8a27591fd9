"""
Monte-Carlo acceptance runs over the shipped presets.

These take minutes and are deselected by default; run them with `pytest -m slow`.
"""
from dataclasses import replace

import jsonlines
import numpy as np
import pytest
from scipy.stats import spearmanr

from ..harness import load_preset, run_experiment
from ..models import EstimatorVariant, ExperimentConfig

pytestmark = pytest.mark.slow


def quiet(config: ExperimentConfig, **sections) -> ExperimentConfig:
    """Copy of a preset with spectra off and the given sections replaced."""
    data = config.model_dump(mode="json")
    data["output"] = {"spectra": False, "save_trials": False}
    for key, value in sections.items():
        data[key] = dict(data[key], **value) if isinstance(value, dict) else value
    return ExperimentConfig.model_validate(data)


@pytest.fixture
def deps(run_deps):
    """Four workers on the default 0.05 degree grid."""
    return replace(run_deps, workers=4, grid_step_deg=0.05)


@pytest.mark.parametrize("preset", ["fig6b", "fig6d"])
def test_underdetermined_resolution(preset, deps):
    """Test that more paths than antennas are resolved within 1 degree in 90% of trials."""
    config = quiet(load_preset(preset), output={"save_trials": True}, trials=200)
    run_experiment(config, deps)

    truth = np.sort(config.scene.flat_doas_deg)
    with jsonlines.open(deps.output_dir / "trials.jsonl") as reader:
        records = list(reader)
    assert len(records) == 200
    resolved = sum(
        not r["failed"] and np.max(np.abs(np.sort(r["estimates_deg"]) - truth)) <= 1.0 for r in records
    )
    assert resolved >= 180


def test_nystrom_matches_exact_evd(deps):
    """Test that the Nystrom subspace costs at most 0.05 degrees RMSE against the exact EVD."""
    config = quiet(
        load_preset("fig8a"),
        trials=200,
        sweep={"snr_db": [1.0, 4.0, 7.0, 10.0], "num_movements": [1], "variants": ["TMRLS_MUSIC", "EXACT_EVD"]},
    )
    table = run_experiment(config, deps)
    for snr in config.sweep.snr_db:
        nystrom = table.lookup(EstimatorVariant.TMRLS_MUSIC, snr_db=snr)
        exact = table.lookup(EstimatorVariant.EXACT_EVD, snr_db=snr)
        assert nystrom.rmse_deg - exact.rmse_deg <= 0.05, snr


@pytest.mark.parametrize("preset, variant", [
    ("fig10ars", EstimatorVariant.TMRLS_MUSIC),
    ("fig10nars", EstimatorVariant.TMR_MUSIC),
])
def test_movements_reduce_error(preset, variant, deps):
    """Test that RMSE falls monotonically with the movement count."""
    config = quiet(load_preset(preset), trials=200, sweep={"num_blocks": [200]})
    table = run_experiment(config, deps)
    movements = [0, 1, 2, 3, 4]
    rmse = [table.lookup(variant, num_movements=g).rmse_deg for g in movements]
    correlation, _ = spearmanr(movements, rmse)
    assert correlation <= -0.8, rmse


def test_one_movement_beats_tenfold_snapshots(deps):
    """Test that G=1 with N=20 beats the fixed array with N=200."""
    config = quiet(load_preset("fig10ars"), trials=200, sweep={"num_blocks": [20, 200], "num_movements": [0, 1]})
    table = run_experiment(config, deps)
    moved = table.lookup(EstimatorVariant.TMRLS_MUSIC, num_blocks=20, num_movements=1)
    fixed = table.lookup(EstimatorVariant.TMRLS_MUSIC, num_blocks=200, num_movements=0)
    assert moved.rmse_deg < fixed.rmse_deg


def test_closely_spaced_paths(deps):
    """Test that the fixed array fails on closely spaced paths while TMR-MUSIC resolves them."""
    config = quiet(load_preset("fig9dense"), trials=200)
    table = run_experiment(config, deps)
    for snr in config.sweep.snr_db:
        tmr = table.lookup(EstimatorVariant.TMR_MUSIC, snr_db=snr)
        fpa = table.lookup(EstimatorVariant.FPA_MUSIC, snr_db=snr)
        assert tmr.rmse_deg < 2.0, snr
        assert fpa.rmse_deg > tmr.rmse_deg, snr
    assert table.lookup(EstimatorVariant.FPA_MUSIC, snr_db=0.0).rmse_deg > 20.0


def test_shrinkage_helps_at_low_snr(deps):
    """Test that TMRLS-MUSIC is no worse than the SCM-only ablation at -15 dB."""
    config = quiet(
        load_preset("snapshots-m15db"),
        trials=200,
        sweep={"num_blocks": [200], "variants": ["TMRLS_MUSIC", "SCM_MUSIC"]},
    )
    table = run_experiment(config, deps)
    shrunk = table.lookup(EstimatorVariant.TMRLS_MUSIC, snr_db=-15.0)
    plain = table.lookup(EstimatorVariant.SCM_MUSIC, snr_db=-15.0)
    assert shrunk.rmse_deg <= plain.rmse_deg


def test_worker_count_reproducibility(run_deps, tmp_path):
    """Test that rmse.csv is byte-identical for 1, 4 and 8 workers."""
    config = quiet(load_preset("fig8b"), trials=20, sweep={"snr_db": [-5.0, 5.0]})
    outputs = []
    for workers in (1, 4, 8):
        deps = replace(run_deps, workers=workers, output_dir=tmp_path / f"w{workers}")
        run_experiment(config, deps)
        outputs.append((deps.output_dir / "rmse.csv").read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]
