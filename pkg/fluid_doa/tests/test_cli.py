"""
Tests for the command-line interface.
"""
import pytest
from rich.console import Console
from typer.testing import CliRunner

from .. import cli
from ..cli import app, format_lag_set


@pytest.fixture
def runner(monkeypatch, tmp_path):
    monkeypatch.chdir(tmp_path)
    return CliRunner()


class TestInspection:
    """Test commands that only inspect configurations."""

    def test_presets(self, runner):
        """Test listing shipped presets."""
        result = runner.invoke(app, ["presets"])
        assert result.exit_code == 0
        assert "fig6b" in result.output
        assert "fig9dense" in result.output

    def test_lags(self, runner):
        """Test lag sets for explicit M and G."""
        result = runner.invoke(app, ["lags", "--antennas", "3", "--movements", "2"])
        assert result.exit_code == 0
        assert "{0..8}" in result.output
        assert "{-6..6}" in result.output

    def test_lags_from_preset(self, runner):
        """Test lag sets read from a preset."""
        result = runner.invoke(app, ["lags", "--preset", "fig9"])
        assert result.exit_code == 0
        assert "{-18..18}" in result.output

    def test_lags_single_antenna_has_no_nars_row(self, runner):
        """Test that a single antenna gets no NARS row."""
        result = runner.invoke(app, ["lags", "-m", "1", "-g", "3"])
        assert result.exit_code == 0
        assert "{0..3}" in result.output
        assert "NARS" not in result.output

    def test_lags_needs_array(self, runner):
        """Test that lags without an array exits 2."""
        result = runner.invoke(app, ["lags"])
        assert result.exit_code == 2

    def test_validate_preset(self, runner):
        """Test validating a shipped preset."""
        result = runner.invoke(app, ["validate", "--preset", "fig6b"])
        assert result.exit_code == 0
        assert "Configuration is valid" in result.output

    def test_validate_reports_nystrom_speedup(self, runner, monkeypatch):
        """Test that validate shows the P^3 / N_a^3 speedup of Nystrom points."""
        monkeypatch.setattr(cli, "console", Console(width=200))
        result = runner.invoke(app, ["validate", "--preset", "fig6b"])
        assert result.exit_code == 0, result.output
        assert "speedup" in result.output
        assert "1.7x" in result.output

    @pytest.mark.parametrize("command", ["validate", "rmse"])
    def test_grid_step_must_divide_180(self, runner, command, tmp_path):
        """Test that a grid step not dividing 180 degrees exits 2 before any trial runs."""
        out = tmp_path / "out"
        result = runner.invoke(app, [command, "--preset", "fig6b", "--grid-step", "0.07", "--out", str(out)])
        assert result.exit_code == 2
        assert "does not divide 180" in result.output
        assert not (out / "rmse.csv").exists()

    def test_validate_needs_exactly_one_source(self, runner, small_config_file):
        """Test that validate needs exactly one of --config and --preset."""
        assert runner.invoke(app, ["validate"]).exit_code == 2
        both = runner.invoke(app, ["validate", "--preset", "fig6b", "--config", str(small_config_file)])
        assert both.exit_code == 2

    def test_validate_missing_file(self, runner, tmp_path):
        """Test that a missing config file exits 2."""
        result = runner.invoke(app, ["validate", "--config", str(tmp_path / "missing.toml")])
        assert result.exit_code == 2

    def test_validate_unknown_preset(self, runner):
        """Test that an unknown preset exits 2."""
        assert runner.invoke(app, ["validate", "--preset", "nope"]).exit_code == 2

    def test_bad_environment(self, runner, monkeypatch):
        """Test that invalid settings exit 2."""
        monkeypatch.setenv("WORKERS", "zero")
        assert runner.invoke(app, ["presets"]).exit_code == 2


class TestRuns:
    """Test commands that run experiments."""

    def test_rmse(self, runner, small_config_file, tmp_path):
        """Test an RMSE run with all artifacts."""
        out = tmp_path / "out"
        result = runner.invoke(
            app, ["rmse", "--config", str(small_config_file), "--out", str(out), "--trials", "1", "--save-trials"]
        )
        assert result.exit_code == 0, result.output
        assert (out / "rmse.csv").exists()
        assert (out / "trials.jsonl").exists()
        assert (out / "manifest.json").exists()

    def test_spectrum(self, runner, tmp_path):
        """Test writing a spectrum from a preset."""
        out = tmp_path / "spectrum"
        result = runner.invoke(app, ["spectrum", "--preset", "fig6c", "--grid-step", "0.5", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert (out / "spectrum.csv").exists()

    def test_rho_surface_rejects_nars(self, runner, tmp_path):
        """Test that rho-surface on a NARS preset exits 2."""
        result = runner.invoke(app, ["rho-surface", "--preset", "fig6c", "--out", str(tmp_path / "rho")])
        assert result.exit_code == 2

    def test_runtime_failure(self, runner, small_config_file, monkeypatch, tmp_path):
        """Test that an unexpected error exits 1 with its message."""
        def broken(config, deps):
            raise RuntimeError("disk full")

        monkeypatch.setattr(cli, "run_experiment", broken)
        result = runner.invoke(app, ["rmse", "--config", str(small_config_file), "--out", str(tmp_path)])
        assert result.exit_code == 1
        assert "disk full" in result.output


class TestFormatting:
    """Test output helpers."""

    def test_format_lag_set(self):
        """Test compact rendering of lag sets."""
        assert format_lag_set([]) == "{}"
        assert format_lag_set([0, 1, 2, 3, 4]) == "{0..4}"
        assert format_lag_set([0, 1, 2]) == "{0, 1, 2}"
        assert format_lag_set([0, 2, 5, 7]) == "{0, 2, 5, 7}"
