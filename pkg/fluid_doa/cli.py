"""
Command Line Interface for the fluid-antenna DOA toolkit.

This module provides a Typer-based CLI for running Monte-Carlo RMSE sweeps,
single-realization spectra, shrinkage-coefficient surfaces, and for
inspecting lag sets and experiment configurations.
"""
from pathlib import Path
from typing import Callable, Optional, TypeVar

import typer
from loguru import logger
from rich.console import Console
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table
from rich import print as rprint

from .dependencies import RunDependencies
from .geometry import ars_lag_set, max_estimable_paths, max_estimable_users, nars_lag_set
from .harness import (
    list_presets,
    load_config,
    load_preset,
    resolve_config,
    run_experiment,
    run_rho_surface,
    run_spectrum,
)
from .models import ArraySpec, ConfigValidationError, ExperimentConfig, ReceiveMode, RmseTable
from .pipelines import complexity_report, nystrom_speedup
from .settings import configure_logging, load_settings

T = TypeVar("T")

EXIT_CONFIG_ERROR = 2
EXIT_RUNTIME_ERROR = 1

app = typer.Typer(
    name="fluid-doa",
    help="Fluid-antenna DOA estimation experiments",
    rich_markup_mode="rich",
    no_args_is_help=True,
)
console = Console()

ConfigOption = typer.Option(None, "--config", "-c", help="Experiment TOML file")
PresetOption = typer.Option(None, "--preset", "-p", help="Shipped preset name (see `presets`)")
TrialsOption = typer.Option(None, "--trials", "-t", min=1, help="Trials per sweep point")
SeedOption = typer.Option(None, "--seed", "-s", min=0, help="Master seed")
OutOption = typer.Option(None, "--out", "-o", help="Output directory")
WorkersOption = typer.Option(None, "--workers", "-w", min=1, help="Worker processes")
GridOption = typer.Option(None, "--grid-step", help="MUSIC grid step in degrees")


@app.callback()
def main():
    """Configure logging once for every subcommand."""
    try:
        configure_logging(load_settings())
    except ValueError as e:
        rprint(f"[red]{e}[/red]")
        raise typer.Exit(EXIT_CONFIG_ERROR)


def _guarded(action: Callable[[], T]) -> T:
    """Run an action, mapping configuration errors to exit 2 and anything else to exit 1."""
    try:
        return action()
    except ConfigValidationError as e:
        rprint(f"[red]Configuration error:[/red] {e}")
        raise typer.Exit(EXIT_CONFIG_ERROR)
    except typer.Exit:
        raise
    except Exception as e:
        logger.exception("Run failed")
        rprint(f"[red]Error: {e}[/red]")
        raise typer.Exit(EXIT_RUNTIME_ERROR)


def _load_experiment(
    config: Optional[Path],
    preset: Optional[str],
    trials: Optional[int],
    seed: Optional[int],
    grid_step: Optional[float],
) -> ExperimentConfig:
    if (config is None) == (preset is None):
        raise ConfigValidationError("pass exactly one of --config or --preset")
    experiment = load_config(config) if config is not None else load_preset(preset)
    try:
        return experiment.with_overrides(trials=trials, master_seed=seed, grid_step_deg=grid_step)
    except ValueError as e:
        raise ConfigValidationError(str(e)) from e


def _dependencies(out: Optional[Path], workers: Optional[int]) -> RunDependencies:
    return RunDependencies.from_settings(output_dir=out, workers=workers)


@app.command("rmse")
def rmse(
    config: Optional[Path] = ConfigOption,
    preset: Optional[str] = PresetOption,
    trials: Optional[int] = TrialsOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    workers: Optional[int] = WorkersOption,
    grid_step: Optional[float] = GridOption,
    save_trials: bool = typer.Option(False, "--save-trials", help="Also write trials.jsonl"),
):
    """Monte-Carlo RMSE sweep; writes rmse.csv and manifest.json."""

    def _run() -> RmseTable:
        experiment = _load_experiment(config, preset, trials, seed, grid_step)
        deps = RunDependencies.from_settings(output_dir=out, workers=workers, save_trials=save_trials)
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            transient=True,
            console=console,
        ) as progress:
            progress.add_task(f"Running {experiment.name}...", total=None)
            table = run_experiment(experiment, deps)
        display_rmse_table(table)
        rprint(f"[green]Results written to {deps.output_dir}[/green]")
        return table

    _guarded(_run)


@app.command("spectrum")
def spectrum(
    config: Optional[Path] = ConfigOption,
    preset: Optional[str] = PresetOption,
    trials: Optional[int] = TrialsOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    workers: Optional[int] = WorkersOption,
    grid_step: Optional[float] = GridOption,
    point: int = typer.Option(0, "--point", min=0, help="Sweep point index"),
):
    """Spectrum of one realization; writes spectrum.csv."""

    def _run():
        experiment = _load_experiment(config, preset, trials, seed, grid_step)
        deps = _dependencies(out, workers)
        grid = run_spectrum(experiment, deps, point_index=point)
        rprint(f"[green]{len(grid)} grid points written to {deps.output_dir / 'spectrum.csv'}[/green]")

    _guarded(_run)


@app.command("rho-surface")
def rho_surface(
    config: Optional[Path] = ConfigOption,
    preset: Optional[str] = PresetOption,
    trials: Optional[int] = TrialsOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    workers: Optional[int] = WorkersOption,
    grid_step: Optional[float] = GridOption,
):
    """Mean shrinkage coefficient over the (SNR, N) grid; writes rho_surface.csv."""

    def _run():
        experiment = _load_experiment(config, preset, trials, seed, grid_step)
        deps = _dependencies(out, workers)
        frame = run_rho_surface(experiment, deps)

        table = Table(title=f"Shrinkage coefficient ({experiment.name})")
        for column in ("snr_db", "num_blocks", "mean_rho", "min_rho", "max_rho"):
            table.add_column(column, justify="right", style="cyan" if column == "mean_rho" else None)
        for row in frame.itertuples(index=False):
            table.add_row(
                f"{row.snr_db:g}", str(row.num_blocks),
                f"{row.mean_rho:.3f}", f"{row.min_rho:.3f}", f"{row.max_rho:.3f}",
            )
        console.print(table)

    _guarded(_run)


@app.command("validate")
def validate(
    config: Optional[Path] = ConfigOption,
    preset: Optional[str] = PresetOption,
    trials: Optional[int] = TrialsOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    workers: Optional[int] = WorkersOption,
    grid_step: Optional[float] = GridOption,
):
    """Validate a configuration and report per-point complexity terms."""

    def _run():
        experiment = _load_experiment(config, preset, trials, seed, grid_step)
        experiment = resolve_config(experiment, _dependencies(out, workers))
        table = Table(title=f"{experiment.name}: {experiment.trials} trials per point")
        for column, style in (
            ("#", None), ("variant", "cyan"), ("SNR", None), ("N", None), ("G", None),
            ("P", "magenta"), ("N_a", "magenta"), ("EVD", "green"), ("speedup", "yellow"), ("total", "green"),
        ):
            table.add_column(column, justify="right", style=style)
        for point in experiment.sweep_points():
            pipeline = experiment.pipeline_config(point)
            report = complexity_report(pipeline)
            table.add_row(
                str(point.index),
                point.variant.value,
                f"{point.snr_db:g}",
                str(point.num_blocks),
                str(point.num_movements),
                str(pipeline.covariance_dim),
                str(pipeline.resolved_nystrom_size) if pipeline.uses_nystrom else "-",
                f"{report['evd']:,}",
                f"{nystrom_speedup(pipeline):.1f}x" if pipeline.uses_nystrom else "-",
                f"{report['total']:,}",
            )
        console.print(table)
        rprint("[green]Configuration is valid[/green]")

    _guarded(_run)


@app.command("lags")
def lags(
    antennas: Optional[int] = typer.Option(None, "--antennas", "-m", min=1, help="Physical antennas M"),
    movements: Optional[int] = typer.Option(None, "--movements", "-g", min=0, help="Movements G"),
    paths_per_user: int = typer.Option(1, "--paths-per-user", "-l", min=1, help="Paths per user L"),
    preset: Optional[str] = PresetOption,
):
    """Print first-order (ARS) and difference (NARS) lag sets and estimable-path bounds."""

    def _run():
        m, g, per_user = antennas, movements, paths_per_user
        if preset is not None:
            experiment = load_preset(preset)
            m = m if m is not None else experiment.array.num_antennas
            g = g if g is not None else max(experiment.sweep.num_movements)
            per_user = len(experiment.scene.doas_deg[0])
        if m is None or g is None:
            raise ConfigValidationError("pass --antennas and --movements, or --preset")

        table = Table(title=f"Lag sets for M={m}, G={g}")
        table.add_column("Mode", style="cyan")
        table.add_column("Lags", style="green")
        table.add_column("Count", justify="right")
        table.add_column("Max paths", justify="right", style="magenta")
        table.add_column(f"Max users (L={per_user})", justify="right", style="magenta")

        modes = [ReceiveMode.ARS] + ([ReceiveMode.NARS] if m >= 2 else [])
        for mode in modes:
            spec = ArraySpec(mode=mode, num_antennas=m, num_movements=g)
            lag_set = ars_lag_set(spec) if mode is ReceiveMode.ARS else nars_lag_set(spec)
            table.add_row(
                mode.value,
                format_lag_set(sorted(lag_set)),
                str(len(lag_set)),
                str(max_estimable_paths(spec)),
                str(max_estimable_users(spec, per_user)),
            )
        console.print(table)

    _guarded(_run)


@app.command("presets")
def presets():
    """List the shipped experiment presets."""
    table = Table(title="Presets")
    table.add_column("Name", style="cyan", no_wrap=True)
    table.add_column("Description")
    for name, description in list_presets().items():
        table.add_row(name, description)
    console.print(table)


def format_lag_set(lags) -> str:
    """Compact rendering: a range when consecutive, otherwise the full list."""
    if not lags:
        return "{}"
    if lags == list(range(lags[0], lags[-1] + 1)) and len(lags) > 3:
        return f"{{{lags[0]}..{lags[-1]}}}"
    return "{" + ", ".join(str(lag) for lag in lags) + "}"


def display_rmse_table(result: RmseTable):
    """Display RMSE rows in a formatted table."""
    table = Table(title=f"RMSE ({result.experiment})")
    table.add_column("Variant", style="cyan", no_wrap=True)
    table.add_column("SNR (dB)", justify="right")
    table.add_column("N", justify="right")
    table.add_column("G", justify="right")
    table.add_column("RMSE (deg)", justify="right", style="green")
    table.add_column("Failures", justify="right", style="red")
    table.add_column("mean rho", justify="right", style="yellow")

    for row in result.rows:
        table.add_row(
            row.variant.value,
            f"{row.snr_db:g}",
            str(row.num_blocks),
            str(row.num_movements),
            f"{row.rmse_deg:.4f}",
            f"{row.failures}/{row.trials}",
            f"{row.mean_rho:.3f}" if row.mean_rho is not None else "-",
        )

    console.print(table)


if __name__ == "__main__":
    app()
