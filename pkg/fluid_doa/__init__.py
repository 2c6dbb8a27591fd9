"""
Fluid-antenna direction-of-arrival estimation under time-constrained mobility.

This package simulates fluid-antenna receivers that move between snapshots
within each coherence block, and estimates path directions from the synthesized
virtual arrays. Aligned received signals (ARS) go through TMRLS-MUSIC;
non-aligned received signals (NARS) go through TMR-MUSIC. A Monte-Carlo harness
and CLI reproduce RMSE sweeps, spectra and shrinkage-coefficient surfaces.

Main Components:
- geometry: antenna positions per movement state and lag sets
- simulation: block-fading multipath signal simulator
- virtual_array: ARS rearrangement and NARS coarray reconstruction
- covariance: SCM, Toeplitz rectification and linear shrinkage
- subspace: exact and Nystrom signal subspaces
- music: MUSIC spectrum and peak extraction
- pipelines: end-to-end estimators and the fixed-array baseline
- harness: Monte-Carlo experiments and CSV/JSON outputs
- cli: command-line interface using Typer
- models: Pydantic models and typed errors
- settings: configuration management
"""

__version__ = "1.0.0"

from .models import (
    ArraySpec,
    EstimationError,
    EstimationResult,
    EstimatorVariant,
    ExperimentConfig,
    PipelineConfig,
    ReceiveMode,
    Scene,
)
from .pipelines import estimate, run_pipeline, run_tmr_music, run_tmrls_music
from .settings import load_settings
from .simulation import simulate_dataset

__all__ = [
    "ArraySpec",
    "EstimationError",
    "EstimationResult",
    "EstimatorVariant",
    "ExperimentConfig",
    "PipelineConfig",
    "ReceiveMode",
    "Scene",
    "estimate",
    "run_pipeline",
    "run_tmr_music",
    "run_tmrls_music",
    "simulate_dataset",
    "load_settings",
]
