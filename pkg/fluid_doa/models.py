"""
Pydantic models and typed errors shared across the fluid-antenna DOA toolkit.

These models describe the array, the propagation scene, a single estimator
run, a Monte-Carlo experiment, and the results the harness writes out.
"""
import math
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from itertools import product
from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class EstimationError(ValueError):
    """Base class for numerical failures that make one estimate unusable."""


class ResolutionError(EstimationError):
    """The spectrum holds fewer local maxima than requested paths."""

    def __init__(self, found: int, required: int, spectrum: Optional["SpectrumGrid"] = None):
        self.found = found
        self.required = required
        self.spectrum = spectrum
        super().__init__(f"spectrum has {found} local maxima, {required} required")


class RankDeficiencyError(EstimationError):
    """The Nystrom subset kept fewer usable eigen-pairs than requested paths."""

    def __init__(self, kept: int, required: int):
        self.kept = kept
        self.required = required
        super().__init__(
            f"Nystrom subset kept {kept} eigen-pairs above threshold, {required} required"
        )


class ShrinkageRegimeError(EstimationError):
    """The shrinkage closed form is only defined for N >= 4 blocks."""


class SubspaceError(EstimationError):
    """The Hermitian eigen-solver did not converge."""


class ConfigValidationError(ValueError):
    """An experiment or pipeline configuration failed validation."""


def check_grid_step(step_deg: float) -> float:
    """Return step_deg if it is positive and divides 180 degrees, else raise ValueError."""
    if step_deg <= 0:
        raise ValueError("grid step must be positive")
    count = round(180.0 / step_deg)
    if count < 1 or not math.isclose(count * step_deg, 180.0, rel_tol=1e-9):
        raise ValueError(f"grid step {step_deg} does not divide 180 degrees")
    return step_deg


# ---------------------------------------------------------------------------
# Array and scene
# ---------------------------------------------------------------------------

class ReceiveMode(str, Enum):
    """Whether transmitted content is aligned across movement states."""

    ARS = "ARS"
    NARS = "NARS"


class ArraySpec(BaseModel):
    """Fluid-antenna array: physical element count, movements and step size."""

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {"mode": "ARS", "num_antennas": 2, "num_movements": 2, "step": 0.5}
        },
    )

    mode: ReceiveMode = Field(description="Aligned (ARS) or non-aligned (NARS) received signals")
    num_antennas: int = Field(ge=1, description="Physical fluid antennas M")
    num_movements: int = Field(default=0, ge=0, description="Movements G per time block")
    step: float = Field(
        default=0.5,
        gt=0.0,
        le=0.5,
        description="Basic movement step d in carrier wavelengths"
    )

    @model_validator(mode="after")
    def _check_reference_element(self) -> "ArraySpec":
        if self.mode is ReceiveMode.NARS and self.num_antennas < 2:
            raise ValueError("NARS needs a fixed reference antenna plus at least one movable one (M >= 2)")
        return self

    @property
    def num_states(self) -> int:
        return self.num_movements + 1

    @property
    def max_lag(self) -> int:
        """Largest second-order difference lag M_g = (M-1)(G+1)."""
        return (self.num_antennas - 1) * self.num_states

    @property
    def virtual_size(self) -> int:
        """Dimension of the covariance the subspace stage works on."""
        if self.mode is ReceiveMode.ARS:
            return self.num_antennas * self.num_states
        return self.max_lag + 1

    @property
    def max_estimable_paths(self) -> int:
        # one eigenvector is reserved for the noise subspace
        return self.virtual_size - 1


class Scene(BaseModel):
    """Far-field multipath scene: K users with L paths each and the channel powers."""

    model_config = ConfigDict(frozen=True)

    doas_deg: List[List[float]] = Field(description="K x L path directions in degrees, each in (-90, 90]")
    path_gain_var: float = Field(default=1.0, ge=0.0, description="Path-gain variance")
    signal_power: float = Field(default=1.0, gt=0.0, description="Transmit symbol power")
    noise_var: float = Field(default=0.1, ge=0.0, description="Per-element noise variance")

    @field_validator("doas_deg")
    @classmethod
    def _check_doas(cls, value: List[List[float]]) -> List[List[float]]:
        if not value or not value[0]:
            raise ValueError("scene needs at least one user with one path")
        if len({len(row) for row in value}) != 1:
            raise ValueError("every user must have the same number of paths L")
        flat = [theta for row in value for theta in row]
        for theta in flat:
            if not -90.0 < theta <= 90.0:
                raise ValueError(f"DOA {theta} outside (-90, 90]")
        if len(set(flat)) != len(flat):
            raise ValueError("DOAs must be distinct")
        return value

    @classmethod
    def from_snr(
        cls,
        doas_deg: List[List[float]],
        snr_db: float,
        path_gain_var: float = 1.0,
        signal_power: float = 1.0,
    ) -> "Scene":
        """Build a scene whose per-path SNR is path_gain_var * signal_power / noise_var."""
        noise_var = path_gain_var * signal_power / 10.0 ** (snr_db / 10.0)
        return cls(
            doas_deg=doas_deg,
            path_gain_var=path_gain_var,
            signal_power=signal_power,
            noise_var=noise_var,
        )

    @property
    def num_users(self) -> int:
        return len(self.doas_deg)

    @property
    def paths_per_user(self) -> int:
        return len(self.doas_deg[0])

    @property
    def num_paths(self) -> int:
        return self.num_users * self.paths_per_user

    @property
    def flat_doas_deg(self) -> List[float]:
        """DOAs in stacking order: all paths of user 1, then user 2, ..."""
        return [theta for row in self.doas_deg for theta in row]

    @property
    def path_power(self) -> float:
        return self.path_gain_var * self.signal_power

    @property
    def snr_db(self) -> float:
        if self.noise_var == 0.0:
            return math.inf
        return 10.0 * math.log10(self.path_power / self.noise_var)


# ---------------------------------------------------------------------------
# Single estimator run
# ---------------------------------------------------------------------------

class EstimatorVariant(str, Enum):
    """Estimator pipelines; SCM_MUSIC and EXACT_EVD are ablations."""

    TMRLS_MUSIC = "TMRLS_MUSIC"
    TMR_MUSIC = "TMR_MUSIC"
    FPA_MUSIC = "FPA_MUSIC"
    SCM_MUSIC = "SCM_MUSIC"
    EXACT_EVD = "EXACT_EVD"


class PipelineConfig(BaseModel):
    """Everything one estimator run needs besides the data."""

    model_config = ConfigDict(frozen=True)

    array: ArraySpec
    scene: Scene
    num_blocks: int = Field(ge=1, description="Time blocks N")
    num_paths: Optional[int] = Field(default=None, ge=1, description="Path count KL; defaults to the scene's")
    nystrom_size: Optional[int] = Field(default=None, ge=1, description="Nystrom subset size N_a")
    nystrom_fraction: float = Field(default=0.5, gt=0.0, le=1.0)
    nystrom_selection: Literal["random", "even"] = "random"
    grid_step_deg: float = Field(default=0.05, gt=0.0, le=1.0)
    seed: int = Field(default=0, ge=0, description="Dataset seed")
    nystrom_seed: int = Field(default=0, ge=0, description="Nystrom subset seed")
    variant: EstimatorVariant = EstimatorVariant.TMRLS_MUSIC

    @field_validator("grid_step_deg")
    @classmethod
    def _check_grid_step(cls, value: float) -> float:
        return check_grid_step(value)

    @model_validator(mode="after")
    def _check_variant(self) -> "PipelineConfig":
        mode = self.array.mode
        variant = self.variant
        kl = self.resolved_num_paths
        if variant in (EstimatorVariant.TMRLS_MUSIC, EstimatorVariant.SCM_MUSIC) and mode is not ReceiveMode.ARS:
            raise ValueError(f"{variant.value} requires ARS mode")
        if variant is EstimatorVariant.TMR_MUSIC and mode is not ReceiveMode.NARS:
            raise ValueError("TMR_MUSIC requires NARS mode")
        if variant is EstimatorVariant.FPA_MUSIC:
            if self.array.num_movements != 0:
                raise ValueError("FPA_MUSIC runs the fixed array (G = 0)")
            if kl >= self.array.num_antennas:
                raise ValueError(f"FPA_MUSIC resolves at most M - 1 = {self.array.num_antennas - 1} paths, got {kl}")
            return self
        if kl > self.array.max_estimable_paths:
            raise ValueError(
                f"{kl} paths exceed the identifiability bound {self.array.max_estimable_paths} "
                f"for {mode.value} with M={self.array.num_antennas}, G={self.array.num_movements}"
            )
        if self.nystrom_size is not None and not kl <= self.nystrom_size <= self.covariance_dim:
            raise ValueError(f"Nystrom subset size must lie in [{kl}, {self.covariance_dim}]")
        if self.uses_shrinkage and self.num_blocks < 4:
            raise ValueError("shrinkage coefficient needs N >= 4 time blocks")
        return self

    @property
    def resolved_num_paths(self) -> int:
        return self.num_paths if self.num_paths is not None else self.scene.num_paths

    @property
    def covariance_dim(self) -> int:
        if self.variant is EstimatorVariant.FPA_MUSIC:
            return self.array.num_antennas
        return self.array.virtual_size

    @property
    def uses_shrinkage(self) -> bool:
        return self.array.mode is ReceiveMode.ARS and self.variant in (
            EstimatorVariant.TMRLS_MUSIC,
            EstimatorVariant.EXACT_EVD,
        )

    @property
    def uses_nystrom(self) -> bool:
        return self.variant in (
            EstimatorVariant.TMRLS_MUSIC,
            EstimatorVariant.TMR_MUSIC,
            EstimatorVariant.SCM_MUSIC,
        )

    @property
    def resolved_nystrom_size(self) -> int:
        if self.nystrom_size is not None:
            return self.nystrom_size
        dim = self.covariance_dim
        return min(dim, max(self.resolved_num_paths, math.ceil(self.nystrom_fraction * dim)))


@dataclass(frozen=True)
class SpectrumGrid:
    """
    MUSIC pseudo-spectrum sampled on a strictly increasing angle grid.

    below_grid_value is the spectrum at -90 degrees, just outside the grid;
    -inf when unknown.
    """

    angles_deg: np.ndarray
    values: np.ndarray
    below_grid_value: float = -np.inf

    @property
    def step_deg(self) -> float:
        return float(self.angles_deg[1] - self.angles_deg[0])

    def __len__(self) -> int:
        return len(self.angles_deg)


class EstimationResult(BaseModel):
    """Sorted DOA estimates plus the diagnostics of the run that produced them."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    variant: EstimatorVariant
    doas_deg: List[float] = Field(description="Estimated DOAs, ascending")
    spectrum: Optional[SpectrumGrid] = Field(default=None, exclude=True)
    rho: Optional[float] = Field(default=None, description="Clamped shrinkage coefficient (ARS)")
    rho_raw: Optional[float] = Field(default=None, description="Unclamped shrinkage coefficient (ARS)")
    subspace_method: str = Field(default="Exact", description="Exact or Nystrom")
    selected_indices: List[int] = Field(default_factory=list, description="Nystrom subset")

    @field_validator("doas_deg")
    @classmethod
    def _check_sorted(cls, value: List[float]) -> List[float]:
        if any(b < a for a, b in zip(value, value[1:])):
            raise ValueError("DOA estimates must be sorted ascending")
        return value


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

class ArraySection(BaseModel):
    """Physical array of an experiment; G comes from the sweep."""

    mode: ReceiveMode
    num_antennas: int = Field(ge=1)
    step: float = Field(default=0.5, gt=0.0, le=0.5)


class SceneSection(BaseModel):
    """Scene of an experiment; the noise variance comes from the SNR sweep."""

    doas_deg: List[List[float]]
    path_gain_var: float = Field(default=1.0, gt=0.0)
    signal_power: float = Field(default=1.0, gt=0.0)


class EstimatorSection(BaseModel):
    nystrom_fraction: Optional[float] = Field(default=None, gt=0.0, le=1.0)
    nystrom_selection: Literal["random", "even"] = "random"
    grid_step_deg: Optional[float] = Field(default=None, gt=0.0, le=1.0)

    @field_validator("grid_step_deg")
    @classmethod
    def _check_grid_step(cls, value: Optional[float]) -> Optional[float]:
        return value if value is None else check_grid_step(value)


class SweepSection(BaseModel):
    snr_db: List[float] = Field(min_length=1)
    num_blocks: List[int] = Field(min_length=1)
    num_movements: List[int] = Field(min_length=1)
    variants: List[EstimatorVariant] = Field(min_length=1)


class OutputSection(BaseModel):
    spectra: bool = Field(default=False, description="Write one spectrum CSV per sweep point")
    save_trials: bool = Field(default=False, description="Write per-trial records as JSON lines")


class SweepPoint(BaseModel):
    """One coordinate of the sweep grid."""

    model_config = ConfigDict(frozen=True)

    index: int
    variant: EstimatorVariant
    snr_db: float
    num_blocks: int
    num_movements: int


class ExperimentConfig(BaseModel):
    """A Monte-Carlo experiment: array, scene, estimator knobs and sweep axes."""

    name: str
    description: str = ""
    trials: Optional[int] = Field(default=None, ge=1, description="Trials per point; settings default when omitted")
    master_seed: Optional[int] = Field(default=None, ge=0, description="Settings default when omitted")
    array: ArraySection
    scene: SceneSection
    estimator: EstimatorSection = Field(default_factory=EstimatorSection)
    sweep: SweepSection
    output: OutputSection = Field(default_factory=OutputSection)

    @model_validator(mode="after")
    def _check_points(self) -> "ExperimentConfig":
        for point in self.sweep_points():
            try:
                self.pipeline_config(point)
            except ValidationError as exc:
                messages = "; ".join(err["msg"] for err in exc.errors())
                raise ValueError(
                    f"sweep point {point.variant.value} G={point.num_movements} "
                    f"N={point.num_blocks}: {messages}"
                ) from None
        return self

    def with_overrides(self, only_missing: bool = False, **values: Any) -> "ExperimentConfig":
        """
        Re-validated copy with run-level values replaced.

        Accepts trials, master_seed, grid_step_deg and nystrom_fraction; None
        values are skipped, and with only_missing set, values already present
        in the file win.
        """
        data = self.model_dump()
        sections = {
            "trials": data,
            "master_seed": data,
            "grid_step_deg": data["estimator"],
            "nystrom_fraction": data["estimator"],
        }
        for key, value in values.items():
            if key not in sections:
                raise KeyError(f"unknown override {key!r}")
            target = sections[key]
            if value is None or (only_missing and target.get(key) is not None):
                continue
            target[key] = value
        return ExperimentConfig.model_validate(data)

    def sweep_points(self) -> List[SweepPoint]:
        """Expand the sweep axes; FPA_MUSIC collapses the movement axis to G = 0."""
        points: List[SweepPoint] = []
        seen = set()
        for variant, movements, blocks, snr in product(
            self.sweep.variants, self.sweep.num_movements, self.sweep.num_blocks, self.sweep.snr_db
        ):
            if variant is EstimatorVariant.FPA_MUSIC:
                movements = 0
            key = (variant, movements, blocks, snr)
            if key in seen:
                continue
            seen.add(key)
            points.append(
                SweepPoint(
                    index=len(points),
                    variant=variant,
                    snr_db=snr,
                    num_blocks=blocks,
                    num_movements=movements,
                )
            )
        return points

    def pipeline_config(
        self,
        point: SweepPoint,
        seed: int = 0,
        nystrom_seed: int = 0,
        grid_step_deg: float = 0.05,
        nystrom_fraction: float = 0.5,
    ) -> PipelineConfig:
        """Derive the validated single-run configuration for one sweep point."""
        mode = self.array.mode
        if point.variant is EstimatorVariant.FPA_MUSIC:
            mode = ReceiveMode.ARS
        array = ArraySpec(
            mode=mode,
            num_antennas=self.array.num_antennas,
            num_movements=point.num_movements,
            step=self.array.step,
        )
        scene = Scene.from_snr(
            self.scene.doas_deg,
            point.snr_db,
            path_gain_var=self.scene.path_gain_var,
            signal_power=self.scene.signal_power,
        )
        return PipelineConfig(
            array=array,
            scene=scene,
            num_blocks=point.num_blocks,
            nystrom_fraction=self.estimator.nystrom_fraction or nystrom_fraction,
            nystrom_selection=self.estimator.nystrom_selection,
            grid_step_deg=self.estimator.grid_step_deg or grid_step_deg,
            seed=seed,
            nystrom_seed=nystrom_seed,
            variant=point.variant,
        )


class TrialFailure(BaseModel):
    """Model for a trial whose estimator raised an EstimationError."""

    error_type: str = Field(description="Exception class name")
    message: str = Field(description="Error message")
    details: Optional[Dict[str, Any]] = Field(default=None, description="Additional error details")
    timestamp: str = Field(
        default_factory=lambda: datetime.now().isoformat(),
        description="When the error occurred"
    )


class TrialRecord(BaseModel):
    """Outcome of one Monte-Carlo trial, as written to trials.jsonl."""

    point: int
    trial: int
    estimates_deg: List[float]
    failed: bool = False
    rho: Optional[float] = None
    failure: Optional[TrialFailure] = None


class RmseRow(BaseModel):
    variant: EstimatorVariant
    snr_db: float
    num_blocks: int
    num_movements: int
    rmse_deg: float = Field(ge=0.0)
    failures: int = Field(ge=0)
    trials: int = Field(ge=1)
    mean_rho: Optional[float] = None

    @model_validator(mode="after")
    def _check_failures(self) -> "RmseRow":
        if self.failures > self.trials:
            raise ValueError("failure count exceeds trial count")
        return self


class RmseTable(BaseModel):
    """RMSE per sweep point."""

    experiment: str
    rows: List[RmseRow] = Field(default_factory=list)

    def lookup(self, variant: EstimatorVariant, **coords: float) -> RmseRow:
        """Return the single row of a variant matching the given sweep coordinates."""
        matches = [
            row for row in self.rows
            if row.variant is variant and all(getattr(row, key) == value for key, value in coords.items())
        ]
        if len(matches) != 1:
            raise KeyError(f"{len(matches)} rows match {variant.value} {coords}")
        return matches[0]


class RunManifest(BaseModel):
    """Provenance written next to every CSV output."""

    experiment: str
    command: str
    config_hash: str
    master_seed: int
    trials: int
    versions: Dict[str, str]
    created: str = Field(default_factory=lambda: datetime.now().isoformat())
