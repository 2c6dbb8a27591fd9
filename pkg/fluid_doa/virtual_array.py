"""
Virtual-array construction.

ARS data is reordered row-wise into a uniform virtual array; NARS
sub-covariances are sampled lag by lag into a coarray vector and smoothed into
a Toeplitz matrix.
"""
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .covariance import CovMatrix, CovStage, MatrixLike, as_matrix
from .geometry import lag_lookup
from .models import ArraySpec, ReceiveMode


@dataclass
class VirtualULAData:
    """Rows ordered by virtual position: row p sits at p * spacing."""

    data: np.ndarray
    spacing: float

    @property
    def num_elements(self) -> int:
        return self.data.shape[0]


@dataclass
class CoarrayVector:
    """Correlation samples r[-M_g..M_g], stored with the most negative lag first."""

    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 1 or len(self.values) % 2 == 0:
            raise ValueError(f"coarray vector must be 1-D with odd length, got shape {self.values.shape}")

    @property
    def max_lag(self) -> int:
        return (len(self.values) - 1) // 2

    def at(self, lag: int) -> complex:
        if abs(lag) > self.max_lag:
            raise IndexError(f"lag {lag} outside [-{self.max_lag}, {self.max_lag}]")
        return complex(self.values[lag + self.max_lag])


def ars_row_order(spec: ArraySpec) -> np.ndarray:
    """Input row (0-based) feeding each output row p = (m-1)(G+1) + g."""
    m, g = np.divmod(np.arange(spec.num_antennas * spec.num_states), spec.num_states)
    return g * spec.num_antennas + m


def rearrange_ars(stacked: np.ndarray, spec: ArraySpec) -> VirtualULAData:
    """Reorder state-major stacked snapshots into virtual-position order."""
    if spec.mode is not ReceiveMode.ARS:
        raise ValueError("rearrange_ars requires an ARS array")
    expected = spec.num_antennas * spec.num_states
    if stacked.shape[0] != expected:
        raise ValueError(f"expected {expected} stacked rows, got {stacked.shape[0]}")
    return VirtualULAData(data=stacked[ars_row_order(spec)], spacing=spec.step)


def inverse_rearrange_ars(virtual: VirtualULAData, spec: ArraySpec) -> np.ndarray:
    """Undo rearrange_ars, returning state-major stacked rows."""
    stacked = np.empty_like(virtual.data)
    stacked[ars_row_order(spec)] = virtual.data
    return stacked


def build_coarray_vector(sub_covs: Sequence[MatrixLike], spec: ArraySpec) -> CoarrayVector:
    """
    Sample one covariance entry per difference lag.

    Args:
        sub_covs: G+1 per-state M x M covariances, indexed by state
        spec: NARS array

    Returns:
        CoarrayVector with r[0] from state 0's reference autocorrelation,
        positive lags from entries (m, 1) and negative lags from (1, m)
    """
    if len(sub_covs) != spec.num_states:
        raise ValueError(f"expected {spec.num_states} state covariances, got {len(sub_covs)}")
    matrices = [as_matrix(cov) for cov in sub_covs]
    max_lag = spec.max_lag
    values = np.empty(2 * max_lag + 1, dtype=complex)
    for lag in range(-max_lag, max_lag + 1):
        entry = lag_lookup(spec, lag)
        values[lag + max_lag] = matrices[entry.state][entry.row - 1, entry.col - 1]
    return CoarrayVector(values=values)


def build_toeplitz_scm(r: CoarrayVector) -> CovMatrix:
    """
    Stack flipped length-(M_g+1) windows of r as columns.

    Entry (p, c) equals r[c - p]: the first column runs r[0], r[-1], ..., r[-M_g].
    """
    size = r.max_lag + 1
    matrix = np.column_stack([r.values[i:i + size][::-1] for i in range(size)])
    return CovMatrix(matrix=matrix, stage=CovStage.COARRAY_TOEPLITZ)
