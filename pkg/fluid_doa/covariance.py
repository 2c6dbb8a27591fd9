"""
Covariance estimation and enhancement.

Sample covariance, Toeplitz rectification by diagonal averaging, the
closed-form linear-shrinkage coefficient between the two, and per-state
sub-covariances for non-aligned data.
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Union

import numpy as np
from loguru import logger
from scipy.linalg import toeplitz

from .models import ReceiveMode, ShrinkageRegimeError
from .simulation import SnapshotSet


class CovStage(str, Enum):
    SCM = "SCM"
    TOEPLITZ_RECTIFIED = "ToeplitzRectified"
    ENHANCED = "Enhanced"
    SUB_STATE = "SubState"
    COARRAY_TOEPLITZ = "CoarrayToeplitz"


@dataclass
class CovMatrix:
    """Hermitian covariance estimate tagged with the stage that produced it."""

    matrix: np.ndarray
    stage: CovStage

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        scale = max(np.linalg.norm(self.matrix), 1.0)
        return bool(np.linalg.norm(self.matrix - self.matrix.conj().T) <= tol * scale)


MatrixLike = Union[CovMatrix, np.ndarray]


def as_matrix(value: MatrixLike) -> np.ndarray:
    return value.matrix if isinstance(value, CovMatrix) else np.asarray(value)


@dataclass(frozen=True)
class ShrinkageDiag:
    """Shrinkage coefficient and the traces it was computed from."""

    rho_raw: float
    rho: float
    trace_scm: float
    trace_scm_sq: float
    trace_residual_sq: float
    num_blocks: int


def scm(data: np.ndarray) -> CovMatrix:
    """Sample covariance D D^H / N of a P x N data matrix."""
    data = np.asarray(data)
    if data.ndim != 2 or data.shape[1] == 0:
        raise ValueError(f"scm needs a non-empty P x N matrix, got shape {data.shape}")
    return CovMatrix(matrix=data @ data.conj().T / data.shape[1], stage=CovStage.SCM)


def toeplitz_rectify(cov: MatrixLike) -> CovMatrix:
    """Replace every diagonal by its arithmetic mean."""
    r = as_matrix(cov)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise ValueError(f"toeplitz_rectify needs a square matrix, got shape {r.shape}")
    size = r.shape[0]
    first_col = np.array([np.diagonal(r, offset=-k).mean() for k in range(size)])
    first_row = np.array([np.diagonal(r, offset=k).mean() for k in range(size)])
    return CovMatrix(matrix=toeplitz(first_col, first_row), stage=CovStage.TOEPLITZ_RECTIFIED)


def shrinkage_coefficient(sample: MatrixLike, rectified: MatrixLike, num_blocks: int) -> ShrinkageDiag:
    """
    Closed-form weight between the SCM and its Toeplitz rectification.

    rho_a = [(N-3) Tr(R^2) + (N-1) Tr(R)^2] / [(N-2)(N+1) Tr((R - R_T)^2)],
    clamped to [0, 1]. An already-Toeplitz SCM (zero denominator) gets rho = 1.

    Raises:
        ShrinkageRegimeError: N < 4
    """
    if num_blocks < 4:
        raise ShrinkageRegimeError(f"shrinkage coefficient needs N >= 4 blocks, got {num_blocks}")
    r_hat = as_matrix(sample)
    residual = r_hat - as_matrix(rectified)
    n = num_blocks

    trace_scm = float(np.real(np.trace(r_hat)))
    trace_scm_sq = float(np.real(np.trace(r_hat @ r_hat)))
    trace_residual_sq = float(np.real(np.trace(residual @ residual)))

    if trace_residual_sq == 0.0:
        rho_raw = math.inf
    else:
        numerator = (n - 3) * trace_scm_sq + (n - 1) * trace_scm ** 2
        rho_raw = numerator / ((n - 2) * (n + 1) * trace_residual_sq)
    rho = min(max(rho_raw, 0.0), 1.0)

    logger.debug(f"shrinkage: rho_raw={rho_raw:.4g} rho={rho:.4g} (N={n})")
    return ShrinkageDiag(
        rho_raw=rho_raw,
        rho=rho,
        trace_scm=trace_scm,
        trace_scm_sq=trace_scm_sq,
        trace_residual_sq=trace_residual_sq,
        num_blocks=n,
    )


def enhanced_scm(sample: MatrixLike, rectified: MatrixLike, rho: float) -> CovMatrix:
    """Convex combination (1 - rho) R + rho R_T."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"shrinkage weight must lie in [0, 1], got {rho}")
    r_hat, r_t = as_matrix(sample), as_matrix(rectified)
    if r_hat.shape != r_t.shape:
        raise ValueError(f"shape mismatch {r_hat.shape} vs {r_t.shape}")
    return CovMatrix(matrix=(1.0 - rho) * r_hat + rho * r_t, stage=CovStage.ENHANCED)


def sub_covariances(snapshots: SnapshotSet) -> List[CovMatrix]:
    """Per-state sample covariances X_g X_g^H / N of non-aligned data."""
    if snapshots.mode is not ReceiveMode.NARS:
        raise ValueError("sub_covariances requires a NARS snapshot set")
    covs = []
    for data in snapshots.states:
        cov = scm(data)
        covs.append(CovMatrix(matrix=cov.matrix, stage=CovStage.SUB_STATE))
    return covs
