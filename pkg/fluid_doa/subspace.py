"""
Signal-subspace extraction: exact Hermitian EVD and the Nystrom approximation.
"""
from dataclasses import dataclass, field
from typing import Literal, Tuple

import numpy as np
from loguru import logger
from scipy import linalg

from .covariance import MatrixLike, as_matrix
from .models import RankDeficiencyError, SubspaceError
from .providers import make_generator

# eigenvalues of the Nystrom sub-block below this fraction of the largest are dropped
RANK_TOLERANCE = 1e-12

SubsetSelection = Literal["random", "even"]


@dataclass
class SubspaceBasis:
    """Orthonormal P x KL signal-subspace basis."""

    basis: np.ndarray
    method: str  # "Exact" or "Nystrom"
    eigenvalues: np.ndarray
    selected_indices: Tuple[int, ...] = field(default_factory=tuple)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T


def _hermitian_eig(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Eigen-pairs sorted by descending eigenvalue."""
    try:
        values, vectors = linalg.eigh(matrix)
    except linalg.LinAlgError as e:
        raise SubspaceError(f"Hermitian eigen-solver failed: {e}") from e
    order = np.argsort(values)[::-1]
    return values[order], vectors[:, order]


def _check_rank(num_paths: int, dim: int) -> None:
    if not 1 <= num_paths < dim:
        raise ValueError(f"need 1 <= KL < {dim} to keep a noise subspace, got KL={num_paths}")


def exact_signal_subspace(cov: MatrixLike, num_paths: int) -> SubspaceBasis:
    """Eigenvectors of the KL largest eigenvalues of a Hermitian matrix."""
    r = as_matrix(cov)
    _check_rank(num_paths, r.shape[0])
    values, vectors = _hermitian_eig(r)
    return SubspaceBasis(basis=vectors[:, :num_paths], method="Exact", eigenvalues=values[:num_paths])


def select_subset(
    dim: int,
    num_selected: int,
    seed: int = 0,
    selection: SubsetSelection = "random",
) -> np.ndarray:
    """Sorted row/column indices for the Nystrom sub-block."""
    if not 1 <= num_selected <= dim:
        raise ValueError(f"subset size must lie in [1, {dim}], got {num_selected}")
    if selection == "even":
        return np.round(np.linspace(0, dim - 1, num_selected)).astype(int)
    rng = make_generator(seed)
    return np.sort(rng.choice(dim, size=num_selected, replace=False))


def nystrom_signal_subspace(
    cov: MatrixLike,
    num_selected: int,
    num_paths: int,
    seed: int = 0,
    selection: SubsetSelection = "random",
) -> SubspaceBasis:
    """
    Approximate the signal subspace from an N_a x N_a sub-block.

    Args:
        cov: P x P Hermitian covariance
        num_selected: Subset size N_a, KL <= N_a <= P
        num_paths: Signal dimension KL
        seed: Seed of the subset draw
        selection: "random" (uniform without replacement) or "even"

    Returns:
        SubspaceBasis spanning the orthonormalized extended eigenvectors
        R[:, S] u_i / gamma_i of the KL largest sub-block eigenvalues

    Raises:
        RankDeficiencyError: Fewer than KL sub-block eigenvalues above
            RANK_TOLERANCE * gamma_max
    """
    r = as_matrix(cov)
    dim = r.shape[0]
    _check_rank(num_paths, dim)
    if num_selected < num_paths:
        raise ValueError(f"subset size {num_selected} smaller than KL={num_paths}")

    subset = select_subset(dim, num_selected, seed=seed, selection=selection)
    gammas, vectors = _hermitian_eig(r[np.ix_(subset, subset)])

    gamma_max = gammas[0]
    kept = int(np.sum(gammas > RANK_TOLERANCE * gamma_max)) if gamma_max > 0 else 0
    if kept < num_paths:
        raise RankDeficiencyError(kept=kept, required=num_paths)

    gammas, vectors = gammas[:num_paths], vectors[:, :num_paths]
    extended = r[:, subset] @ vectors / gammas[None, :]
    basis, _ = linalg.qr(extended, mode="economic")

    logger.debug(f"Nystrom subset {subset.tolist()} kept {kept} eigen-pairs")
    return SubspaceBasis(
        basis=basis,
        method="Nystrom",
        eigenvalues=gammas,
        selected_indices=tuple(int(i) for i in subset),
    )
