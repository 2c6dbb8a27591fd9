"""
MUSIC pseudo-spectrum over the virtual arrays and peak extraction.
"""
from typing import List, Union

import numpy as np
from loguru import logger
from scipy.signal import find_peaks

from .models import ReceiveMode, ResolutionError, SpectrumGrid, check_grid_step
from .subspace import SubspaceBasis

SPECTRUM_CAP = 1e15
DENOMINATOR_FLOOR = 1.0 / SPECTRUM_CAP


def angle_grid(step_deg: float = 0.05) -> np.ndarray:
    """Uniform grid over (-90, 90]: -90 + step, ..., 90."""
    count = int(round(180.0 / check_grid_step(step_deg)))
    return np.linspace(-90.0 + 180.0 / count, 90.0, count)


def virtual_steering_ars(theta_deg, size: int, spacing: float = 0.5) -> np.ndarray:
    """
    Uniform virtual array steering exp(-j p 2 pi d sin(theta)), p = 0..size-1.

    A scalar angle gives a vector; an array of angles gives one column per angle.
    """
    sines = np.sin(np.deg2rad(np.asarray(theta_deg, dtype=float)))
    p = np.arange(size).reshape((size,) + (1,) * sines.ndim)
    return np.exp(-2j * np.pi * spacing * p * sines)


def virtual_steering_nars(theta_deg, max_lag: int, spacing: float = 0.5) -> np.ndarray:
    """Non-negative-lag coarray steering, exp(+j p 2 pi d sin(theta)), p = 0..M_g."""
    return np.conj(virtual_steering_ars(theta_deg, max_lag + 1, spacing))


def music_spectrum(
    subspace: Union[SubspaceBasis, np.ndarray],
    mode: ReceiveMode,
    spacing: float = 0.5,
    grid_step_deg: float = 0.05,
) -> SpectrumGrid:
    """
    f(theta) = 1 / (v^H (I - U U^H) v) on the uniform grid.

    Args:
        subspace: Orthonormal P x KL signal basis, KL < P
        mode: ARS uses the ULA steering, NARS the coarray steering
        spacing: Element spacing d in wavelengths
        grid_step_deg: Grid resolution

    Returns:
        SpectrumGrid with values capped at SPECTRUM_CAP
    """
    basis = subspace.basis if isinstance(subspace, SubspaceBasis) else np.asarray(subspace)
    dim, rank = basis.shape
    if rank >= dim:
        raise ValueError(f"signal subspace of rank {rank} leaves no noise subspace in dimension {dim}")

    angles = angle_grid(grid_step_deg)
    # -90 is evaluated too, as the left neighbour of the first grid point
    evaluated = np.concatenate(([-90.0], angles))
    if mode is ReceiveMode.ARS:
        steering = virtual_steering_ars(evaluated, dim, spacing)
    else:
        steering = virtual_steering_nars(evaluated, dim - 1, spacing)

    residual = steering - basis @ (basis.conj().T @ steering)
    denominator = np.sum(np.abs(residual) ** 2, axis=0)
    values = 1.0 / np.maximum(denominator, DENOMINATOR_FLOOR)
    return SpectrumGrid(angles_deg=angles, values=values[1:], below_grid_value=float(values[0]))


def pick_peaks(spectrum: SpectrumGrid, num_peaks: int) -> List[float]:
    """
    The num_peaks largest local maxima, refined by a 3-point parabola.

    Endpoints count: -90 degrees is the left neighbour of the first grid
    point, and the spectrum is mirrored about +90 since sin(90 + x) = sin(90 - x).
    Ties in height go to the smaller angle. The result is sorted ascending.

    Raises:
        ResolutionError: fewer local maxima than num_peaks
    """
    values = spectrum.values
    angles = spectrum.angles_deg
    mirror = values[-2] if len(values) > 1 else -np.inf
    padded = np.concatenate(([spectrum.below_grid_value], values, [mirror]))
    peaks = find_peaks(padded)[0] - 1
    if len(peaks) < num_peaks:
        raise ResolutionError(found=len(peaks), required=num_peaks, spectrum=spectrum)

    order = np.lexsort((angles[peaks], -values[peaks]))
    chosen = peaks[order[:num_peaks]]
    step = spectrum.step_deg

    estimates = []
    for i in chosen:
        left, centre, right = padded[i], padded[i + 1], padded[i + 2]
        curvature = left - 2.0 * centre + right
        offset = 0.5 * (left - right) / curvature if np.isfinite(left) and curvature < 0 else 0.0
        offset = min(max(offset, -0.5), 0.5)
        estimates.append(float(angles[i] + offset * step))

    logger.debug(f"{len(peaks)} local maxima, kept {num_peaks}")
    return sorted(estimates)
