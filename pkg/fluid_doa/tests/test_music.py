"""
Tests for the MUSIC grid, steering vectors, spectrum and peak picking.
"""
import numpy as np
import pytest

from ..models import ArraySpec, ReceiveMode, ResolutionError, Scene, SpectrumGrid
from ..music import (
    SPECTRUM_CAP,
    angle_grid,
    music_spectrum,
    pick_peaks,
    virtual_steering_ars,
    virtual_steering_nars,
)
from ..simulation import analytic_virtual_covariance
from ..subspace import exact_signal_subspace


def bumps(angles: np.ndarray, centres, width: float = 1.0, heights=None) -> np.ndarray:
    heights = heights or [1.0] * len(centres)
    values = np.full_like(angles, 1e-3)
    for centre, height in zip(centres, heights):
        values += height * np.exp(-(((angles - centre) / width) ** 2))
    return values


class TestGrid:
    """Test the angle grid."""

    def test_default_grid(self):
        """Test the default 0.05 degree grid."""
        grid = angle_grid()
        assert len(grid) == 3600
        assert grid[0] == pytest.approx(-89.95)
        assert grid[-1] == 90.0
        assert np.all(np.diff(grid) > 0)

    def test_coarse_grid(self):
        """Test a 30 degree grid."""
        assert angle_grid(30.0).tolist() == pytest.approx([-60.0, -30.0, 0.0, 30.0, 60.0, 90.0])

    @pytest.mark.parametrize("step", [0.0, -1.0, 0.07])
    def test_invalid_step(self, step):
        """Test that non-positive steps and steps not dividing 180 are refused."""
        with pytest.raises(ValueError):
            angle_grid(step)


class TestSteering:
    """Test virtual-array steering vectors."""

    def test_broadside(self):
        """Test that both steerings are all ones at 0 degrees."""
        assert np.allclose(virtual_steering_ars(0.0, 6), np.ones(6))
        assert np.allclose(virtual_steering_nars(0.0, 6), np.ones(7))

    def test_endfire_pair(self):
        """Test the ARS steering of two elements at +90 degrees."""
        assert np.allclose(virtual_steering_ars(90.0, 2, 0.5), [1.0, -1.0])

    def test_unit_modulus(self):
        """Test that every entry has unit modulus."""
        for theta in (-73.0, -5.0, 12.5, 88.0):
            v = virtual_steering_ars(theta, 9)
            assert np.vdot(v, v).real == pytest.approx(9.0)

    def test_nars_is_conjugate(self):
        """Test that the NARS steering conjugates the ARS one."""
        assert np.allclose(virtual_steering_nars(23.0, 4), np.conj(virtual_steering_ars(23.0, 5)))

    def test_nars_pair_matches_two_element_array(self):
        """Test the coarray steering for lags 0 and 1."""
        expected = np.array([1.0, np.exp(0.5j * np.pi)])
        assert np.allclose(virtual_steering_nars(30.0, 1), expected)

    def test_matrix_for_array_input(self):
        """Test one column per angle for array input."""
        matrix = virtual_steering_ars(np.array([-10.0, 0.0, 40.0]), 5)
        assert matrix.shape == (5, 3)
        assert np.allclose(matrix[:, 2], virtual_steering_ars(40.0, 5))


class TestSpectrum:
    """Test the MUSIC pseudo-spectrum."""

    def test_noise_free_peak_at_source(self):
        """Test that the capped maximum sits at the source."""
        spec = ArraySpec(mode=ReceiveMode.ARS, num_antennas=4)
        scene = Scene(doas_deg=[[10.0]], noise_var=0.0)
        subspace = exact_signal_subspace(analytic_virtual_covariance(scene, spec), 1)
        spectrum = music_spectrum(subspace, ReceiveMode.ARS)
        peak = spectrum.angles_deg[np.argmax(spectrum.values)]
        assert abs(peak - 10.0) < 0.025
        assert spectrum.values.max() == pytest.approx(SPECTRUM_CAP)

    def test_values_finite_and_positive(self, random_hermitian):
        """Test that spectrum values are finite, positive and capped."""
        subspace = exact_signal_subspace(random_hermitian(6), 2)
        spectrum = music_spectrum(subspace, ReceiveMode.NARS, grid_step_deg=0.5)
        assert len(spectrum) == 360
        assert np.all(np.isfinite(spectrum.values))
        assert np.all(spectrum.values > 0)
        assert np.all(spectrum.values <= SPECTRUM_CAP)

    def test_accepts_plain_basis(self):
        """Test a bare ndarray basis."""
        basis = np.zeros((4, 1), dtype=complex)
        basis[:, 0] = virtual_steering_ars(-30.0, 4) / 2.0
        spectrum = music_spectrum(basis, ReceiveMode.ARS, grid_step_deg=0.5)
        assert spectrum.angles_deg[np.argmax(spectrum.values)] == pytest.approx(-30.0)

    def test_full_rank_subspace_rejected(self):
        """Test that a basis with no noise subspace is refused."""
        with pytest.raises(ValueError, match="no noise subspace"):
            music_spectrum(np.eye(3, dtype=complex), ReceiveMode.ARS)


class TestPickPeaks:
    """Test peak selection and refinement."""

    def test_unimodal(self):
        """Test parabolic refinement of a single bump."""
        angles = angle_grid(0.05)
        values = bumps(angles, [12.34], width=3.0)
        estimates = pick_peaks(SpectrumGrid(angles, values), 1)
        assert len(estimates) == 1
        assert estimates[0] == pytest.approx(12.34, abs=0.01)

    def test_equal_heights_prefer_smaller_angle(self):
        """Test that equal peaks resolve to the smaller angle."""
        angles = angle_grid(0.05)
        left, right = angles[np.argmin(np.abs(angles + 30))], angles[np.argmin(np.abs(angles - 30))]
        values = bumps(angles, [left, right])
        assert pick_peaks(SpectrumGrid(angles, values), 1) == pytest.approx([-30.0], abs=1e-6)

    def test_two_bumps(self):
        """Test picking two peaks of different heights."""
        angles = angle_grid(0.05)
        values = bumps(angles, [35.0, -20.0], heights=[1.0, 0.6])
        estimates = pick_peaks(SpectrumGrid(angles, values), 2)
        assert estimates[0] == pytest.approx(-20.0, abs=0.01)
        assert estimates[1] == pytest.approx(35.0, abs=0.01)

    def test_largest_peaks_win(self):
        """Test that the highest peaks are kept."""
        angles = angle_grid(0.1)
        values = bumps(angles, [-60.0, 0.0, 45.0], heights=[0.2, 1.0, 0.8])
        assert pick_peaks(SpectrumGrid(angles, values), 2) == pytest.approx([0.0, 45.0], abs=0.01)

    def test_too_few_maxima(self):
        """Test that too few maxima raise ResolutionError carrying the spectrum."""
        angles = angle_grid(0.1)
        spectrum = SpectrumGrid(angles, bumps(angles, [5.0]))
        with pytest.raises(ResolutionError) as exc_info:
            pick_peaks(spectrum, 2)
        assert exc_info.value.found == 1
        assert exc_info.value.required == 2
        assert exc_info.value.spectrum is spectrum

    def test_peak_at_upper_endpoint(self):
        """Test that a maximum on the +90 degree grid point is picked."""
        angles = angle_grid(0.05)
        values = bumps(angles, [90.0, -20.0], heights=[1.0, 0.5])
        assert pick_peaks(SpectrumGrid(angles, values), 2) == pytest.approx([-20.0, 90.0], abs=1e-6)

    def test_peak_at_lower_endpoint(self):
        """Test that the first grid point counts as a maximum when nothing is known below it."""
        angles = angle_grid(0.1)
        values = bumps(angles, [angles[0]])
        assert pick_peaks(SpectrumGrid(angles, values), 1) == pytest.approx([angles[0]])

    def test_lower_endpoint_below_neighbour(self):
        """Test that the first grid point is not a maximum when -90 degrees is higher."""
        angles = angle_grid(0.1)
        values = bumps(angles, [angles[0], 30.0])
        spectrum = SpectrumGrid(angles, values, below_grid_value=10.0)
        assert pick_peaks(spectrum, 1) == pytest.approx([30.0], abs=0.01)
        with pytest.raises(ResolutionError):
            pick_peaks(spectrum, 2)

    def test_endfire_source(self):
        """Test that a source at +90 degrees is found and its alias at -90 degrees is not."""
        spec = ArraySpec(mode=ReceiveMode.ARS, num_antennas=2, num_movements=2)
        scene = Scene(doas_deg=[[-30.0, 90.0]], noise_var=0.1)
        subspace = exact_signal_subspace(analytic_virtual_covariance(scene, spec), 2)
        spectrum = music_spectrum(subspace, ReceiveMode.ARS)
        assert spectrum.below_grid_value == pytest.approx(SPECTRUM_CAP)
        assert pick_peaks(spectrum, 2) == pytest.approx([-30.0, 90.0], abs=0.05)


class TestGridRefinement:
    """Test that a finer grid never makes the noise-free estimate worse."""

    @pytest.mark.parametrize("truth", [12.31, -40.27, 71.08])
    def test_halving_step(self, truth):
        """Test single-path errors on 0.1 and 0.05 degree grids."""
        spec = ArraySpec(mode=ReceiveMode.ARS, num_antennas=4, num_movements=1)
        scene = Scene(doas_deg=[[truth]], noise_var=0.1)
        subspace = exact_signal_subspace(analytic_virtual_covariance(scene, spec), 1)
        errors = []
        for step in (0.1, 0.05):
            estimate = pick_peaks(music_spectrum(subspace, ReceiveMode.ARS, grid_step_deg=step), 1)[0]
            errors.append(abs(estimate - truth))
        assert errors[1] <= errors[0]
        assert errors[1] <= 0.025
