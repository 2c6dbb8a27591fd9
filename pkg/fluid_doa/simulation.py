"""
Block-fading multipath simulator for fluid-antenna receivers.

ARS: every movement state within a block sees the same effective signal
(gain times symbol). NARS: gains are shared within the block but each state
draws fresh symbols.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from loguru import logger
from numpy.random import Generator

from .geometry import positions
from .models import ArraySpec, ReceiveMode, Scene
from .providers import block_generators


@dataclass
class SnapshotSet:
    """Receiver outputs over N time blocks."""

    mode: ReceiveMode
    num_blocks: int
    num_states: int
    stacked: Optional[np.ndarray] = None  # ARS: (G+1)M x N, state-major rows
    states: List[np.ndarray] = field(default_factory=list)  # NARS: G+1 matrices, M x N

    def state(self, g: int) -> np.ndarray:
        """M x N data of one movement state, for either mode."""
        if self.mode is ReceiveMode.NARS:
            return self.states[g]
        rows = self.stacked.shape[0] // self.num_states
        return self.stacked[g * rows:(g + 1) * rows]


def _complex_normal(rng: Generator, variance: float, shape) -> np.ndarray:
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def steering_vector(positions_wl: Sequence[float], theta_deg: float) -> np.ndarray:
    """exp(-j 2 pi x sin(theta)) for element coordinates x in wavelengths."""
    x = np.asarray(positions_wl, dtype=float)
    return np.exp(-2j * np.pi * x * np.sin(np.deg2rad(theta_deg)))


def steering_matrix(positions_wl: Sequence[float], thetas_deg: Sequence[float]) -> np.ndarray:
    """Columns are steering vectors, one per direction."""
    x = np.asarray(positions_wl, dtype=float)[:, None]
    sines = np.sin(np.deg2rad(np.asarray(thetas_deg, dtype=float)))[None, :]
    return np.exp(-2j * np.pi * x * sines)


def state_manifold(scene: Scene, spec: ArraySpec, g: int) -> np.ndarray:
    """M x KL manifold A_g of movement state g."""
    return steering_matrix(positions(spec, g).wavelengths, scene.flat_doas_deg)


def stacked_manifold(scene: Scene, spec: ArraySpec) -> np.ndarray:
    """(G+1)M x KL manifold with state g in rows gM..(g+1)M-1."""
    return np.vstack([state_manifold(scene, spec, g) for g in range(spec.num_states)])


def draw_block_gains(scene: Scene, rng: Generator) -> np.ndarray:
    """K x L path gains, i.i.d. CN(0, path_gain_var), constant over one block."""
    return _complex_normal(rng, scene.path_gain_var, (scene.num_users, scene.paths_per_user))


def _effective_signal(scene: Scene, gains: np.ndarray, rng: Generator) -> np.ndarray:
    # one symbol per user, carried by all L of its paths
    symbols = _complex_normal(rng, scene.signal_power, scene.num_users)
    return (gains * symbols[:, None]).ravel()


def simulate_block_ars(
    scene: Scene,
    spec: ArraySpec,
    gains: np.ndarray,
    rng: Generator,
    manifold: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Stacked receive vector x_n of length (G+1)M for one block.

    Args:
        scene: Channel statistics
        spec: ARS array
        gains: K x L block gains
        rng: Stream of this block
        manifold: Precomputed stacked manifold, built from scene/spec when omitted

    Returns:
        A s'_n + e_n with the same s'_n for every movement state
    """
    if spec.mode is not ReceiveMode.ARS:
        raise ValueError("simulate_block_ars requires an ARS array")
    if manifold is None:
        manifold = stacked_manifold(scene, spec)
    signal = _effective_signal(scene, gains, rng)
    noise = _complex_normal(rng, scene.noise_var, manifold.shape[0])
    return manifold @ signal + noise


def simulate_block_nars(
    scene: Scene,
    spec: ArraySpec,
    gains: np.ndarray,
    rng: Generator,
    manifolds: Optional[List[np.ndarray]] = None,
) -> List[np.ndarray]:
    """
    Per-state receive vectors x_{n,g} for one block.

    Gains are shared across states; symbols are drawn afresh for every state.
    """
    if spec.mode is not ReceiveMode.NARS:
        raise ValueError("simulate_block_nars requires a NARS array")
    if manifolds is None:
        manifolds = [state_manifold(scene, spec, g) for g in range(spec.num_states)]
    signals = [_effective_signal(scene, gains, rng) for _ in range(spec.num_states)]
    noises = [
        _complex_normal(rng, scene.noise_var, spec.num_antennas) for _ in range(spec.num_states)
    ]
    return [a @ s + e for a, s, e in zip(manifolds, signals, noises)]


def simulate_dataset(scene: Scene, spec: ArraySpec, num_blocks: int, seed: int) -> SnapshotSet:
    """
    Simulate N independent blocks; bit-identical for identical arguments.

    Each block draws from its own child stream of ``seed`` in the order
    gains, symbols, noise.
    """
    if num_blocks < 1:
        raise ValueError("num_blocks must be at least 1")

    rngs = block_generators(seed, num_blocks)
    if spec.mode is ReceiveMode.ARS:
        manifold = stacked_manifold(scene, spec)
        columns = [
            simulate_block_ars(scene, spec, draw_block_gains(scene, rng), rng, manifold)
            for rng in rngs
        ]
        stacked = np.column_stack(columns)
        logger.debug(f"Simulated ARS dataset {stacked.shape} (seed={seed})")
        return SnapshotSet(
            mode=spec.mode, num_blocks=num_blocks, num_states=spec.num_states, stacked=stacked
        )

    manifolds = [state_manifold(scene, spec, g) for g in range(spec.num_states)]
    blocks = [
        simulate_block_nars(scene, spec, draw_block_gains(scene, rng), rng, manifolds)
        for rng in rngs
    ]
    states = [np.column_stack([block[g] for block in blocks]) for g in range(spec.num_states)]
    logger.debug(f"Simulated NARS dataset: {spec.num_states} states x {states[0].shape} (seed={seed})")
    return SnapshotSet(mode=spec.mode, num_blocks=num_blocks, num_states=spec.num_states, states=states)


def virtual_manifold(scene: Scene, spec: ArraySpec) -> np.ndarray:
    """Manifold B of the synthesized ULA at 0, d, ..., (M(G+1)-1)d."""
    units = np.arange(spec.num_antennas * spec.num_states)
    return steering_matrix(units * spec.step, scene.flat_doas_deg)


def analytic_virtual_covariance(scene: Scene, spec: ArraySpec) -> np.ndarray:
    """Infinite-snapshot covariance of the rearranged ARS data, B R_S B^H + noise I."""
    b = virtual_manifold(scene, spec)
    return scene.path_power * (b @ b.conj().T) + scene.noise_var * np.eye(b.shape[0])


def analytic_sub_covariances(scene: Scene, spec: ArraySpec) -> List[np.ndarray]:
    """Infinite-snapshot per-state covariances A_g R_S A_g^H + noise I."""
    covs = []
    for g in range(spec.num_states):
        a = state_manifold(scene, spec, g)
        covs.append(scene.path_power * (a @ a.conj().T) + scene.noise_var * np.eye(a.shape[0]))
    return covs
