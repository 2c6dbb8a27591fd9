"""
Random-stream providers for the fluid-antenna DOA toolkit.

Every stochastic draw in the package comes from a generator built here, so a
seed fully determines a dataset, a Nystrom subset or a whole Monte-Carlo run.
"""
from typing import List, Tuple

import numpy as np
from numpy.random import Generator, Philox, SeedSequence


def make_generator(seed: int | SeedSequence) -> Generator:
    """Get a counter-based generator for a seed or an already spawned sequence."""
    sequence = seed if isinstance(seed, SeedSequence) else SeedSequence(seed)
    return Generator(Philox(sequence))


def block_generators(seed: int, num_blocks: int) -> List[Generator]:
    """One independent stream per time block, derived from the dataset seed."""
    return [make_generator(child) for child in SeedSequence(seed).spawn(num_blocks)]


def trial_seeds(master_seed: int, point: int, trial: int) -> Tuple[int, int]:
    """
    Derive the dataset seed and Nystrom seed of one Monte-Carlo trial.

    The derivation depends only on (master_seed, point, trial), so results do not
    depend on how trials are distributed over workers.
    """
    sequence = SeedSequence(master_seed, spawn_key=(point, trial))
    dataset_seed, nystrom_seed = sequence.generate_state(2, dtype=np.uint32)
    return int(dataset_seed), int(nystrom_seed)
