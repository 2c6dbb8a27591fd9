"""
Fluid-antenna positions per movement state and the lag sets they generate.

Positions are integer multiples of the step d; physical coordinates are only
materialized (``PositionSet.wavelengths``) when steering vectors are built.
"""
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, Tuple

import numpy as np

from .models import ArraySpec, ReceiveMode


@dataclass(frozen=True)
class PositionSet:
    """Element positions of one movement state, in units of the step d."""

    state: int
    units: Tuple[int, ...]
    step: float

    @property
    def wavelengths(self) -> np.ndarray:
        return np.asarray(self.units, dtype=float) * self.step

    def __len__(self) -> int:
        return len(self.units)


@dataclass(frozen=True)
class LagEntry:
    """Covariance entry (state g, row m1, column m2), 1-based antenna indices."""

    state: int
    row: int
    col: int


def _check_state(spec: ArraySpec, g: int) -> None:
    if not 0 <= g <= spec.num_movements:
        raise ValueError(f"state index {g} outside [0, {spec.num_movements}]")


def ars_positions(spec: ArraySpec, g: int) -> PositionSet:
    """
    Positions at state g for aligned received signals.

    Antenna m sits at ((m-1)(G+1) + g)d, so pooling all states fills
    0..M(G+1)-1 without gaps.
    """
    if spec.mode is not ReceiveMode.ARS:
        raise ValueError("ars_positions requires an ARS array")
    _check_state(spec, g)
    stride = spec.num_states
    units = tuple((m - 1) * stride + g for m in range(1, spec.num_antennas + 1))
    return PositionSet(state=g, units=units, step=spec.step)


def nars_positions(spec: ArraySpec, g: int) -> PositionSet:
    """
    Positions at state g for non-aligned received signals.

    Antenna 1 is the fixed reference at 0; antenna m >= 2 sits at
    ((m-2)(G+1) + g + 1)d.
    """
    if spec.mode is not ReceiveMode.NARS:
        raise ValueError("nars_positions requires a NARS array")
    if spec.num_antennas < 2:
        raise ValueError("NARS needs at least two antennas")
    _check_state(spec, g)
    stride = spec.num_states
    units = (0,) + tuple((m - 2) * stride + g + 1 for m in range(2, spec.num_antennas + 1))
    return PositionSet(state=g, units=units, step=spec.step)


def positions(spec: ArraySpec, g: int) -> PositionSet:
    """Dispatch on the array mode."""
    if spec.mode is ReceiveMode.ARS:
        return ars_positions(spec, g)
    return nars_positions(spec, g)


def ars_lag_set(spec: ArraySpec) -> FrozenSet[int]:
    """First-order lags: every position any antenna visits."""
    return frozenset(
        unit for g in range(spec.num_states) for unit in ars_positions(spec, g).units
    )


def nars_lag_set(spec: ArraySpec) -> FrozenSet[int]:
    """Second-order difference lags over all antenna pairs within each state."""
    lags = set()
    for g in range(spec.num_states):
        units = nars_positions(spec, g).units
        lags.update(a - b for a in units for b in units)
    return frozenset(lags)


@lru_cache(maxsize=256)
def _lag_table(spec: ArraySpec) -> Dict[int, LagEntry]:
    table: Dict[int, LagEntry] = {0: LagEntry(state=0, row=1, col=1)}
    for g in range(spec.num_states):
        units = nars_positions(spec, g).units
        for m in range(2, spec.num_antennas + 1):
            lag = units[m - 1]
            table.setdefault(lag, LagEntry(state=g, row=m, col=1))
            table.setdefault(-lag, LagEntry(state=g, row=1, col=m))
    return table


def lag_lookup(spec: ArraySpec, lag: int) -> LagEntry:
    """
    Locate the sub-covariance entry that samples a given difference lag.

    Args:
        spec: NARS array
        lag: Difference lag in units of d, |lag| <= M_g

    Returns:
        LagEntry pairing a movable antenna with the fixed reference
        (row m for positive lags, column m for negative ones)
    """
    if spec.mode is not ReceiveMode.NARS:
        raise ValueError("lag_lookup requires a NARS array")
    entry = _lag_table(spec).get(lag)
    if entry is None:
        raise ValueError(f"lag {lag} outside coverage [-{spec.max_lag}, {spec.max_lag}]")
    return entry


def max_estimable_paths(spec: ArraySpec) -> int:
    """M(G+1) - 1 for ARS, M_g for NARS."""
    return spec.max_estimable_paths


def max_estimable_users(spec: ArraySpec, paths_per_user: int) -> int:
    """Users with L paths each that fit under the path bound, ceil(P/L - 1)."""
    if paths_per_user < 1:
        raise ValueError("paths_per_user must be positive")
    return max(0, math.ceil(spec.max_estimable_paths / paths_per_user - 1))
