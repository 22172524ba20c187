"""
First- and second-order far-field correlation patterns of the ion chain.

Normalization: every radiating pair contributes ``2 + 2 cos(phase)`` to G2,
so two bright ions at equal detector angles give 4. G1 carries the level
populations and coherences prepared by the excitation pulse. G2 is evaluated
for pi-pulse excitation only.

Summation runs over radiating pairs in lexicographic order (i < j), point by
point, so values do not depend on how the angle grid is partitioned.
"""

from __future__ import annotations

import math
from itertools import combinations
from typing import NamedTuple

import numpy as np

from .errors import DegenerateConfigurationError, UnsupportedConfigurationError
from .geometry import (
    PI_PULSE,
    ExcitationPulse,
    Grid2D,
    IonChain,
    Pattern,
    SliceSpec,
    resolve_slice,
)

TWO_PI = 2 * math.pi


class PairPhase(NamedTuple):
    i: int
    j: int
    value: float


def pair_phase(chain: IonChain, i: int, j: int, phi1: float, phi2: float) -> PairPhase:
    """Phase difference ``2 pi (R_i - R_j)(sin phi1 - sin phi2)`` for 1-based ions i, j."""
    for ion in (i, j):
        if not 1 <= ion <= chain.n:
            raise IndexError(f"ion index {ion} outside 1..{chain.n}")
    sep = chain.positions[i - 1] - chain.positions[j - 1]
    return PairPhase(i, j, TWO_PI * sep * (math.sin(phi1) - math.sin(phi2)))


def _radiating_pairs(chain: IonChain):
    pos = chain.positions
    return [(pos[a], pos[b]) for a, b in combinations(chain.radiating, 2)]


def g2_values(chain: IonChain, phi1, phi2) -> np.ndarray:
    """G2 at arbitrary detector angles (broadcast over ``phi1``, ``phi2``)."""
    delta = np.sin(np.asarray(phi1, dtype=float)) - np.sin(np.asarray(phi2, dtype=float))
    out = np.zeros_like(delta)
    for ri, rj in _radiating_pairs(chain):
        out += 2.0 + 2.0 * np.cos(TWO_PI * (ri - rj) * delta)
    return out


def g1_values(chain: IonChain, pulse: ExcitationPulse, phi1) -> np.ndarray:
    """G1 at arbitrary first-detector angles.

    The ordered-pair cross sum is folded into ``2 * sum_{i<j}``; the common
    coherence phase cancels, so only its magnitude enters.
    """
    n_rad = len(chain.radiating)
    if n_rad < 1:
        raise DegenerateConfigurationError("G1 needs at least one radiating ion")
    s1 = np.sin(np.asarray(phi1, dtype=float))
    cross = np.zeros_like(s1)
    for ri, rj in _radiating_pairs(chain):
        cross += np.cos(TWO_PI * (ri - rj) * s1)
    out = n_rad * pulse.pop_e + pulse.coh_sq * 2.0 * cross
    # exact value is >= 0 because coh_sq <= pop_e; clear rounding residue
    return np.maximum(out, 0.0)


def _pattern(chain, pulse, slice_, order, values_fn) -> Pattern:
    pairs = resolve_slice(slice_)
    values = values_fn(pairs[:, 0], pairs[:, 1])
    if isinstance(slice_, Grid2D):
        axis = slice_.axis()
        values = values.reshape(axis.size, axis.size)
    else:
        axis = pairs[:, 0].copy()
    return Pattern(slice_, axis, pairs, values, order, chain, pulse)


def g1_pattern(chain: IonChain, pulse: ExcitationPulse, slice_: SliceSpec) -> Pattern:
    """First-order pattern over a slice; phi2 is ignored (constant along it on a grid)."""
    return _pattern(chain, pulse, slice_, 1, lambda p1, p2: g1_values(chain, pulse, p1))


def g2_pattern(chain: IonChain, slice_: SliceSpec) -> Pattern:
    """Second-order pattern over a slice for pi-pulse excitation.

    With fewer than two radiating ions the pattern is identically zero and
    reports ``normalizable == False``.
    """
    return _pattern(chain, PI_PULSE, slice_, 2, lambda p1, p2: g2_values(chain, p1, p2))


def pattern_over_slice(order: int, chain: IonChain, pulse: ExcitationPulse,
                       slice_: SliceSpec) -> Pattern:
    if order == 1:
        return g1_pattern(chain, pulse, slice_)
    if order == 2:
        if not pulse.is_pi:
            raise UnsupportedConfigurationError(
                f"G2 is only modeled for pi-pulse excitation (got area {pulse.area!r})"
            )
        return g2_pattern(chain, slice_)
    raise ValueError(f"correlation order must be 1 or 2, got {order!r}")


# ---------------------------------------------------------------------------
# Closed forms for small equally spaced chains
# ---------------------------------------------------------------------------


def g2_two_ion_closed(separation: float, phi1, phi2):
    """Two bright ions a distance ``separation`` apart: 2 (1 + cos(phase))."""
    if not separation > 0:
        raise ValueError("separation must be positive")
    delta = np.sin(phi1) - np.sin(phi2)
    return 2.0 * (1.0 + np.cos(TWO_PI * separation * delta))


def _check_four(d, p):
    if p not in (1, 2, 3, 4):
        raise ValueError(f"isotope index {p!r} outside 1..4")
    if not d > 0:
        raise ValueError("spacing must be positive")


def g2_four_closed(d: float, p: int, phi1, phi2):
    """Four equally spaced ions, isotope at ``p``, pi-pulse excitation."""
    _check_four(d, p)
    delta = np.sin(phi1) - np.sin(phi2)
    c1, c2, c3 = (np.cos(TWO_PI * m * d * delta) for m in (1, 2, 3))
    if p in (1, 4):
        return 2.0 * (3.0 + 2.0 * c1 + c2)
    return 2.0 * (3.0 + c1 + c2 + c3)


def g1_four_closed(d: float, p: int, phi1):
    """Four equally spaced ions, isotope at ``p``, pi/2-pulse excitation."""
    _check_four(d, p)
    s1 = np.sin(phi1)
    c1, c2, c3 = (np.cos(TWO_PI * m * d * s1) for m in (1, 2, 3))
    if p in (1, 4):
        return 0.5 * (3.0 + 2.0 * c1 + c2)
    return 0.5 * (3.0 + c1 + c2 + c3)
