"""
Detection-event sampling from normalized correlation patterns.

Events are indices into the slice grid. Uniform variates come from numpy's
Philox counter-based bit generator keyed by a 64-bit seed; draw k is a pure
function of (seed, k), so results are identical on every platform. Seeds for
independent trials are derived with :func:`mix_seed` (SplitMix64 finalizer):

    z = seed + (t + 1) * 0x9E3779B97F4A7C15            (mod 2**64)
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9           (mod 2**64)
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB           (mod 2**64)
    z =  z ^ (z >> 31)
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import cached_property
from typing import Any

import numpy as np

from .errors import IntegrityError, NonNormalizableError
from .geometry import Pattern

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix_seed(master_seed: int, t: int) -> int:
    """Derive the 64-bit seed of trial ``t`` from ``master_seed``."""
    z = (int(master_seed) + (int(t) + 1) * _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def _check_seed(seed) -> int:
    if isinstance(seed, bool) or int(seed) != seed or not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return int(seed)


def uniform_stream(seed: int, m: int) -> np.ndarray:
    """First ``m`` uniform variates in [0, 1) of the stream keyed by ``seed``."""
    raw = np.random.Philox(key=_check_seed(seed)).random_raw(int(m))
    return (np.asarray(raw, dtype=np.uint64) >> np.uint64(11)).astype(np.float64) * 2.0**-53


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Probabilities over slice bins; ``bins`` is ``(n, k)`` with k = 1 (G1) or 2 (G2)."""

    bins: np.ndarray
    probs: np.ndarray
    cdf: np.ndarray

    @property
    def size(self) -> int:
        return int(self.probs.size)

    @cached_property
    def id(self) -> str:
        """Content hash of bins and probabilities."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.bins, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.probs, dtype="<f8").tobytes())
        return h.hexdigest()[:16]

    def same_bins(self, bins) -> bool:
        bins = np.asarray(bins, dtype=float)
        return bins.shape == self.bins.shape and bool(np.array_equal(bins, self.bins))


def normalize(pattern: Pattern) -> DiscreteDistribution:
    values = np.asarray(pattern.flat_values, dtype=float)
    total = values.sum()
    if not total > 0:
        raise NonNormalizableError(
            "pattern has no positive value (fewer than 2 radiating ions for G2, or a degenerate slice)"
        )
    probs = values / total
    cdf = np.cumsum(probs)
    # pin the last entry to exactly 1; trailing zero bins keep cdf == 1 and are never drawn
    cdf = cdf / cdf[-1]
    bins = pattern.pairs if pattern.order == 2 else pattern.pairs[:, :1]
    bins = np.array(bins, dtype=float)
    return DiscreteDistribution(bins, probs, cdf)


@dataclass(frozen=True, eq=False)
class EventSet:
    events: np.ndarray
    seed: int
    distribution_id: str
    bins: np.ndarray

    def __len__(self):
        return int(self.events.size)

    def head(self, m: int) -> "EventSet":
        """The first ``m`` draws, which are the events a smaller run would have produced."""
        return EventSet(self.events[:m], self.seed, self.distribution_id, self.bins)

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "distribution_id": self.distribution_id,
            "bins": self.bins.tolist(),
            "events": self.events.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "EventSet":
        bins = np.asarray(doc["bins"], dtype=float)
        if bins.ndim == 1:
            bins = bins[:, None]
        events = np.asarray(doc["events"], dtype=np.int64)
        if events.size and (events.min() < 0 or events.max() >= len(bins)):
            raise IntegrityError("event index outside the bin list")
        return cls(events, _check_seed(doc["seed"]), doc.get("distribution_id", ""), bins)

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "EventSet":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def sample_events(dist: DiscreteDistribution, m: int, seed: int) -> EventSet:
    """Draw ``m`` bin indices by inverse-CDF lookup on the seeded stream."""
    if m < 0:
        raise ValueError("event count must be >= 0")
    u = uniform_stream(seed, m)
    idx = np.searchsorted(dist.cdf, u, side="right").astype(np.int64)
    return EventSet(idx, _check_seed(seed), dist.id, dist.bins)


def check_same_bins(events: EventSet, dist: DiscreteDistribution):
    if events.distribution_id and events.distribution_id == dist.id:
        return
    if not dist.same_bins(events.bins):
        raise IntegrityError("event set and distribution use different bins")


@dataclass(frozen=True, eq=False)
class Histogram:
    counts: np.ndarray
    frequencies: np.ndarray

    @property
    def empty(self) -> bool:
        return int(self.counts.sum()) == 0


def empirical_histogram(events: EventSet, dist: DiscreteDistribution) -> Histogram:
    """Relative bin frequencies of ``events``.

    An empty event set yields all-zero frequencies with ``empty`` set.
    """
    if events.distribution_id and events.distribution_id != dist.id:
        raise IntegrityError(
            f"event set drawn from distribution {events.distribution_id}, not {dist.id}"
        )
    check_same_bins(events, dist)
    counts = np.bincount(events.events, minlength=dist.size)
    if counts.sum() == 0:
        return Histogram(counts, np.zeros(dist.size))
    return Histogram(counts, counts / counts.sum())


def total_variation(hist: Histogram, dist: DiscreteDistribution) -> float:
    return 0.5 * float(np.abs(hist.frequencies - dist.probs).sum())
