"""
Isotope localization from detection events, and the one-by-one baseline.

Each candidate isotope position p yields a pattern; normalized, it is the
event distribution under hypothesis p. Events are scored by log-likelihood
under a uniform prior. Positions whose raw patterns coincide (the mirror pair
p, N+1-p of an equally spaced chain) form an equivalence class that no
measurement on the slice can split, and a search trial succeeds only when
the set of maximum-likelihood candidates is exactly the true class.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Optional, Sequence

import numpy as np

from .correlations import pattern_over_slice
from .errors import ConfigurationError, NonNormalizableError
from .geometry import PI_PULSE, ExcitationPulse, IonChain, Pattern, SliceSpec
from .sampling import (
    DiscreteDistribution,
    EventSet,
    check_same_bins,
    mix_seed,
    normalize,
    sample_events,
    uniform_stream,
)

LIKELIHOOD_FLOOR = 1e-300
#: Raw patterns closer than this (max abs difference) are the same hypothesis.
CLASS_TOL = 1e-9
#: Relative tolerance for counting log-likelihoods as tied.
TIE_RTOL = 1e-9


def thread_count() -> int:
    """Worker cap from ``IONSCOPE_THREADS`` (default: CPU count)."""
    env = os.environ.get("IONSCOPE_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigurationError(f"IONSCOPE_THREADS must be an integer, got {env!r}") from None
        return max(1, n)
    return os.cpu_count() or 1


def _log_probs(dist: DiscreteDistribution) -> np.ndarray:
    return np.log(np.maximum(dist.probs, LIKELIHOOD_FLOOR))


def _score(counts: np.ndarray, logp: np.ndarray) -> float:
    nz = np.flatnonzero(counts)
    # fsum: correctly rounded, so the score does not depend on summation order
    return math.fsum((counts[nz] * logp[nz]).tolist())


def log_likelihood(events: EventSet, candidate_dist: DiscreteDistribution) -> float:
    check_same_bins(events, candidate_dist)
    counts = np.bincount(events.events, minlength=candidate_dist.size)
    return _score(counts, _log_probs(candidate_dist))


class PatternDistance(NamedTuple):
    linf: float
    sym_kl: float


def _same_slice(p: Pattern, q: Pattern):
    if p.slice != q.slice or p.pairs.shape != q.pairs.shape or not np.array_equal(p.pairs, q.pairs):
        raise ConfigurationError("patterns were evaluated on different slices")


def pattern_distance(p: Pattern, q: Pattern) -> PatternDistance:
    """L-infinity distance of the normalized patterns and symmetrized KL divergence."""
    _same_slice(p, q)
    a = normalize(p).probs
    b = normalize(q).probs
    la = np.log(np.maximum(a, LIKELIHOOD_FLOOR))
    lb = np.log(np.maximum(b, LIKELIHOOD_FLOOR))
    kl = float(np.sum(a * (la - lb)) + np.sum(b * (lb - la)))
    return PatternDistance(float(np.max(np.abs(a - b))), max(kl, 0.0))


def equivalence_classes(patterns: dict[int, Pattern], tol: float = CLASS_TOL) -> list[frozenset]:
    """Partition candidate positions by raw pattern identity."""
    classes: list[list[int]] = []
    for p in sorted(patterns):
        v = patterns[p].flat_values
        for cls in classes:
            if np.max(np.abs(patterns[cls[0]].flat_values - v)) < tol:
                cls.append(p)
                break
        else:
            classes.append([p])
    return [frozenset(c) for c in classes]


@dataclass(frozen=True, eq=False)
class CandidateModel:
    """Per-position patterns and event distributions for one chain and slice."""

    n: int
    patterns: dict[int, Pattern]
    dists: dict[int, DiscreteDistribution]
    classes: list[frozenset]
    excluded: tuple[int, ...]
    log_probs: dict[int, np.ndarray] = field(repr=False)

    @property
    def candidates(self) -> list[int]:
        return sorted(self.dists)

    def class_of(self, p: int) -> frozenset:
        for cls in self.classes:
            if p in cls:
                return cls
        raise KeyError(p)


def build_candidates(chain_template: IonChain, slice_: SliceSpec, order: int = 2,
                     pulse: ExcitationPulse = PI_PULSE) -> CandidateModel:
    if chain_template.n < 3:
        raise ConfigurationError(f"isotope search needs N >= 3 ions, got {chain_template.n}")
    patterns, dists, excluded = {}, {}, []
    for p in range(1, chain_template.n + 1):
        pat = pattern_over_slice(order, chain_template.with_isotope(p), pulse, slice_)
        if not pat.normalizable:
            excluded.append(p)
            continue
        patterns[p] = pat
        dists[p] = normalize(pat)
    if not dists:
        raise NonNormalizableError("no candidate position yields a normalizable pattern")
    return CandidateModel(
        chain_template.n, patterns, dists, equivalence_classes(patterns), tuple(excluded),
        {p: _log_probs(d) for p, d in dists.items()},
    )


@dataclass(frozen=True)
class PosteriorReport:
    log_likelihoods: dict[int, float]
    posterior: dict[int, float]
    map_set: frozenset
    equivalence_classes: list[frozenset]
    excluded: tuple[int, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "log_likelihoods": {str(p): v for p, v in self.log_likelihoods.items()},
            "posterior": {str(p): v for p, v in self.posterior.items()},
            "map_set": sorted(self.map_set),
            "equivalence_classes": [sorted(c) for c in self.equivalence_classes],
            "excluded": list(self.excluded),
        }


def _report(model: CandidateModel, counts: np.ndarray) -> PosteriorReport:
    ps = model.candidates
    ll = {p: _score(counts, model.log_probs[p]) for p in ps}
    top = max(ll.values())
    w = {p: math.exp(ll[p] - top) for p in ps}
    total = math.fsum(w.values())
    post = {p: w[p] / total for p in ps}
    tol = TIE_RTOL * max(1.0, abs(top))
    map_set = frozenset(p for p in ps if ll[p] >= top - tol)
    return PosteriorReport(ll, post, map_set, model.classes, model.excluded)


def posterior_over_positions(events: EventSet, chain_template: IonChain, slice_: SliceSpec,
                             order: int = 2, pulse: ExcitationPulse = PI_PULSE,
                             model: Optional[CandidateModel] = None) -> PosteriorReport:
    """Posterior over isotope positions (uniform prior) given detection events.

    The isotope of ``chain_template`` is ignored. Candidates whose pattern is
    not normalizable are listed in ``excluded`` and carry no posterior mass.
    """
    if model is None:
        model = build_candidates(chain_template, slice_, order, pulse)
    first = model.dists[model.candidates[0]]
    check_same_bins(events, first)
    counts = np.bincount(events.events, minlength=first.size)
    return _report(model, counts)


@dataclass(frozen=True)
class SearchExperimentResult:
    n: int
    spacing_lambda: Optional[float]
    positions_lambda: list[float]
    true_p: int
    true_class: list[int]
    slice: dict[str, Any]
    schedule: list[int]
    n_trials: int
    success_rates: list[float]
    m_at_95: Optional[int]
    classical_mean_probes: float
    master_seed: int

    @property
    def mean_events_to_confidence(self) -> Optional[int]:
        return self.m_at_95

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "spacing_lambda": self.spacing_lambda,
            "positions_lambda": self.positions_lambda,
            "true_p": self.true_p,
            "true_class": self.true_class,
            "slice": self.slice,
            "schedule": self.schedule,
            "n_trials": self.n_trials,
            "success_rates": self.success_rates,
            "m_at_95": self.m_at_95,
            "classical_mean_probes": self.classical_mean_probes,
            "master_seed": self.master_seed,
        }


def run_search_experiment(chain: IonChain, slice_: SliceSpec, true_p: int,
                          schedule: Sequence[int], n_trials: int, master_seed: int,
                          order: int = 2, pulse: ExcitationPulse = PI_PULSE,
                          threads: Optional[int] = None) -> SearchExperimentResult:
    """Repeated simulated searches for an isotope at ``true_p``.

    Trial t draws ``max(schedule)`` events with seed ``mix_seed(master_seed, t)``;
    schedule point m scores the first m of them.
    """
    schedule = [int(m) for m in schedule]
    if not schedule or any(m < 0 for m in schedule) or schedule != sorted(set(schedule)):
        raise ConfigurationError("schedule must be a non-empty strictly ascending list of counts >= 0")
    if n_trials < 1:
        raise ConfigurationError("n_trials must be >= 1")
    target = chain.with_isotope(true_p)  # validates true_p
    model = build_candidates(target, slice_, order, pulse)
    if true_p not in model.dists:
        raise NonNormalizableError(f"pattern for true isotope position {true_p} is not normalizable")
    true_dist = model.dists[true_p]
    true_class = model.class_of(true_p)
    m_max = schedule[-1]

    def trial(t: int) -> list[bool]:
        ev = sample_events(true_dist, m_max, mix_seed(master_seed, t)).events
        out = []
        for m in schedule:
            counts = np.bincount(ev[:m], minlength=true_dist.size)
            out.append(_report(model, counts).map_set == true_class)
        return out

    workers = min(threads or thread_count(), n_trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(trial, range(n_trials)))
    else:
        results = [trial(t) for t in range(n_trials)]

    wins = np.sum(np.array(results, dtype=np.int64), axis=0)
    rates = [int(w) / n_trials for w in wins]
    m95 = next((m for m, r in zip(schedule, rates) if r >= 0.95), None)
    return SearchExperimentResult(
        n=chain.n,
        spacing_lambda=chain.spacing,
        positions_lambda=list(chain.positions),
        true_p=true_p,
        true_class=sorted(true_class),
        slice=slice_.to_dict(),
        schedule=schedule,
        n_trials=n_trials,
        success_rates=rates,
        m_at_95=m95,
        classical_mean_probes=classical_search_sim(chain.n, n_trials, master_seed),
        master_seed=master_seed,
    )


# ---------------------------------------------------------------------------
# Classical baseline: probe ions one at a time
# ---------------------------------------------------------------------------


def classical_probe_counts(n: int, n_trials: int, master_seed: int) -> np.ndarray:
    """Probes used per trial when ions 1..N-1 are excited one by one.

    The search stops at the first dark ion; if ions 1..N-1 all fluoresce the
    isotope must be ion N, so at most N-1 probes are needed.
    """
    if n < 2:
        raise ConfigurationError("classical search needs N >= 2")
    u = uniform_stream(master_seed, n_trials)
    dark = np.floor(u * n).astype(np.int64) + 1
    probes = np.zeros(n_trials, dtype=np.int64)
    searching = np.ones(n_trials, dtype=bool)
    for k in range(1, n):
        probes += searching
        searching &= dark != k
    return probes


def classical_search_sim(n: int, n_trials: int, master_seed: int) -> float:
    return float(classical_probe_counts(n, n_trials, master_seed).mean())


def expected_classical_probes(n: int) -> float:
    """Mean probe count for a uniformly placed isotope: (N-1)(N+2)/(2N)."""
    return (n - 1) * (n + 2) / (2 * n)
