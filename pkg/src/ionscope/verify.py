"""
Self-check suite: closed-form oracles, brute-force parity and model invariants.

Every check reports its worst deviation against a fixed tolerance. A nonzero
``perturb`` adds uniform noise of that amplitude to the closed-form oracles,
which must make the equivalence checks fail (negative control).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from itertools import combinations
from typing import Callable

import numpy as np

from .correlations import (
    g1_four_closed,
    g1_values,
    g2_four_closed,
    g2_two_ion_closed,
    g2_values,
    pattern_over_slice,
)
from .geometry import (
    HALF_PI,
    HALF_PI_PULSE,
    PI_PULSE,
    ExcitationPulse,
    FixedSinDelta,
    IonChain,
    OffsetMagnitude,
    OppositeScan,
    resolve_slice,
)
from .inference import (
    classical_probe_counts,
    expected_classical_probes,
    pattern_distance,
)
from .sampling import normalize, sample_events

_SEED = 20040604


@dataclass
class CheckResult:
    name: str
    passed: bool
    max_abs_err: float
    tol: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<32} max_abs_err={self.max_abs_err:.3e}  tol={self.tol:.1e}  {self.detail}"

    def to_dict(self):
        return asdict(self)


def _result(name, err, tol, detail=""):
    err = float(err)
    return CheckResult(name, bool(err < tol), err, tol, detail)


def brute_force_g2(positions, isotope, phi1, phi2):
    """G2 by direct enumeration of |alpha_i beta_j + alpha_j beta_i|^2 over complex exponentials."""
    pos = np.asarray(positions, dtype=float)
    alpha = np.exp(1j * 2 * np.pi * np.multiply.outer(np.sin(phi1), pos))
    beta = np.exp(1j * 2 * np.pi * np.multiply.outer(np.sin(phi2), pos))
    bright = [j for j in range(pos.size) if isotope is None or j != isotope - 1]
    total = np.zeros(np.shape(phi1))
    for i, j in combinations(bright, 2):
        gamma = alpha[..., i] * beta[..., j] + alpha[..., j] * beta[..., i]
        total = total + np.abs(gamma) ** 2
    return total


class _Noise:
    def __init__(self, amplitude):
        self.amplitude = amplitude
        self.rng = np.random.default_rng(_SEED + 1)

    def __call__(self, values):
        values = np.asarray(values, dtype=float)
        if not self.amplitude:
            return values
        return values + self.amplitude * self.rng.uniform(-1, 1, values.shape)


def _angles(rng, n):
    return rng.uniform(-HALF_PI, HALF_PI, n), rng.uniform(-HALF_PI, HALF_PI, n)


def check_g2_four_closed(rng, noise):
    p1, p2 = _angles(rng, 1000)
    err = 0.0
    for p in range(1, 5):
        chain = IonChain.equally_spaced(4, 5.75, p)
        err = max(err, np.max(np.abs(g2_values(chain, p1, p2) - noise(g2_four_closed(5.75, p, p1, p2)))))
    return _result("g2_vs_four_ion_closed_form", err, 1e-12, "N=4 d=5.75 all p, 1000 pts")


def check_g2_two_ion(rng, noise):
    p1, p2 = _angles(rng, 1000)
    err = 0.0
    for s in (0.5, 1.3, 5.75):
        chain = IonChain((0.0, s))
        err = max(err, np.max(np.abs(g2_values(chain, p1, p2) - noise(g2_two_ion_closed(s, p1, p2)))))
    return _result("g2_vs_two_ion_closed_form", err, 1e-12, "s in {0.5,1.3,5.75}, 1000 pts")


def check_g1_four_closed(rng, noise):
    p1 = rng.uniform(-HALF_PI, HALF_PI, 1000)
    err = 0.0
    for p in range(1, 5):
        chain = IonChain.equally_spaced(4, 5.75, p)
        err = max(err, np.max(np.abs(g1_values(chain, HALF_PI_PULSE, p1) - noise(g1_four_closed(5.75, p, p1)))))
    return _result("g1_vs_four_ion_closed_form", err, 1e-12, "pi/2 pulse, all p, 1000 pts")


def check_g1_pi_flat(rng, noise):
    err = 0.0
    for n in (4, 9):
        for p in range(1, n + 1):
            pat = pattern_over_slice(1, IonChain.equally_spaced(n, 5.75, p), PI_PULSE, OppositeScan())
            v = pat.values
            err = max(err, np.ptp(v), np.max(np.abs(v - (n - 1))))
    return _result("g1_pi_pulse_flat", err, 1e-12, "N in {4,9}, value N-1")


def check_mirror(rng, noise):
    err = 0.0
    sl = OffsetMagnitude(1 / math.pi)
    for n in (4, 9):
        for p in range(1, n + 1):
            a = pattern_over_slice(2, IonChain.equally_spaced(n, 5.75, p), PI_PULSE, sl)
            b = pattern_over_slice(2, IonChain.equally_spaced(n, 5.75, n + 1 - p), PI_PULSE, sl)
            err = max(err, *pattern_distance(a, b))
            g1a = pattern_over_slice(1, IonChain.equally_spaced(n, 5.75, p), HALF_PI_PULSE, sl)
            g1b = pattern_over_slice(1, IonChain.equally_spaced(n, 5.75, n + 1 - p), HALF_PI_PULSE, sl)
            err = max(err, np.max(np.abs(g1a.values - g1b.values)))
    return _result("mirror_degeneracy", err, 1e-12, "p vs N+1-p, N in {4,9}")


def check_sindelta_constant(rng, noise):
    err = 0.0
    for p in range(1, 10):
        pat = pattern_over_slice(2, IonChain.equally_spaced(9, 5.75, p), PI_PULSE, FixedSinDelta(0.378))
        err = max(err, np.ptp(pat.values))
    return _result("g2_constant_on_fixed_sin_delta", err, 1e-12, "N=9 delta=0.378")


def _random_chain(rng, n):
    gaps = rng.uniform(0.2, 3.0, n - 1)
    return IonChain(tuple(np.concatenate([[0.0], np.cumsum(gaps)])), int(rng.integers(1, n + 1)))


def check_swap(rng, noise):
    err = 0.0
    for _ in range(20):
        chain = _random_chain(rng, int(rng.integers(2, 10)))
        p1, p2 = _angles(rng, 200)
        err = max(err, np.max(np.abs(g2_values(chain, p1, p2) - g2_values(chain, p2, p1))))
    return _result("detector_swap_symmetry", err, 1e-12)


def check_delta_sufficiency(rng, noise):
    err = 0.0
    for _ in range(20):
        chain = _random_chain(rng, int(rng.integers(3, 10)))
        p1, p2 = _angles(rng, 200)
        delta = np.sin(p1) - np.sin(p2)
        shift = rng.uniform(-0.5, 0.5, 200)
        s1 = np.clip(np.sin(p1) + shift, -1, 1)
        q1, q2 = np.arcsin(s1), np.arcsin(np.clip(s1 - delta, -1, 1))
        ok = np.abs(np.sin(q1) - np.sin(q2) - delta) < 1e-15
        err = max(err, np.max(np.abs(g2_values(chain, p1, p2)[ok] - g2_values(chain, q1, q2)[ok]), initial=0.0))
    return _result("g2_depends_only_on_sin_delta", err, 1e-12)


def check_brute_force(rng, noise):
    err = 0.0
    for _ in range(50):
        chain = _random_chain(rng, int(rng.integers(3, 10)))
        p1, p2 = _angles(rng, 200)
        err = max(err, np.max(np.abs(g2_values(chain, p1, p2) - noise(brute_force_g2(chain.positions, chain.isotope, p1, p2)))))
    return _result("g2_brute_force_parity", err, 1e-10, "50 unequal chains, N<=9")


def check_bounds(rng, noise):
    worst = 0.0
    for _ in range(20):
        chain = _random_chain(rng, int(rng.integers(2, 10)))
        p1, p2 = _angles(rng, 500)
        nr = len(chain.radiating)
        g2 = g2_values(chain, p1, p2)
        worst = max(worst, -g2.min(), g2.max() - 4 * math.comb(nr, 2))
        pulse = ExcitationPulse(rng.uniform(0, math.pi))
        g1 = g1_values(chain, pulse, p1)
        lower = nr * pulse.pop_e - 2 * pulse.coh_sq * nr * (nr - 1)
        worst = max(worst, -g1.min() - 1e-9, np.max(lower - g1))
    return _result("correlation_bounds", max(worst, 0.0), 1e-12, "0<=G2<=4C(Nr,2), G1 lower bound")


def check_slices(rng, noise):
    err = 0.0
    for d in (-1.5, -0.378, 0.0, 0.378, 1.2):
        pairs = resolve_slice(FixedSinDelta(d))
        err = max(err, np.max(np.abs(np.sin(pairs[:, 0]) - np.sin(pairs[:, 1]) - d)))
    for c in (0.0, 1 / math.pi, 1.0):
        pairs = resolve_slice(OffsetMagnitude(c))
        err = max(err, np.max(np.abs(np.abs(pairs[:, 0]) - np.abs(pairs[:, 1]) - c)))
    pairs = resolve_slice(OppositeScan())
    err = max(err, np.max(np.abs(pairs[:, 0] + pairs[:, 1])))
    return _result("slice_constraints", err, 1e-12)


def check_normalization(rng, noise):
    err = 0.0
    for p in range(1, 5):
        pat = pattern_over_slice(2, IonChain.equally_spaced(4, 5.75, p), PI_PULSE, OffsetMagnitude(1 / math.pi))
        dist = normalize(pat)
        err = max(err, abs(dist.probs.sum() - 1), abs(dist.cdf[-1] - 1))
    return _result("distribution_normalized", err, 1e-12)


def check_sampling_determinism(rng, noise):
    pat = pattern_over_slice(2, IonChain.equally_spaced(4, 5.75, 1), PI_PULSE, OffsetMagnitude(1 / math.pi))
    dist = normalize(pat)
    a = sample_events(dist, 1000, 42).events
    b = sample_events(dist, 1000, 42).events
    c = sample_events(dist, 1000, 43).events
    bad = int(not np.array_equal(a, b)) + int(np.array_equal(a, c))
    return _result("sampling_determinism", bad, 0.5, "same seed equal, different seed differs")


def check_classical(rng, noise):
    err = 0.0
    for n in (2, 4, 9, 100):
        probes = classical_probe_counts(n, 100_000, _SEED)
        sigma = probes.std(ddof=1) / math.sqrt(probes.size)
        dev = abs(probes.mean() - expected_classical_probes(n))
        # normalized deviation, must stay below 3 sigma (exact match when sigma is 0)
        err = max(err, dev / (3 * sigma) if sigma > 0 else (0.0 if dev == 0 else math.inf))
    return _result("classical_mean_probes", err, 1.0, "|mean - (N-1)(N+2)/2N| / 3 sigma, N in {2,4,9,100}")


CHECKS: list[Callable] = [
    check_g2_four_closed,
    check_g2_two_ion,
    check_g1_four_closed,
    check_g1_pi_flat,
    check_mirror,
    check_sindelta_constant,
    check_swap,
    check_delta_sufficiency,
    check_brute_force,
    check_bounds,
    check_slices,
    check_normalization,
    check_sampling_determinism,
    check_classical,
]


def run_checks(perturb: float = 0.0) -> list[CheckResult]:
    rng = np.random.default_rng(_SEED)
    noise = _Noise(perturb)
    return [check(rng, noise) for check in CHECKS]
