import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_g2, interior_maxima
from ionscope.correlations import (
    g1_four_closed,
    g1_pattern,
    g1_values,
    g2_four_closed,
    g2_pattern,
    g2_two_ion_closed,
    g2_values,
    pair_phase,
    pattern_over_slice,
)
from ionscope.errors import DegenerateConfigurationError, UnsupportedConfigurationError
from ionscope.geometry import (
    HALF_PI_PULSE,
    PI_PULSE,
    ExcitationPulse,
    FixedSecond,
    FixedSinDelta,
    Grid2D,
    IonChain,
    OffsetMagnitude,
    OppositeScan,
)

angles = st.floats(-math.pi / 2, math.pi / 2)


@st.composite
def chains(draw, min_n=2, max_n=9):
    n = draw(st.integers(min_n, max_n))
    gaps = draw(st.lists(st.floats(0.05, 6.0), min_size=n - 1, max_size=n - 1))
    pos = np.concatenate([[0.0], np.cumsum(gaps)])
    isotope = draw(st.one_of(st.none(), st.integers(1, n)))
    return IonChain(tuple(pos), isotope)


class TestPairPhase:
    def test_antisymmetric_and_zero_on_diagonal(self):
        chain = IonChain((0.0, 1.3, 3.1))
        a = pair_phase(chain, 1, 3, 0.4, -0.2)
        b = pair_phase(chain, 3, 1, 0.4, -0.2)
        assert a.value == -b.value
        assert a.value == pytest.approx(2 * math.pi * (-3.1) * (math.sin(0.4) - math.sin(-0.2)))
        assert pair_phase(chain, 1, 2, 0.3, 0.3).value == 0.0


class TestG2:
    def test_equal_angles(self):
        chain = IonChain.equally_spaced(4, 5.75, isotope=2)
        assert g2_values(chain, 0.3, 0.3) == 12.0
        chain = IonChain((0.0, 1.3, 3.1, 5.9, 7.0))
        assert g2_values(chain, -0.7, -0.7) == 4 * math.comb(5, 2)

    def test_two_ion_law(self, rng):
        p1, p2 = rng.uniform(-1.5, 1.5, (2, 200))
        chain = IonChain((0.0, 1.7))
        assert np.max(np.abs(g2_values(chain, p1, p2) - g2_two_ion_closed(1.7, p1, p2))) < 1e-12

    def test_two_ion_closed_examples(self):
        assert g2_two_ion_closed(3.3, 0.2, 0.2) == 4.0
        # sin(pi/2) - sin(0) = 1, phase pi
        assert g2_two_ion_closed(0.5, math.pi / 2, 0.0) == pytest.approx(0.0, abs=1e-15)
        assert g2_values(IonChain((0.0, 0.5)), math.pi / 2, 0.0) == pytest.approx(0.0, abs=1e-15)
        assert g2_two_ion_closed(5.75, 0.1, -0.1) == pytest.approx(
            g2_values(IonChain((0.0, 5.75)), 0.1, -0.1), abs=1e-12)
        with pytest.raises(ValueError):
            g2_two_ion_closed(0.0, 0.1, 0.2)

    def test_four_closed_examples(self):
        assert g2_four_closed(5.75, 1, 0.2, 0.2) == 12.0
        assert g2_four_closed(5.75, 2, 0.2, 0.2) == 12.0
        with pytest.raises(ValueError):
            g2_four_closed(5.75, 5, 0.1, 0.1)

    def test_four_closed_mirror(self, rng):
        p1, p2 = rng.uniform(-1.5, 1.5, (2, 100))
        assert np.array_equal(g2_four_closed(5.75, 1, p1, p2), g2_four_closed(5.75, 4, p1, p2))
        assert np.array_equal(g2_four_closed(5.75, 2, p1, p2), g2_four_closed(5.75, 3, p1, p2))

    def test_four_closed_matches_pattern_p3(self, rng):
        p1, p2 = rng.uniform(-1.5, 1.5, (2, 100))
        chain = IonChain.equally_spaced(4, 5.75, 3)
        assert np.max(np.abs(g2_values(chain, p1, p2) - g2_four_closed(5.75, 3, p1, p2))) < 1e-12

    def test_too_few_radiating_ions(self):
        pat = g2_pattern(IonChain((0.0, 1.0), isotope=1), OppositeScan())
        assert np.all(pat.values == 0)
        assert not pat.normalizable

    @settings(max_examples=40, deadline=None)
    @given(chains(max_n=9), angles, angles)
    def test_matches_complex_enumeration(self, chain, a, b):
        ref = brute_g2(chain.positions, chain.isotope, a, b)[0]
        assert g2_values(chain, a, b) == pytest.approx(ref, abs=1e-10)

    @given(chains(), st.lists(angles, min_size=2, max_size=2))
    def test_swap_symmetry(self, chain, ab):
        a, b = ab
        assert g2_values(chain, a, b) == g2_values(chain, b, a)

    @given(chains(), angles, angles, st.floats(-0.5, 0.5))
    def test_depends_only_on_sin_difference(self, chain, a, b, shift):
        delta = math.sin(a) - math.sin(b)
        s1 = math.sin(a) + shift
        s2 = s1 - delta
        if abs(s1) > 1 or abs(s2) > 1:
            return
        c, d = math.asin(s1), math.asin(s2)
        if abs(math.sin(c) - math.sin(d) - delta) > 1e-15:
            return
        assert g2_values(chain, a, b) == pytest.approx(g2_values(chain, c, d), abs=1e-12)

    @given(chains(), angles, angles)
    def test_bounds(self, chain, a, b):
        nr = len(chain.radiating)
        v = g2_values(chain, a, b)
        assert 0 <= v <= 4 * math.comb(nr, 2) + 1e-12

    @given(chains(min_n=3), angles, angles)
    def test_mirror_degeneracy_equal_spacing(self, chain, a, b):
        eq = IonChain.equally_spaced(chain.n, 0.8, chain.isotope or 1)
        mirror = eq.with_isotope(eq.n + 1 - eq.isotope)
        assert g2_values(eq, a, b) == pytest.approx(g2_values(mirror, a, b), abs=1e-12)
        assert g1_values(eq, HALF_PI_PULSE, a) == pytest.approx(g1_values(mirror, HALF_PI_PULSE, a), abs=1e-12)


class TestG1:
    def test_pi_pulse_is_flat(self):
        pat = g1_pattern(IonChain.equally_spaced(4, 5.75, 1), PI_PULSE, FixedSecond())
        assert np.ptp(pat.values) < 1e-12
        assert np.all(pat.values == 3.0)

    def test_half_pi_at_normal(self):
        assert g1_values(IonChain.equally_spaced(4, 5.75, 1), HALF_PI_PULSE, 0.0) == pytest.approx(3.0, abs=1e-14)
        assert g1_four_closed(5.75, 1, 0.0) == 3.0
        assert g1_four_closed(5.75, 2, 0.0) == 3.0

    @pytest.mark.parametrize("p, phi", [(2, 0.2), (1, 0.15)])
    def test_matches_four_closed(self, p, phi):
        chain = IonChain.equally_spaced(4, 5.75, p)
        assert g1_values(chain, HALF_PI_PULSE, phi) == pytest.approx(g1_four_closed(5.75, p, phi), abs=1e-12)

    def test_coherence_phase_cancels(self, rng):
        # complex sum with an arbitrary common coherence phase: |sum_j c e^{i phase_j}|^2 + N(pop - |c|^2)
        chain = IonChain((0.0, 1.3, 3.1, 5.9), isotope=3)
        pulse = ExcitationPulse(1.1)
        phi = rng.uniform(-1.5, 1.5, 50)
        coh = math.sqrt(pulse.coh_sq) * np.exp(1j * 0.77)
        pos = np.array([chain.positions[j] for j in chain.radiating])
        field = (coh * np.exp(-1j * 2 * np.pi * np.multiply.outer(np.sin(phi), pos))).sum(axis=1)
        ref = np.abs(field) ** 2 + len(pos) * (pulse.pop_e - pulse.coh_sq)
        assert np.max(np.abs(g1_values(chain, pulse, phi) - ref)) < 1e-12

    @given(chains(), st.floats(0, math.pi), angles)
    def test_bounds(self, chain, theta, a):
        pulse = ExcitationPulse(theta)
        nr = len(chain.radiating)
        v = g1_values(chain, pulse, a)
        assert v >= 0
        assert v >= nr * pulse.pop_e - 2 * pulse.coh_sq * nr * (nr - 1) - 1e-12

    def test_grid_constant_along_phi2(self):
        pat = g1_pattern(IonChain.equally_spaced(3, 1.0), HALF_PI_PULSE, Grid2D(n_points=11))
        assert pat.values.shape == (11, 11)
        assert np.all(pat.values == pat.values[:, :1])

    def test_no_radiating_ion(self):
        # a two-ion chain always keeps one bright ion; build the degenerate case by hand
        class Dark(IonChain):
            @property
            def radiating(self):
                return []
        with pytest.raises(DegenerateConfigurationError):
            g1_values(Dark((0.0, 1.0)), PI_PULSE, 0.1)


class TestPatternOverSlice:
    def test_order1_pi_constant_on_any_slice(self):
        chain = IonChain.equally_spaced(9, 5.75, 4)
        for sl in (OppositeScan(), OffsetMagnitude(1 / math.pi), FixedSinDelta(0.378), Grid2D(n_points=21)):
            pat = pattern_over_slice(1, chain, PI_PULSE, sl)
            assert np.ptp(pat.values) < 1e-12

    def test_order2_constant_on_fixed_sin_delta(self):
        for p in range(1, 10):
            pat = pattern_over_slice(2, IonChain.equally_spaced(9, 5.75, p), PI_PULSE, FixedSinDelta(0.378))
            assert np.ptp(pat.values) < 1e-12

    def test_order2_needs_pi_pulse(self):
        with pytest.raises(UnsupportedConfigurationError):
            pattern_over_slice(2, IonChain.equally_spaced(4, 1.0, 1), HALF_PI_PULSE, OppositeScan())
        with pytest.raises(ValueError):
            pattern_over_slice(3, IonChain.equally_spaced(4, 1.0, 1), PI_PULSE, OppositeScan())

    def test_sub_half_wavelength_side_maxima(self):
        sl = OppositeScan(lo=-math.pi / 4, hi=math.pi / 4)
        pat = pattern_over_slice(2, IonChain.equally_spaced(4, 0.5, 1), PI_PULSE, sl)
        maxima = interior_maxima(pat.axis, pat.values)
        step = (math.pi / 2) / (sl.n_points - 1)
        assert len(maxima) == 3
        assert np.allclose(maxima, [-math.pi / 6, 0.0, math.pi / 6], atol=step)

    def test_pattern_metadata(self):
        chain = IonChain.equally_spaced(4, 5.75, 2)
        pat = pattern_over_slice(2, chain, PI_PULSE, OffsetMagnitude(1 / math.pi))
        assert pat.meta["order"] == 2 and pat.meta["isotope"] == 2
        assert pat.axis.shape == pat.values.shape == (798,)
        assert np.all(pat.values >= 0)
