"""Far-field photon correlations of a trapped-ion chain and isotope search experiments."""

from .correlations import (
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
from .geometry import (
    HALF_PI_PULSE,
    PI_PULSE,
    ExcitationPulse,
    FixedSecond,
    FixedSinDelta,
    Grid2D,
    IonChain,
    OffsetMagnitude,
    OppositeScan,
    Pattern,
    phase_projection,
    resolve_slice,
)
from .inference import (
    classical_search_sim,
    log_likelihood,
    pattern_distance,
    posterior_over_positions,
    run_search_experiment,
)
from .sampling import empirical_histogram, mix_seed, normalize, sample_events

__version__ = "0.1.0"
