"""Homodyne detection of macroscopically bright multimode Gaussian light.

Library and CLI quantifying the excess noise a homodyne detector picks up
from bright unmatched modes, and its impact on squeezing, Gaussian
entanglement and continuous-variable QKD over lossy noisy channels.
"""

from .channel import ChannelParams, apply_channel, attenuation_db, distance_km, eta_from_db
from .detector import (
    DetectorConfig,
    ModeStatistics,
    balanced_variance,
    epsilon_tot,
    g_coefficient,
    squeezing_vanish_threshold,
    unbalanced_variance,
)
from .gaussian import (
    NumericalDomainError,
    PhysicalityError,
    SymplecticSpectrum,
    TwoModeCM,
    condition_on_homodyne,
    entropy_g,
    log_negativity,
    partial_transpose,
    symplectic_eigenvalues,
)
from .oracle import ModeSpec, OracleConfig, OracleEstimate, oracle_normalized_variance
from .protocols import (
    SchemeKind,
    SourceParams,
    entanglement_break_threshold,
    entanglement_break_threshold_numeric,
    entanglement_curve,
    epr_cm,
    shared_cm,
)
from .qkd import (
    AttenuationThreshold,
    KeyRateResult,
    OptimalPhotonNumber,
    holevo_bound,
    key_rate,
    max_tolerable_attenuation,
    mutual_information,
    optimal_photon_number,
)

__version__ = "0.1.0"
