"""Lossless/causal approximations of dissipative linear systems.

Subpackages cover the core lossless state-space machinery (:mod:`.lti`), the
harmonic approximation of a memoryless gain (:mod:`.harmonic`), initial-state
ensembles and thermal noise (:mod:`.ensemble`), physical interconnection and
measurement back action (:mod:`.interconnect`), and certified approximation of
dissipative impulse responses (:mod:`.certify`).  The ``lossless-approx`` CLI
drives batch experiments and writes CSV tables plus figures.
"""

from .lti import (
    ControllabilityWarning,
    InputSignal,
    LosslessSystem,
    Trajectory,
    make_lossless,
    simulate,
    work_rate,
)
from .harmonic import (
    ErrorBoundReport,
    HarmonicRealization,
    apply_harmonic_gain,
    harmonic_gain,
    truncation_bound,
)
from .ensemble import (
    CovarianceEstimate,
    EnsembleSpec,
    FluctuationDissipationReport,
    TemperatureCheck,
    band_limited_power,
    check_temperature,
    fluctuation_dissipation_check,
    max_entropy_covariance,
    output_covariance,
    run_ensemble,
    white_noise_covariance,
)
from .interconnect import (
    HeatBath,
    NoisyLinearSystem,
    NoisyTrajectory,
    connect_heat_bath,
    interconnect,
    measure,
    run_noisy_ensemble,
    simulate_noisy,
)
from .certify import (
    ApproximationCertificate,
    CertificationError,
    ExtractionWitness,
    HarmonicBudgetError,
    ImpulseResponse,
    PositiveRealReport,
    build_certificate,
    check_positive_real,
    cosine_coefficients,
    cosine_realization,
    search_energy_extraction,
    verify_certificate,
)

__version__ = "0.1.0"
