"""Simulation, estimation, and security analysis for a passively encoded
continuous-variable QKD link.

The package models a sender whose quadrature information is imprinted by
passive optics on a thermal source, a lossy fibre channel, and noisy
heterodyne receivers at both ends. It provides

* closed-form second moments, correlations, and noise figures
  (:mod:`passiveqkd.model`),
* a deterministic Monte Carlo sampler of the same linear model
  (:mod:`passiveqkd.sampling`),
* blocked correlation estimates and a mode-overlap fit
  (:mod:`passiveqkd.estimation`),
* asymptotic secure key rates against collective attacks
  (:mod:`passiveqkd.keyrate`),
* a JSON scenario format and CSV-emitting command line
  (:mod:`passiveqkd.scenario`, :mod:`passiveqkd.cli`).

All variances are expressed in shot-noise units (vacuum variance 1) and
all rates in bits per channel use.
"""

from .errors import (
    BatchSizeError,
    DegenerateDataError,
    ModelInconsistencyError,
    NumericalDomainError,
    ParameterError,
    PassiveQkdError,
    UnidentifiableFitError,
)
from .estimation import (
    CorrEstimate,
    FitResult,
    MutualInfoEstimate,
    blocked_correlation,
    empirical_mutual_info,
    fit_mode_overlap,
    read_points_csv,
    write_fit_report,
)
from .keyrate import (
    ATTENUATION_BOUNDS,
    HolevoResult,
    KeyRateResult,
    MeasuredKeyRate,
    NoiseBudget,
    bosonic_entropy,
    channel_added_noise,
    detector_added_noise,
    distance_cutoff,
    holevo_bound,
    key_rate_from_measurement,
    key_rate_point,
    mutual_information_bits,
    noise_budget,
    optimize_attenuation,
    secure_key_rate,
    total_added_noise,
    transmittance_from_length,
)
from .model import (
    AttackVariances,
    ChannelParams,
    ConjugateDetector,
    DetectorChannel,
    SecondMoments,
    SourceParams,
    SystemConfig,
    attenuation_security_threshold,
    beamsplit_attack_variances,
    conditional_uncertainty,
    correlation_coefficient,
    modulation_variance,
    mutual_information_from_correlation,
    mutual_information_from_variances,
    optimal_estimator_gain,
    preparation_excess_noise,
    quadrature_second_moments,
    thermal_quadrature_variance,
)
from .sampling import (
    CHUNK_SIZE,
    DEFAULT_MEMORY_LIMIT,
    RunSpec,
    SampleBatch,
    derive_point_seed,
    empirical_conditional_variance,
    read_sample_csv,
    simulate_batch,
    thermal_quadratures,
    write_sample_csv,
)
from .scenario import (
    DEFAULT_ETA_TOT_DB_GRID,
    DEFAULT_LENGTH_KM_GRID,
    DEFAULT_N0_GRID,
    KeyRateOptions,
    MeasuredPointSpec,
    Scenario,
    Sweep,
    db_from_linear,
    linear_from_db,
    load_scenario,
    parse_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "ATTENUATION_BOUNDS",
    "AttackVariances",
    "BatchSizeError",
    "CHUNK_SIZE",
    "ChannelParams",
    "ConjugateDetector",
    "CorrEstimate",
    "DEFAULT_ETA_TOT_DB_GRID",
    "DEFAULT_LENGTH_KM_GRID",
    "DEFAULT_MEMORY_LIMIT",
    "DEFAULT_N0_GRID",
    "DegenerateDataError",
    "DetectorChannel",
    "FitResult",
    "HolevoResult",
    "KeyRateOptions",
    "KeyRateResult",
    "MeasuredKeyRate",
    "MeasuredPointSpec",
    "ModelInconsistencyError",
    "MutualInfoEstimate",
    "NoiseBudget",
    "NumericalDomainError",
    "ParameterError",
    "PassiveQkdError",
    "RunSpec",
    "SampleBatch",
    "Scenario",
    "SecondMoments",
    "SourceParams",
    "Sweep",
    "SystemConfig",
    "UnidentifiableFitError",
    "attenuation_security_threshold",
    "beamsplit_attack_variances",
    "blocked_correlation",
    "bosonic_entropy",
    "channel_added_noise",
    "conditional_uncertainty",
    "correlation_coefficient",
    "db_from_linear",
    "derive_point_seed",
    "detector_added_noise",
    "distance_cutoff",
    "empirical_conditional_variance",
    "empirical_mutual_info",
    "fit_mode_overlap",
    "holevo_bound",
    "key_rate_from_measurement",
    "key_rate_point",
    "linear_from_db",
    "load_scenario",
    "modulation_variance",
    "mutual_information_bits",
    "mutual_information_from_correlation",
    "mutual_information_from_variances",
    "noise_budget",
    "optimal_estimator_gain",
    "optimize_attenuation",
    "parse_scenario",
    "preparation_excess_noise",
    "quadrature_second_moments",
    "read_points_csv",
    "read_sample_csv",
    "secure_key_rate",
    "simulate_batch",
    "thermal_quadrature_variance",
    "thermal_quadratures",
    "total_added_noise",
    "transmittance_from_length",
    "write_fit_report",
    "write_sample_csv",
]
