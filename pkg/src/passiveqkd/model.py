"""Closed-form model of a passively encoded CV-QKD link.

All variances are in shot-noise units: the vacuum quadrature variance
equals 1 and a thermal mode with mean photon number n has quadrature
variance 2n + 1.

The link prepares Gaussian-modulated states without active modulators.
A broadband thermal source is split on a balanced beam splitter; the
sender (Alice) measures one output with a conjugate detector (both
quadratures at once) while the other output passes through a strong
attenuator of transmittance eta0 and becomes the transmitted signal.
Alice's detector record, multiplied by a fixed gain, is her best
estimate of the outgoing quadrature and plays the role of modulation
data. The receiver (Bob) measures the signal after a channel of
transmittance T with his own conjugate detector.

Two imperfections are modelled explicitly:

* Detector channels have sub-unit efficiency and additive electronic
  noise (``DetectorChannel``).
* Alice's detector may analyse a slightly different spectral-temporal
  mode than Bob's. The amplitude overlap ``a`` between the two modes is
  a number in [0, 1]; the mismatched fraction of the light Alice
  measures carries no information about the transmitted mode and so
  acts as preparation excess noise.

The X and P quadrature chains are structurally identical, each with its
own efficiency/noise pair, so every formula here is written once and
applied per quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import ModelInconsistencyError, ParameterError

__all__ = [
    "DetectorChannel",
    "ConjugateDetector",
    "SourceParams",
    "ChannelParams",
    "SystemConfig",
    "SecondMoments",
    "AttackVariances",
    "thermal_quadrature_variance",
    "modulation_variance",
    "optimal_estimator_gain",
    "preparation_excess_noise",
    "conditional_uncertainty",
    "quadrature_second_moments",
    "correlation_coefficient",
    "beamsplit_attack_variances",
    "mutual_information_from_variances",
    "mutual_information_from_correlation",
    "attenuation_security_threshold",
]

# Largest |corr| accepted before the mutual information diverges.
_CORR_LIMIT = 1.0 - 1e-15


def _fail(violations):
    if violations:
        raise ParameterError(violations)


def _check_fraction(value, name, violations, *, allow_zero=False):
    lo_ok = value > 0 or (allow_zero and value == 0)
    if not (isinstance(value, (int, float)) and math.isfinite(value) and lo_ok and value <= 1):
        low = "0 <= " if allow_zero else "0 < "
        violations.append(f"{name} must satisfy {low}{name} <= 1, got {value!r}")


def _check_nonneg(value, name, violations):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
        violations.append(f"{name} must be finite and >= 0, got {value!r}")


@dataclass(frozen=True)
class DetectorChannel:
    """One quadrature arm of a conjugate detector.

    Parameters
    ----------
    efficiency : float
        Optical/electrical efficiency of the arm, in (0, 1].
    noise_variance : float
        Additive electronic noise variance in shot-noise units, >= 0.
    """

    efficiency: float
    noise_variance: float

    def __post_init__(self):
        violations = []
        _check_fraction(self.efficiency, "efficiency", violations)
        _check_nonneg(self.noise_variance, "noise_variance", violations)
        _fail(violations)


@dataclass(frozen=True)
class ConjugateDetector:
    """Simultaneous X/P detector: one ``DetectorChannel`` per quadrature."""

    x: DetectorChannel
    p: DetectorChannel


@dataclass(frozen=True)
class SourceParams:
    """Thermal source and mode-matching description.

    Parameters
    ----------
    mean_photon_number : float
        Mean photon number n0 of the thermal source per analysed mode.
    mode_overlap : float
        Amplitude overlap in [0, 1] between the mode Alice's detector
        analyses and the mode Bob's detector analyses.
    """

    mean_photon_number: float
    mode_overlap: float

    def __post_init__(self):
        violations = []
        _check_nonneg(self.mean_photon_number, "mean_photon_number", violations)
        _check_fraction(self.mode_overlap, "mode_overlap", violations, allow_zero=True)
        _fail(violations)

    @property
    def orthogonal_weight(self):
        """Amplitude sqrt(1 - a^2) of the mismatched mode component."""
        return math.sqrt(max(1.0 - self.mode_overlap**2, 0.0))


@dataclass(frozen=True)
class ChannelParams:
    """Optical channel between Alice's attenuator output and Bob.

    ``length_km`` and ``attenuation_db_per_km`` are optional bookkeeping
    for fibre channels; ``transmittance`` is always the authoritative
    value used in calculations.
    """

    transmittance: float
    length_km: float | None = None
    attenuation_db_per_km: float | None = None

    def __post_init__(self):
        violations = []
        _check_fraction(self.transmittance, "transmittance", violations)
        if self.length_km is not None:
            _check_nonneg(self.length_km, "length_km", violations)
        if self.attenuation_db_per_km is not None:
            _check_nonneg(self.attenuation_db_per_km, "attenuation_db_per_km", violations)
        _fail(violations)

    @classmethod
    def from_fiber(cls, length_km, attenuation_db_per_km=0.2):
        """Build a fibre channel with T = 10^(-gamma*L/10)."""
        violations = []
        _check_nonneg(length_km, "length_km", violations)
        _check_nonneg(attenuation_db_per_km, "attenuation_db_per_km", violations)
        _fail(violations)
        t = 10.0 ** (-attenuation_db_per_km * length_km / 10.0)
        return cls(transmittance=t, length_km=length_km,
                   attenuation_db_per_km=attenuation_db_per_km)


@dataclass(frozen=True)
class SystemConfig:
    """Complete physical description of one link configuration.

    ``eavesdropper_tap`` switches the simulated topology: when True the
    lossy channel is modelled as a beam splitter whose tapped output is
    measured by an ideal conjugate detector (the beam-splitting attack),
    and the sampler records those outcomes as extra columns.
    """

    source: SourceParams
    alice_attenuation: float
    channel: ChannelParams
    alice_detector: ConjugateDetector
    bob_detector: ConjugateDetector
    eavesdropper_tap: bool = False

    def __post_init__(self):
        violations = []
        _check_fraction(self.alice_attenuation, "alice_attenuation", violations)
        _fail(violations)

    @property
    def path_transmittance(self):
        """Combined transmittance eta0 * T from source splitter to Bob."""
        return self.alice_attenuation * self.channel.transmittance

    def replace(self, **kwargs):
        """Return a copy with the given top-level fields replaced."""
        from dataclasses import replace as _replace
        return _replace(self, **kwargs)


class SecondMoments(NamedTuple):
    """Analytic second moments of one measured quadrature pair."""

    alice_var: float
    bob_var: float
    cross: float


class AttackVariances(NamedTuple):
    """Bob-quadrature variances under the beam-splitting attack."""

    conditional_on_alice: float
    total: float
    conditional_on_eve: float


def thermal_quadrature_variance(mean_photon_number):
    """Quadrature variance 2*n0 + 1 of a thermal mode, in shot-noise units."""
    violations = []
    _check_nonneg(mean_photon_number, "mean_photon_number", violations)
    _fail(violations)
    return 2.0 * mean_photon_number + 1.0


def modulation_variance(alice_attenuation, mean_photon_number):
    """Effective Gaussian modulation variance V_A = eta0 * n0.

    This is the variance of the outgoing mode's quadrature above shot
    noise after the attenuator, i.e. the quantity playing the role of
    the modulation variance of an actively modulated protocol.
    """
    violations = []
    _check_fraction(alice_attenuation, "alice_attenuation", violations)
    _check_nonneg(mean_photon_number, "mean_photon_number", violations)
    _fail(violations)
    return alice_attenuation * mean_photon_number


def optimal_estimator_gain(mean_photon_number, mode_overlap, alice_attenuation,
                           alice_channel):
    """Gain that maps Alice's detector reading to her minimum-variance
    estimate of the outgoing quadrature.

    The gain minimises <(x_out - g * x_alice)^2> over g for the linear
    source/detector model and evaluates to

        g = n0 * a * sqrt(2 * eta0 * eta) / (n0 * eta + 2 * nu + 2)

    with detector efficiency eta and noise variance nu.
    """
    violations = []
    _check_nonneg(mean_photon_number, "mean_photon_number", violations)
    _check_fraction(mode_overlap, "mode_overlap", violations, allow_zero=True)
    _check_fraction(alice_attenuation, "alice_attenuation", violations)
    _fail(violations)
    eta = alice_channel.efficiency
    nu = alice_channel.noise_variance
    n0 = mean_photon_number
    return n0 * mode_overlap * math.sqrt(2.0 * alice_attenuation * eta) / (
        n0 * eta + 2.0 * nu + 2.0)


def preparation_excess_noise(modulation_var, alice_attenuation, alice_channel,
                             mode_overlap):
    """Excess noise of the passive preparation, referred to the channel input.

    Combines the residual uncertainty of Alice's quadrature estimate
    (suppressed by a small attenuator transmittance) with the noise
    floor contributed by imperfect mode overlap:

        eps = (2*V_A*eta0*(nu+1) + V_A^2*eta*(1-a^2))
              / (V_A*eta + 2*eta0*(nu+1))

    For perfect overlap (a=1) this vanishes as eta0 -> 0; for a < 1 it
    approaches the floor V_A*(1-a^2).
    """
    violations = []
    _check_nonneg(modulation_var, "modulation_var", violations)
    _check_fraction(alice_attenuation, "alice_attenuation", violations)
    _check_fraction(mode_overlap, "mode_overlap", violations, allow_zero=True)
    _fail(violations)
    eta = alice_channel.efficiency
    nu = alice_channel.noise_variance
    v = modulation_var
    num = 2.0 * v * alice_attenuation * (nu + 1.0) + v * v * eta * (1.0 - mode_overlap**2)
    den = v * eta + 2.0 * alice_attenuation * (nu + 1.0)
    return num / den


def conditional_uncertainty(modulation_var, alice_attenuation, alice_channel,
                            mode_overlap):
    """Variance of the outgoing quadrature conditioned on Alice's estimate.

    Equals ``preparation_excess_noise(...) + 1``; the +1 is the vacuum
    limit no local measurement can beat.
    """
    return 1.0 + preparation_excess_noise(modulation_var, alice_attenuation,
                                          alice_channel, mode_overlap)


def quadrature_second_moments(mean_photon_number, alice_channel, bob_channel,
                              mode_overlap, path_transmittance=1.0):
    """Analytic second moments of the (Alice, Bob) quadrature readings.

    ``path_transmittance`` is the combined optical transmittance
    eta0 * T between the source splitter output and Bob's detector; it
    multiplies Bob's detector efficiency everywhere.

    Returns
    -------
    SecondMoments
        (alice_var, bob_var, cross) with
        alice_var = eta_a * n0 / 2 + nu_a + 1,
        bob_var   = eta_b' * n0 / 2 + nu_b + 1,
        cross     = sqrt(eta_a * eta_b') * n0 * a / 2,
        where eta_b' = path_transmittance * eta_b.
    """
    violations = []
    _check_nonneg(mean_photon_number, "mean_photon_number", violations)
    _check_fraction(mode_overlap, "mode_overlap", violations, allow_zero=True)
    _check_fraction(path_transmittance, "path_transmittance", violations)
    _fail(violations)
    n0 = mean_photon_number
    eta_a = alice_channel.efficiency
    nu_a = alice_channel.noise_variance
    eta_b = path_transmittance * bob_channel.efficiency
    nu_b = bob_channel.noise_variance
    alice_var = eta_a * n0 / 2.0 + nu_a + 1.0
    bob_var = eta_b * n0 / 2.0 + nu_b + 1.0
    cross = math.sqrt(eta_a * eta_b) * n0 * mode_overlap / 2.0
    return SecondMoments(alice_var, bob_var, cross)


def correlation_coefficient(mean_photon_number, mode_overlap, alice_channel,
                            bob_channel, path_transmittance=1.0):
    """Pearson correlation between Alice's and Bob's quadrature readings.

    Evaluates cross / sqrt(alice_var * bob_var) from
    ``quadrature_second_moments``. The value lies in [0, mode_overlap]
    and approaches mode_overlap as n0 grows.
    """
    m = quadrature_second_moments(mean_photon_number, alice_channel, bob_channel,
                                  mode_overlap, path_transmittance)
    return m.cross / math.sqrt(m.alice_var * m.bob_var)


def beamsplit_attack_variances(modulation_var, alice_attenuation, transmittance,
                               alice_channel, bob_channel):
    """Bob's quadrature variances in the beam-splitting attack model.

    The lossy channel of transmittance T is replaced by a beam splitter;
    the eavesdropper measures the tapped output with ideal conjugate
    detection. Perfect mode overlap is assumed in this analytic path.

    Returns
    -------
    AttackVariances
        conditional_on_alice : variance of Bob's reading given Alice's
            estimate (noisy, mode-matched detector),
        total : unconditioned variance of Bob's reading,
        conditional_on_eve : variance of Bob's reading given the
            eavesdropper's ideal measurement of the tapped mode.
    """
    violations = []
    _check_nonneg(modulation_var, "modulation_var", violations)
    _check_fraction(alice_attenuation, "alice_attenuation", violations)
    _check_fraction(transmittance, "transmittance", violations)
    _fail(violations)
    v = modulation_var
    e0 = alice_attenuation
    t = transmittance
    eta_a = alice_channel.efficiency
    nu_a = alice_channel.noise_variance
    eta_b = bob_channel.efficiency
    nu_b = bob_channel.noise_variance
    v_given_alice = (v * t * eta_b * (nu_a + 1.0)
                     / ((eta_a / e0) * v + 2.0 * nu_a + 2.0) + nu_b + 1.0)
    v_total = v * t * eta_b / 2.0 + nu_b + 1.0
    v_given_eve = v * t * eta_b / (v * (1.0 - t) + 2.0) + nu_b + 1.0
    return AttackVariances(v_given_alice, v_total, v_given_eve)


def mutual_information_from_variances(total_variance, conditional_variance):
    """Mutual information log2(total/conditional) of jointly Gaussian data,
    in bits per channel use."""
    violations = []
    if not (isinstance(total_variance, (int, float)) and math.isfinite(total_variance)
            and total_variance > 0):
        violations.append(f"total_variance must be finite and > 0, got {total_variance!r}")
    if not (isinstance(conditional_variance, (int, float))
            and math.isfinite(conditional_variance) and conditional_variance > 0):
        violations.append(
            f"conditional_variance must be finite and > 0, got {conditional_variance!r}")
    _fail(violations)
    if conditional_variance > total_variance:
        raise ModelInconsistencyError(
            f"conditional variance {conditional_variance!r} exceeds total "
            f"variance {total_variance!r}; mutual information would be negative")
    return math.log2(total_variance / conditional_variance)


def mutual_information_from_correlation(corr):
    """Mutual information log2(1/(1-corr^2)) of a bivariate Gaussian pair,
    in bits per channel use."""
    violations = []
    if not (isinstance(corr, (int, float)) and math.isfinite(corr)
            and abs(corr) <= _CORR_LIMIT):
        violations.append(f"corr must satisfy |corr| < 1, got {corr!r}")
    _fail(violations)
    # -log1p(-r^2)/ln 2 keeps precision for small correlations.
    return -math.log1p(-corr * corr) / math.log(2.0)


def attenuation_security_threshold(transmittance, alice_channel):
    """Largest attenuator transmittance eta0 for which Alice's conditional
    knowledge of Bob's reading beats the beam-splitting eavesdropper's.

    Returns eta / ((nu + 1) * (1 - T)) where (eta, nu) describe Alice's
    detector channel. For a lossless channel (T = 1) no beam-splitting
    attack exists and the threshold is infinite (``math.inf``).
    """
    violations = []
    _check_fraction(transmittance, "transmittance", violations)
    _fail(violations)
    if transmittance == 1.0:
        return math.inf
    eta = alice_channel.efficiency
    nu = alice_channel.noise_variance
    return eta / ((nu + 1.0) * (1.0 - transmittance))
