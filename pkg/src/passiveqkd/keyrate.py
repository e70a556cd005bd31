"""Asymptotic secure key rate against collective attacks.

Reverse reconciliation with conjugate (heterodyne-style) detection on
Bob's side. The channel of transmittance T adds the usual loss noise
1/T - 1 plus the preparation excess noise of the passive source; Bob's
detector adds (1 + (1 - eta) + 2*nu)/eta referred to its input. The
rate in bits per channel use is

    R = f * I_AB - chi_BE,

with I_AB the Shannon information of the Gaussian channel between the
modulation data and Bob's outcome, and chi_BE the Holevo bound on the
eavesdropper's information about Bob's outcome, computed from the
symplectic spectra of the shared state before and after Bob's
measurement. Negative rates are returned as-is (no secure key); the
boolean ``has_key`` carries the security verdict.

Numerical care: the eigenvalue discriminants A^2 - 4B and C^2 - 4D
suffer catastrophic cancellation near degeneracy (weak modulation,
strong attenuation), so both are evaluated through exact algebraic
factorizations,

    A - 2*sqrt(B) = ((1-T)*V_A - T*eps)^2            (= W^2)
    (C - 2*sqrt(D)) * (T*(V+chi_tot))^2 = (chi_det*W + M)^2,
    M = (1-T)*V_A + V*T*eps,

which are nonnegative perfect squares, and the small root of each pair
uses the product form lambda_small^2 = product / lambda_big^2. This
keeps absolute eigenvalue errors at machine level across the whole
valid domain, including the near-vacuum corner where the naive forms
lose ten digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import optimize as _sciopt

from .errors import ModelInconsistencyError, NumericalDomainError, ParameterError
from .estimation import empirical_mutual_info
from .model import (
    SystemConfig,
    correlation_coefficient,
    modulation_variance,
    mutual_information_from_correlation,
    preparation_excess_noise,
)

__all__ = [
    "NoiseBudget",
    "KeyRateResult",
    "MeasuredKeyRate",
    "HolevoResult",
    "transmittance_from_length",
    "detector_added_noise",
    "channel_added_noise",
    "total_added_noise",
    "mutual_information_bits",
    "bosonic_entropy",
    "holevo_bound",
    "secure_key_rate",
    "noise_budget",
    "key_rate_point",
    "optimize_attenuation",
    "key_rate_from_measurement",
    "distance_cutoff",
]

_LN2 = math.log(2.0)

# Attenuator search window for optimised-preparation rates.
ATTENUATION_BOUNDS = (1e-8, 1.0)
_COARSE_POINTS = 241


@dataclass(frozen=True)
class NoiseBudget:
    """All noise contributions of one link configuration, shot-noise units.

    ``modulation_var`` is V_A = eta0 * n0; ``v`` (property) the total
    variance V_A + 1 of the effective modulated mode. ``channel_noise``
    is referred to the channel input and includes the preparation
    excess noise; ``detector_noise`` is referred to Bob's detector
    input; ``total_noise`` refers both to the channel input.
    """

    modulation_var: float
    prep_excess_noise: float
    channel_noise: float
    detector_noise: float
    total_noise: float

    @property
    def v(self):
        return self.modulation_var + 1.0


@dataclass(frozen=True)
class KeyRateResult:
    """One evaluated key-rate point.

    ``eigenvalues`` holds the five symplectic eigenvalues entering the
    Holevo bound (the fifth is identically 1); ``intermediates`` the
    (A, B, C, D) quadratic-form coefficients, useful for debugging and
    oracle comparisons.
    """

    rate: float
    has_key: bool
    mutual_info: float
    holevo_info: float
    efficiency: float
    transmittance: float
    alice_attenuation: float
    budget: NoiseBudget
    eigenvalues: tuple
    intermediates: tuple
    length_km: float | None = None


@dataclass(frozen=True)
class MeasuredKeyRate:
    """Key rate evaluated from a measured correlation, with interval.

    The central value replaces the model mutual information with the
    measured one; ``rate_lower``/``rate_upper`` map the one-standard-
    deviation correlation interval through the same pipeline. The
    ``predicted_*`` fields give the analytic values at the same
    combined transmittance for comparison.
    """

    result: KeyRateResult
    rate_lower: float
    rate_upper: float
    predicted_correlation: float
    predicted_rate: float


class HolevoResult(NamedTuple):
    chi: float
    eigenvalues: tuple
    intermediates: tuple


def _require(cond, message, violations):
    if not cond:
        violations.append(message)


def _finite(x):
    return isinstance(x, (int, float)) and math.isfinite(x)


def transmittance_from_length(length_km, attenuation_db_per_km=0.2):
    """Fibre transmittance T = 10^(-gamma * L / 10)."""
    violations = []
    _require(_finite(length_km) and length_km >= 0,
             f"length_km must be finite and >= 0, got {length_km!r}", violations)
    _require(_finite(attenuation_db_per_km) and attenuation_db_per_km >= 0,
             f"attenuation_db_per_km must be finite and >= 0, got {attenuation_db_per_km!r}",
             violations)
    if violations:
        raise ParameterError(violations)
    return 10.0 ** (-attenuation_db_per_km * length_km / 10.0)


def detector_added_noise(channel):
    """Conjugate-detector added noise (1 + (1 - eta) + 2*nu)/eta, referred
    to the detector input. The leading 1 is the extra vacuum unit of
    measuring both quadratures at once."""
    eta = channel.efficiency
    nu = channel.noise_variance
    return (1.0 + (1.0 - eta) + 2.0 * nu) / eta


def channel_added_noise(transmittance, excess_noise):
    """Channel added noise 1/T - 1 + eps, referred to the channel input."""
    violations = []
    _require(_finite(transmittance) and 0.0 < transmittance <= 1.0,
             f"transmittance must lie in (0, 1], got {transmittance!r}", violations)
    _require(_finite(excess_noise) and excess_noise >= 0.0,
             f"excess_noise must be finite and >= 0, got {excess_noise!r}", violations)
    if violations:
        raise ParameterError(violations)
    return 1.0 / transmittance - 1.0 + excess_noise


def total_added_noise(channel_noise, detector_noise, transmittance):
    """Total added noise referred to the channel input:
    channel_noise + detector_noise / T."""
    violations = []
    _require(_finite(channel_noise) and channel_noise >= 0.0,
             f"channel_noise must be finite and >= 0, got {channel_noise!r}", violations)
    _require(_finite(detector_noise) and detector_noise >= 0.0,
             f"detector_noise must be finite and >= 0, got {detector_noise!r}", violations)
    _require(_finite(transmittance) and 0.0 < transmittance <= 1.0,
             f"transmittance must lie in (0, 1], got {transmittance!r}", violations)
    if violations:
        raise ParameterError(violations)
    return channel_noise + detector_noise / transmittance


def mutual_information_bits(v, total_noise):
    """Shannon information log2((V + chi_tot) / (1 + chi_tot)) between the
    modulation data and Bob's outcome, bits per channel use."""
    violations = []
    _require(_finite(v) and v >= 1.0, f"v must be >= 1, got {v!r}", violations)
    _require(_finite(total_noise) and total_noise >= 0.0,
             f"total_noise must be finite and >= 0, got {total_noise!r}", violations)
    if violations:
        raise ParameterError(violations)
    # log2((v + chi)/(1 + chi)) via log1p for precision when v - 1 is tiny.
    return math.log1p((v - 1.0) / (1.0 + total_noise)) / _LN2


def bosonic_entropy(mean_photons):
    """Von Neumann entropy G(x) = (x+1) log2(x+1) - x log2(x) of a thermal
    state with mean photon number x; G(0) = 0.

    Arguments within roundoff below zero are treated as zero so that
    eigenvalues equal to 1 up to floating error are handled cleanly.
    """
    x = mean_photons
    if not _finite(x) or x < -1e-6:
        raise ParameterError([f"mean_photons must be >= 0, got {x!r}"])
    if x <= 0.0:
        return 0.0
    return (x + 1.0) * math.log1p(x) / _LN2 - x * math.log2(x)


def holevo_bound(v, transmittance, channel_noise, detector_noise, total_noise):
    """Holevo bound chi_BE on Eve's information about Bob's outcomes.

    Computes the symplectic spectra of the equivalent two-mode state
    shared before Bob's measurement (eigenvalues 1, 2) and of the state
    conditioned on Bob's conjugate measurement (eigenvalues 3, 4; the
    fifth eigenvalue is identically 1), then

        chi_BE = G((l1-1)/2) + G((l2-1)/2)
                 - G((l3-1)/2) - G((l4-1)/2) - G((l5-1)/2).

    ``channel_noise`` must carry at least the pure-loss part 1/T - 1;
    the preparation excess noise is recovered from the difference.

    Returns
    -------
    HolevoResult
        (chi, eigenvalues, intermediates) with intermediates = (A, B, C, D).
    """
    violations = []
    _require(_finite(v) and v >= 1.0, f"v must be >= 1, got {v!r}", violations)
    _require(_finite(transmittance) and 0.0 < transmittance <= 1.0,
             f"transmittance must lie in (0, 1], got {transmittance!r}", violations)
    _require(_finite(channel_noise) and channel_noise >= 0.0,
             f"channel_noise must be finite and >= 0, got {channel_noise!r}", violations)
    _require(_finite(detector_noise) and detector_noise >= 0.0,
             f"detector_noise must be finite and >= 0, got {detector_noise!r}", violations)
    _require(_finite(total_noise) and total_noise >= 0.0,
             f"total_noise must be finite and >= 0, got {total_noise!r}", violations)
    if not violations:
        loss_floor = 1.0 / transmittance - 1.0
        _require(channel_noise >= loss_floor - 1e-9 * max(1.0, loss_floor),
                 f"channel_noise {channel_noise!r} is below the pure-loss "
                 f"floor 1/T - 1 = {loss_floor!r}", violations)
        consistent = channel_noise + detector_noise / transmittance
        _require(abs(total_noise - consistent) <= 1e-9 * max(1.0, abs(consistent)),
                 f"total_noise {total_noise!r} does not equal channel_noise + "
                 f"detector_noise/transmittance = {consistent!r}", violations)
    if violations:
        raise ParameterError(violations)

    t = transmittance
    v_mod = v - 1.0
    eps = max(channel_noise - (1.0 / t - 1.0), 0.0)

    a_coef = v * v * (1.0 - 2.0 * t) + 2.0 * t + (t * (v + channel_noise)) ** 2
    sqrt_b = t * (v * channel_noise + 1.0)
    b_coef = sqrt_b * sqrt_b
    # A - 2*sqrt(B) = W^2 exactly, so the discriminant (A - 2rB)(A + 2rB)
    # never cancels and never goes negative.
    w = (1.0 - t) * v_mod - t * eps
    disc_root = abs(w) * math.sqrt(a_coef + 2.0 * sqrt_b)
    l1_sq = (a_coef + disc_root) / 2.0
    l2_sq = b_coef / l1_sq

    den_root = t * (v + total_noise)
    sqrt_d = (v + sqrt_b * detector_noise) / den_root
    d_coef = sqrt_d * sqrt_d
    # Likewise (C - 2*sqrt(D)) * den = (chi_det*W + M)^2 exactly.
    m = (1.0 - t) * v_mod + v * t * eps
    cd_root = (detector_noise * w + m) / den_root
    c_coef = cd_root * cd_root + 2.0 * sqrt_d
    disc_root_cd = abs(cd_root) * math.sqrt(c_coef + 2.0 * sqrt_d)
    l3_sq = (c_coef + disc_root_cd) / 2.0
    l4_sq = d_coef / l3_sq

    if min(l1_sq, l2_sq, l3_sq, l4_sq) <= 0.0:
        raise NumericalDomainError(
            f"nonpositive squared eigenvalue from v={v!r}, T={t!r}, "
            f"chi_line={channel_noise!r}, chi_det={detector_noise!r}")
    lambdas = (math.sqrt(l1_sq), math.sqrt(l2_sq),
               math.sqrt(l3_sq), math.sqrt(l4_sq), 1.0)
    chi = (bosonic_entropy((lambdas[0] - 1.0) / 2.0)
           + bosonic_entropy((lambdas[1] - 1.0) / 2.0)
           - bosonic_entropy((lambdas[2] - 1.0) / 2.0)
           - bosonic_entropy((lambdas[3] - 1.0) / 2.0)
           - bosonic_entropy((lambdas[4] - 1.0) / 2.0))
    return HolevoResult(chi, lambdas, (a_coef, b_coef, c_coef, d_coef))


def secure_key_rate(efficiency, mutual_info, holevo_info):
    """Asymptotic rate R = f * I_AB - chi_BE, bits per channel use.

    Returns (rate, has_key); a nonpositive rate means no secure key and
    is reported as-is rather than truncated, so that sweeps can locate
    the crossing.
    """
    violations = []
    _require(_finite(efficiency) and 0.0 < efficiency <= 1.0,
             f"efficiency must lie in (0, 1], got {efficiency!r}", violations)
    _require(_finite(mutual_info) and mutual_info >= 0.0,
             f"mutual_info must be finite and >= 0, got {mutual_info!r}", violations)
    _require(_finite(holevo_info) and holevo_info >= 0.0,
             f"holevo_info must be finite and >= 0, got {holevo_info!r}", violations)
    if violations:
        raise ParameterError(violations)
    rate = efficiency * mutual_info - holevo_info
    return rate, rate > 0.0


def noise_budget(config, transmittance=None):
    """Evaluate every noise contribution for ``config``.

    ``transmittance`` overrides the config's channel transmittance,
    which is convenient for distance sweeps.
    """
    t = config.channel.transmittance if transmittance is None else transmittance
    v_mod = modulation_variance(config.alice_attenuation,
                                config.source.mean_photon_number)
    eps = preparation_excess_noise(v_mod, config.alice_attenuation,
                                   config.alice_detector.x,
                                   config.source.mode_overlap)
    chi_det = detector_added_noise(config.bob_detector.x)
    chi_line = channel_added_noise(t, eps)
    chi_tot = total_added_noise(chi_line, chi_det, t)
    return NoiseBudget(
        modulation_var=v_mod,
        prep_excess_noise=eps,
        channel_noise=chi_line,
        detector_noise=chi_det,
        total_noise=chi_tot,
    )


def key_rate_point(config, *, efficiency=0.95, transmittance=None,
                   length_km=None):
    """Evaluate the model key rate for one configuration.

    The channel transmittance is taken from ``transmittance`` when
    given, else derived from ``length_km`` at 0.2 dB/km, else read off
    the config's channel. Passing both pins the physics to
    ``transmittance`` and keeps ``length_km`` as the label, which lets
    callers with a non-default fibre attenuation convert themselves.

    The security analysis uses the X-arm detector calibrations; the P
    arm is structurally symmetric.
    """
    if transmittance is not None:
        t = transmittance
    elif length_km is not None:
        t = transmittance_from_length(length_km)
    else:
        t = config.channel.transmittance
    budget = noise_budget(config, t)
    mutual = mutual_information_bits(budget.v, budget.total_noise)
    hol = holevo_bound(budget.v, t, budget.channel_noise, budget.detector_noise,
                       budget.total_noise)
    rate, has_key = secure_key_rate(efficiency, mutual, hol.chi)
    return KeyRateResult(
        rate=rate,
        has_key=has_key,
        mutual_info=mutual,
        holevo_info=hol.chi,
        efficiency=efficiency,
        transmittance=t,
        alice_attenuation=config.alice_attenuation,
        budget=budget,
        eigenvalues=hol.eigenvalues,
        intermediates=hol.intermediates,
        length_km=length_km,
    )


def optimize_attenuation(config, *, efficiency=0.95, transmittance=None,
                         length_km=None, bounds=ATTENUATION_BOUNDS):
    """Key rate with the attenuator transmittance optimised.

    Deterministic two-stage search on a log scale: a fixed coarse grid
    over ``bounds`` locates the basin, then a bounded scalar
    minimisation refines within the bracketing interval. The best of
    the refined point, the coarse optimum, and the interval endpoints
    is returned, so a boundary optimum is handled exactly.
    """
    lo, hi = bounds
    violations = []
    _require(_finite(lo) and _finite(hi) and 0.0 < lo < hi <= 1.0,
             f"bounds must satisfy 0 < lo < hi <= 1, got {bounds!r}", violations)
    if violations:
        raise ParameterError(violations)

    def rate_at(e0):
        return key_rate_point(config.replace(alice_attenuation=e0),
                              efficiency=efficiency, transmittance=transmittance,
                              length_km=length_km)

    grid = np.geomspace(lo, hi, _COARSE_POINTS)
    coarse = [rate_at(float(e0)) for e0 in grid]
    best_i = max(range(len(grid)), key=lambda i: coarse[i].rate)
    left = math.log(float(grid[max(best_i - 1, 0)]))
    right = math.log(float(grid[min(best_i + 1, len(grid) - 1)]))

    res = _sciopt.minimize_scalar(
        lambda u: -rate_at(math.exp(u)).rate,
        bounds=(left, right), method="bounded",
        options={"xatol": 1e-12, "maxiter": 200})
    candidates = [coarse[best_i], rate_at(math.exp(float(res.x))),
                  rate_at(math.exp(left)), rate_at(math.exp(right))]
    return max(candidates, key=lambda r: r.rate)


def key_rate_from_measurement(estimate, config, path_transmittance, *,
                              efficiency=0.95):
    """Key rate from a measured correlation estimate.

    The declared split (``config.alice_attenuation``,
    ``config.channel.transmittance``) must multiply to the combined
    transmittance ``path_transmittance`` at which the correlation was
    measured; the split determines the noise budget and Holevo bound,
    while the measured correlation replaces the model mutual
    information via I = log2(1/(1 - r^2)).

    ``estimate`` is a ``CorrEstimate`` or a plain (mean, std) pair.

    Returns
    -------
    MeasuredKeyRate
        Central rate plus the one-standard-deviation interval obtained
        by mapping the correlation interval endpoints, and the analytic
        (model-correlation) prediction at the same path transmittance.
    """
    violations = []
    _require(_finite(path_transmittance) and 0.0 < path_transmittance <= 1.0,
             f"path_transmittance must lie in (0, 1], got {path_transmittance!r}",
             violations)
    if violations:
        raise ParameterError(violations)
    declared = config.path_transmittance
    if abs(declared - path_transmittance) > 1e-9 * max(declared, path_transmittance):
        raise ParameterError(
            [f"declared split eta0*T = {declared!r} does not match the measured "
             f"path transmittance {path_transmittance!r}"])

    t = config.channel.transmittance
    budget = noise_budget(config)
    hol = holevo_bound(budget.v, t, budget.channel_noise, budget.detector_noise,
                       budget.total_noise)
    mi = empirical_mutual_info(estimate)
    rate, has_key = secure_key_rate(efficiency, mi.bits, hol.chi)
    rate_lower = efficiency * mi.lower - hol.chi
    rate_upper = efficiency * mi.upper - hol.chi

    pred_corr = correlation_coefficient(
        config.source.mean_photon_number, config.source.mode_overlap,
        config.alice_detector.x, config.bob_detector.x, path_transmittance)
    pred_rate = (efficiency * mutual_information_from_correlation(pred_corr)
                 - hol.chi)

    central = KeyRateResult(
        rate=rate,
        has_key=has_key,
        mutual_info=mi.bits,
        holevo_info=hol.chi,
        efficiency=efficiency,
        transmittance=t,
        alice_attenuation=config.alice_attenuation,
        budget=budget,
        eigenvalues=hol.eigenvalues,
        intermediates=hol.intermediates,
    )
    return MeasuredKeyRate(
        result=central,
        rate_lower=rate_lower,
        rate_upper=rate_upper,
        predicted_correlation=pred_corr,
        predicted_rate=pred_rate,
    )


def distance_cutoff(config, *, efficiency=0.95, attenuation_db_per_km=0.2,
                    lo_km=0.0, hi_km=200.0, optimize=True, xtol_km=1e-3):
    """Locate the distance where the key rate crosses zero, by bisection.

    With ``optimize`` the attenuator is re-optimised at every probed
    distance (the preparation that maximises the rate there); otherwise
    the config's attenuation is used as-is. Requires a sign change over
    [lo_km, hi_km].
    """
    violations = []
    _require(_finite(lo_km) and _finite(hi_km) and 0.0 <= lo_km < hi_km,
             f"need 0 <= lo_km < hi_km, got ({lo_km!r}, {hi_km!r})", violations)
    _require(_finite(xtol_km) and xtol_km > 0.0,
             f"xtol_km must be > 0, got {xtol_km!r}", violations)
    if violations:
        raise ParameterError(violations)

    def rate(length):
        t = transmittance_from_length(length, attenuation_db_per_km)
        if optimize:
            return optimize_attenuation(config, efficiency=efficiency,
                                        transmittance=t, length_km=length).rate
        return key_rate_point(config, efficiency=efficiency, transmittance=t,
                              length_km=length).rate

    r_lo = rate(lo_km)
    r_hi = rate(hi_km)
    if not (r_lo > 0.0 > r_hi):
        raise ModelInconsistencyError(
            f"no zero crossing bracketed on [{lo_km}, {hi_km}] km: "
            f"R({lo_km}) = {r_lo!r}, R({hi_km}) = {r_hi!r}")
    lo, hi = lo_km, hi_km
    while hi - lo > xtol_km:
        mid = 0.5 * (lo + hi)
        if rate(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
