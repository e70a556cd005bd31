"""Parameter estimation mirroring the experimental data pipeline.

The measured record is split into fixed-size blocks; each block yields
one Pearson correlation between Alice's and Bob's readings, and the
block ensemble gives the reported mean and its one-standard-deviation
error bar. The mode overlap is then recovered from correlation
measurements at several source photon numbers by weighted least
squares, exploiting that the predicted correlation is linear in the
overlap. Mutual-information error bars map the correlation interval
endpoints through the (monotone) information formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateDataError, ParameterError, UnidentifiableFitError
from .model import correlation_coefficient, mutual_information_from_correlation

__all__ = [
    "CorrEstimate",
    "FitResult",
    "MutualInfoEstimate",
    "blocked_correlation",
    "fit_mode_overlap",
    "empirical_mutual_info",
    "read_points_csv",
    "write_fit_report",
]

_FIT_SCHEMA = "passiveqkd/fit-report v1"
_FLOAT_FMT = "%.17g"

# Correlations this close to +-1 make log2(1/(1-r^2)) blow up; interval
# endpoints are clipped just inside.
_CORR_CAP = 1.0 - 1e-15


@dataclass(frozen=True)
class CorrEstimate:
    """Blocked correlation estimate.

    ``mean_corr`` and ``std_dev`` are the mean and sample standard
    deviation of the per-block Pearson correlations. ``n_dropped``
    counts trailing samples that did not fill a complete block and were
    excluded.
    """

    mean_corr: float
    std_dev: float
    n_blocks: int
    block_size: int
    n_dropped: int = 0

    def __post_init__(self):
        violations = []
        if not (isinstance(self.mean_corr, (int, float)) and math.isfinite(self.mean_corr)
                and abs(self.mean_corr) <= 1.0):
            violations.append(f"mean_corr must lie in [-1, 1], got {self.mean_corr!r}")
        if not (isinstance(self.std_dev, (int, float)) and math.isfinite(self.std_dev)
                and self.std_dev >= 0):
            violations.append(f"std_dev must be finite and >= 0, got {self.std_dev!r}")
        if not (isinstance(self.n_blocks, int) and self.n_blocks >= 2):
            violations.append(f"n_blocks must be an integer >= 2, got {self.n_blocks!r}")
        if not (isinstance(self.block_size, int) and self.block_size >= 2):
            violations.append(f"block_size must be an integer >= 2, got {self.block_size!r}")
        if not (isinstance(self.n_dropped, int) and self.n_dropped >= 0):
            violations.append(f"n_dropped must be an integer >= 0, got {self.n_dropped!r}")
        if violations:
            raise ParameterError(violations)


@dataclass(frozen=True)
class FitResult:
    """Weighted-least-squares mode-overlap fit.

    ``mode_overlap`` is clamped to [0, 1]; ``clamped`` records whether
    clamping fired. ``std_err`` is the propagated standard error
    1/sqrt(sum w g^2) of the unclamped estimate, and ``residual_norm``
    the weighted sum of squared residuals at the reported value.
    """

    mode_overlap: float
    std_err: float
    residual_norm: float
    n_points: int
    clamped: bool


class MutualInfoEstimate(NamedTuple):
    """Mutual information with a one-standard-deviation interval, bits."""

    bits: float
    lower: float
    upper: float


def blocked_correlation(x_alice, x_bob, n_blocks):
    """Blocked Pearson correlation between two sample columns.

    The first ``n_blocks * (len // n_blocks)`` samples are divided into
    ``n_blocks`` equal consecutive blocks; the remainder is dropped and
    reported via ``CorrEstimate.n_dropped``. Each block must have
    nonzero variance in both columns, otherwise the correlation is
    undefined and ``DegenerateDataError`` is raised.
    """
    x = np.asarray(x_alice, dtype=float)
    y = np.asarray(x_bob, dtype=float)
    violations = []
    if x.ndim != 1 or y.ndim != 1:
        violations.append("x_alice and x_bob must be one-dimensional columns")
    elif x.shape[0] != y.shape[0]:
        violations.append(
            f"column lengths differ: {x.shape[0]} vs {y.shape[0]}")
    if not (isinstance(n_blocks, int) and n_blocks >= 2):
        violations.append(f"n_blocks must be an integer >= 2, got {n_blocks!r}")
    if violations:
        raise ParameterError(violations)
    block_size = x.shape[0] // n_blocks
    if block_size < 2:
        raise ParameterError(
            [f"{x.shape[0]} samples cannot fill {n_blocks} blocks of >= 2 samples"])
    n_used = n_blocks * block_size
    n_dropped = x.shape[0] - n_used

    xb = x[:n_used].reshape(n_blocks, block_size)
    yb = y[:n_used].reshape(n_blocks, block_size)
    xc = xb - xb.mean(axis=1, keepdims=True)
    yc = yb - yb.mean(axis=1, keepdims=True)
    sx = np.einsum("ij,ij->i", xc, xc)
    sy = np.einsum("ij,ij->i", yc, yc)
    bad = (sx == 0) | (sy == 0)
    if np.any(bad):
        raise DegenerateDataError(
            f"block {int(np.flatnonzero(bad)[0])} has zero variance; "
            "Pearson correlation undefined")
    rs = np.einsum("ij,ij->i", xc, yc) / np.sqrt(sx * sy)
    return CorrEstimate(
        mean_corr=float(np.mean(rs)),
        std_dev=float(np.std(rs, ddof=1)),
        n_blocks=n_blocks,
        block_size=block_size,
        n_dropped=n_dropped,
    )


def _as_mean_std(value):
    """Accept a CorrEstimate or a plain (mean, std) pair."""
    if isinstance(value, CorrEstimate):
        return value.mean_corr, value.std_dev
    mean, std = value
    if not (math.isfinite(mean) and abs(mean) <= 1.0):
        raise ParameterError([f"correlation mean must lie in [-1, 1], got {mean!r}"])
    if not (math.isfinite(std) and std >= 0.0):
        raise ParameterError([f"correlation std must be finite and >= 0, got {std!r}"])
    return float(mean), float(std)


def fit_mode_overlap(points, alice_channel, bob_channel, path_transmittance=1.0,
                     *, std_floor=1e-12):
    """Recover the mode overlap from correlations at several photon numbers.

    The model correlation is linear in the overlap,
    corr(n0) = a * g(n0), with g the unit-overlap prediction, so the
    weighted-least-squares solution is closed form:

        a_hat = sum(w g r) / sum(w g^2),   w = 1 / std^2.

    Points reporting a standard deviation below ``std_floor`` (e.g.
    exact synthetic data) are weighted as if their deviation were the
    floor. The estimate is clamped to the physical range [0, 1] with
    ``clamped`` flagging when that fired.

    Parameters
    ----------
    points : sequence of (n0, estimate)
        ``estimate`` is a ``CorrEstimate`` or a plain (mean, std) pair.
    alice_channel, bob_channel : DetectorChannel
        X- or P-arm parameters matching the measured columns.
    path_transmittance : float
        Combined transmittance between source splitter and Bob.
    """
    pts = list(points)
    if not pts:
        raise ParameterError(["points must contain at least one (n0, estimate)"])
    if not (isinstance(std_floor, (int, float)) and std_floor > 0):
        raise ParameterError([f"std_floor must be > 0, got {std_floor!r}"])
    num = 0.0
    den = 0.0
    gs = []
    for n0, est in pts:
        mean, std = _as_mean_std(est)
        g = correlation_coefficient(n0, 1.0, alice_channel, bob_channel,
                                    path_transmittance)
        w = 1.0 / max(std, std_floor) ** 2
        num += w * g * mean
        den += w * g * g
        gs.append((g, w, mean))
    if den == 0.0:
        raise UnidentifiableFitError(
            "all model correlations are zero; the overlap is unidentifiable")
    raw = num / den
    clamped = raw < 0.0 or raw > 1.0
    a_hat = min(max(raw, 0.0), 1.0)
    residual = sum(w * (r - a_hat * g) ** 2 for g, w, r in gs)
    return FitResult(
        mode_overlap=a_hat,
        std_err=1.0 / math.sqrt(den),
        residual_norm=residual,
        n_points=len(pts),
        clamped=clamped,
    )


def empirical_mutual_info(estimate):
    """Mutual information of the measured pair, with an error interval.

    The central value is log2(1/(1 - r^2)) at the measured mean
    correlation. Interval endpoints map r -+ std through the same
    monotone formula, clipped into [0, 1); the magnitude of r is used
    since the information depends only on r^2.

    ``estimate`` is a ``CorrEstimate`` or a plain (mean, std) pair.
    """
    mean, std = _as_mean_std(estimate)
    m = abs(mean)
    if m >= 1.0:
        raise ParameterError([f"|mean_corr| must be < 1, got {mean!r}"])
    lo = min(max(m - std, 0.0), _CORR_CAP)
    hi = min(m + std, _CORR_CAP)
    return MutualInfoEstimate(
        bits=mutual_information_from_correlation(m),
        lower=mutual_information_from_correlation(lo),
        upper=mutual_information_from_correlation(hi),
    )


def read_points_csv(file_or_path):
    """Read (n0, (corr_mean, corr_std)) points from a sweep or report CSV.

    Accepts any CSV whose header contains ``n0``, a correlation column
    named ``corr_mean`` or ``corr_mc``, and ``corr_std``; other columns
    are ignored. Comment lines starting with ``#`` are skipped. The
    result feeds directly into ``fit_mode_overlap``.
    """
    def _read(f):
        header = None
        rows = []
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = [c.strip() for c in line.split(",")]
                continue
            rows.append([field.strip() for field in line.split(",")])
        if header is None or not rows:
            raise ParameterError(["points CSV contains no data rows"])
        cols = {name: i for i, name in enumerate(header)}
        corr_col = "corr_mean" if "corr_mean" in cols else "corr_mc"
        missing = [c for c in ("n0", corr_col, "corr_std") if c not in cols]
        if missing:
            raise ParameterError(
                [f"points CSV is missing columns: {', '.join(missing)}"])
        points = []
        for row in rows:
            n0 = float(row[cols["n0"]])
            pair = (float(row[cols[corr_col]]), float(row[cols["corr_std"]]))
            points.append((n0, pair))
        return points

    if hasattr(file_or_path, "read"):
        return _read(file_or_path)
    with open(file_or_path, "r", encoding="utf-8") as f:
        return _read(f)


def write_fit_report(file_or_path, points, fit, alice_channel, bob_channel,
                     path_transmittance=1.0):
    """Write the fit-report CSV: one row per point plus a summary line.

    Rows carry (n0, corr_mean, corr_std, model_corr) with model_corr the
    fitted-overlap prediction at that photon number; the trailing
    comment line records the fit summary.
    """
    def _write(f):
        f.write(f"# schema: {_FIT_SCHEMA}\n")
        f.write("n0,corr_mean,corr_std,model_corr\n")
        for n0, est in points:
            mean, std = _as_mean_std(est)
            g = correlation_coefficient(n0, 1.0, alice_channel, bob_channel,
                                        path_transmittance)
            row = (n0, mean, std, fit.mode_overlap * g)
            f.write(",".join(_FLOAT_FMT % v for v in row) + "\n")
        f.write(f"# a_hat={_FLOAT_FMT % fit.mode_overlap}"
                f" std_err={_FLOAT_FMT % fit.std_err}"
                f" residual_norm={_FLOAT_FMT % fit.residual_norm}"
                f" n_points={fit.n_points}"
                f" clamped={str(fit.clamped).lower()}\n")

    if hasattr(file_or_path, "write"):
        _write(file_or_path)
    else:
        with open(file_or_path, "w", encoding="utf-8", newline="\n") as f:
            _write(f)
