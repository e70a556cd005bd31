"""Monte Carlo sampler for the passively encoded CV-QKD link.

Every trial draws one temporal mode of the broadband source per
quadrature and propagates it through the linear optical train:

* balanced source splitter (adds the retained/transmitted split),
* Alice's conjugate detector (its own splitter, efficiency modelled as
  a beam splitter against vacuum, plus additive electronic noise),
* Alice's strong attenuator,
* the channel (a beam splitter of transmittance T whose tapped port is
  the eavesdropper's mode in the attack topology),
* Bob's conjugate detector.

Mode mismatch is sampled explicitly: Alice's detector sees the matched
source mode with amplitude ``a`` and an independent thermal mode with
amplitude ``sqrt(1-a^2)``, so the mismatch mechanism is visible in the
samples rather than folded into an effective variance.

Reproducibility contract: all randomness derives from counter-based
Philox streams keyed by ``(seed, chunk_index, term_index)``, where a
chunk is a fixed-size range of trial indices and a term is one physical
noise source. Results are therefore bit-identical for a given
``(SystemConfig, RunSpec)`` regardless of how many workers generate the
chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import BatchSizeError, ParameterError
from .model import SystemConfig

__all__ = [
    "CHUNK_SIZE",
    "DEFAULT_MEMORY_LIMIT",
    "RunSpec",
    "SampleBatch",
    "thermal_quadratures",
    "simulate_batch",
    "empirical_conditional_variance",
    "derive_point_seed",
    "write_sample_csv",
    "read_sample_csv",
]

# Trials per RNG chunk. Fixed so that the substream layout, and hence
# every sample, is independent of batch size and worker count.
CHUNK_SIZE = 1 << 16

# Refuse batches whose column storage would exceed this many bytes.
DEFAULT_MEMORY_LIMIT = 8 << 30

_SAMPLES_SCHEMA = "passiveqkd/samples v1"

# One RNG substream per physical noise source and quadrature. The X
# list comes first; the P list mirrors it with independent draws.
_TERMS_PER_QUAD = 13
(_T_THERMAL, _T_THERMAL_ORTH, _T_VAC_SPLIT, _T_VAC_SPLIT_ORTH, _T_VAC_ALICE_SPLIT,
 _T_VAC_ATTEN, _T_VAC_CHANNEL, _T_VAC_BOB_SPLIT, _T_VAC_ALICE_DET, _T_VAC_BOB_DET,
 _T_ALICE_ELEC, _T_BOB_ELEC, _T_VAC_EVE_SPLIT) = range(_TERMS_PER_QUAD)

_FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class RunSpec:
    """Size, seed, and blocking of one Monte Carlo batch."""

    n_samples: int
    seed: int
    n_blocks: int = 10

    def __post_init__(self):
        violations = []
        if not (isinstance(self.n_samples, int) and self.n_samples >= 1):
            violations.append(f"n_samples must be an integer >= 1, got {self.n_samples!r}")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            violations.append(f"seed must be an integer in [0, 2^64), got {self.seed!r}")
        if not (isinstance(self.n_blocks, int) and self.n_blocks >= 1):
            violations.append(f"n_blocks must be an integer >= 1, got {self.n_blocks!r}")
        if violations:
            raise ParameterError(violations)


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """Columnar record of one batch of simulated detector outcomes.

    Columns (one value per trial, shot-noise units):

    * ``x1``/``p1``: quadratures of the outgoing (transmitted) mode at
      the attenuator output, before the channel.
    * ``x2``/``p2``: Alice's conjugate-detector readings.
    * ``x3``/``p3``: Bob's conjugate-detector readings.
    * ``x4``/``p4``: the eavesdropper's ideal readings of the channel
      tap; present only when the config enables ``eavesdropper_tap``.
    """

    x1: np.ndarray
    x2: np.ndarray
    x3: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    p3: np.ndarray
    x4: np.ndarray | None = None
    p4: np.ndarray | None = None

    @property
    def n_samples(self):
        return self.x1.shape[0]

    def column_names(self):
        """Column names in wire order, absent columns omitted."""
        names = ["x1", "x2", "x3"]
        if self.x4 is not None:
            names.append("x4")
        names += ["p1", "p2", "p3"]
        if self.p4 is not None:
            names.append("p4")
        return names

    def columns(self):
        """The column arrays, ordered as in ``column_names``."""
        return [getattr(self, name) for name in self.column_names()]


def thermal_quadratures(rng, mean_photon_number, size):
    """Draw ``size`` independent quadrature samples of a thermal mode.

    Samples are zero-mean Gaussians with variance 2*n0 + 1 (shot-noise
    units). Successive calls, and calls on independent generators, give
    independent draws.
    """
    violations = []
    if not (isinstance(mean_photon_number, (int, float))
            and math.isfinite(mean_photon_number) and mean_photon_number >= 0):
        violations.append(
            f"mean_photon_number must be finite and >= 0, got {mean_photon_number!r}")
    if violations:
        raise ParameterError(violations)
    scale = math.sqrt(2.0 * mean_photon_number + 1.0)
    return scale * rng.standard_normal(size)


def derive_point_seed(seed, index):
    """Derive the sampler seed for sweep point ``index`` from a base seed.

    Sweep commands give every grid point its own statistically
    independent seed via ``SeedSequence(seed, spawn_key=(index,))`` so
    that points can be generated in parallel and in any order without
    changing results.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0])


def _substream(seed, chunk_index, term_index):
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(chunk_index), int(term_index)))
    return np.random.Generator(np.random.Philox(ss))


def _quadrature_chunk(config, seed, chunk_index, count, term_base, alice_ch, bob_ch,
                      with_tap):
    """Generate one chunk of one quadrature's columns (1, 2, 3[, 4])."""
    n0 = config.source.mean_photon_number
    a = config.source.mode_overlap
    b = config.source.orthogonal_weight
    e0 = config.alice_attenuation
    t = config.channel.transmittance
    eta_a = alice_ch.efficiency
    nu_a = alice_ch.noise_variance
    eta_b = bob_ch.efficiency
    nu_b = bob_ch.noise_variance

    def draw(term):
        return _substream(seed, chunk_index, term_base + term).standard_normal(count)

    q_in = thermal_quadratures(
        _substream(seed, chunk_index, term_base + _T_THERMAL), n0, count)
    q_orth = thermal_quadratures(
        _substream(seed, chunk_index, term_base + _T_THERMAL_ORTH), n0, count)
    v_split = draw(_T_VAC_SPLIT)
    v_split_orth = draw(_T_VAC_SPLIT_ORTH)
    v_alice_split = draw(_T_VAC_ALICE_SPLIT)
    v_atten = draw(_T_VAC_ATTEN)
    v_channel = draw(_T_VAC_CHANNEL)
    v_bob_split = draw(_T_VAC_BOB_SPLIT)
    v_alice_det = draw(_T_VAC_ALICE_DET)
    v_bob_det = draw(_T_VAC_BOB_DET)
    e_alice = math.sqrt(nu_a) * draw(_T_ALICE_ELEC)
    e_bob = math.sqrt(nu_b) * draw(_T_BOB_ELEC)

    # Outgoing mode after the source splitter and the attenuator.
    out = (math.sqrt(e0 / 2.0) * (q_in - v_split)
           - math.sqrt(1.0 - e0) * v_atten)
    # Alice's conjugate-detector reading of the retained mode; the
    # mismatched mode component enters with amplitude b.
    alice = ((math.sqrt(eta_a) / 2.0)
             * (a * (q_in + v_split) + b * (q_orth + v_split_orth))
             + math.sqrt(eta_a / 2.0) * v_alice_split
             - math.sqrt(1.0 - eta_a) * v_alice_det
             + e_alice)
    # Bob's reading after channel loss and his detector.
    bob = (math.sqrt(e0 * t * eta_b) / 2.0 * (q_in - v_split)
           - math.sqrt((1.0 - e0) * t * eta_b / 2.0) * v_atten
           - math.sqrt((1.0 - t) * eta_b / 2.0) * v_channel
           + math.sqrt(eta_b / 2.0) * v_bob_split
           - math.sqrt(1.0 - eta_b) * v_bob_det
           + e_bob)
    tap = None
    if with_tap:
        v_eve_split = draw(_T_VAC_EVE_SPLIT)
        # Ideal conjugate detection of the channel's tapped port.
        tap = (math.sqrt(e0 * (1.0 - t)) / 2.0 * (q_in - v_split)
               - math.sqrt((1.0 - e0) * (1.0 - t) / 2.0) * v_atten
               + math.sqrt(t / 2.0) * v_channel
               + math.sqrt(0.5) * v_eve_split)
    return out, alice, bob, tap


def simulate_batch(config: SystemConfig, run: RunSpec, *, n_workers=1,
                   memory_limit_bytes=DEFAULT_MEMORY_LIMIT):
    """Generate one batch of simulated trials for ``config``.

    Parameters
    ----------
    config : SystemConfig
        Physical description; ``config.eavesdropper_tap`` controls
        whether the x4/p4 columns are produced.
    run : RunSpec
        Batch size and seed. ``run.n_blocks`` is carried for the
        estimation stage and does not influence sampling.
    n_workers : int
        Number of threads generating chunks. Any value yields
        bit-identical output; more workers only trade memory for time.
    memory_limit_bytes : int
        Refuse (with ``BatchSizeError``) batches whose column storage
        would exceed this limit, before any sampling starts.

    Returns
    -------
    SampleBatch
    """
    if not isinstance(config, SystemConfig):
        raise ParameterError([f"config must be a SystemConfig, got {type(config).__name__}"])
    if not isinstance(run, RunSpec):
        raise ParameterError([f"run must be a RunSpec, got {type(run).__name__}"])
    if not (isinstance(n_workers, int) and n_workers >= 1):
        raise ParameterError([f"n_workers must be an integer >= 1, got {n_workers!r}"])

    n = run.n_samples
    n_cols = 8 if config.eavesdropper_tap else 6
    workspace = 2 * _TERMS_PER_QUAD * min(CHUNK_SIZE, n) * 8 * max(n_workers, 1)
    needed = n_cols * n * 8 + workspace
    if needed > memory_limit_bytes:
        raise BatchSizeError(
            f"batch of {n} samples x {n_cols} columns needs about {needed} bytes, "
            f"over the limit of {memory_limit_bytes}")

    cols = {name: np.empty(n) for name in ("x1", "x2", "x3", "p1", "p2", "p3")}
    if config.eavesdropper_tap:
        cols["x4"] = np.empty(n)
        cols["p4"] = np.empty(n)

    n_chunks = (n + CHUNK_SIZE - 1) // CHUNK_SIZE

    def fill(chunk_index):
        start = chunk_index * CHUNK_SIZE
        count = min(CHUNK_SIZE, n - start)
        sl = slice(start, start + count)
        out, alice, bob, tap = _quadrature_chunk(
            config, run.seed, chunk_index, count, 0,
            config.alice_detector.x, config.bob_detector.x, config.eavesdropper_tap)
        cols["x1"][sl], cols["x2"][sl], cols["x3"][sl] = out, alice, bob
        if tap is not None:
            cols["x4"][sl] = tap
        out, alice, bob, tap = _quadrature_chunk(
            config, run.seed, chunk_index, count, _TERMS_PER_QUAD,
            config.alice_detector.p, config.bob_detector.p, config.eavesdropper_tap)
        cols["p1"][sl], cols["p2"][sl], cols["p3"][sl] = out, alice, bob
        if tap is not None:
            cols["p4"][sl] = tap

    if n_workers == 1:
        for ci in range(n_chunks):
            fill(ci)
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            list(pool.map(fill, range(n_chunks)))

    return SampleBatch(**cols)


def empirical_conditional_variance(batch, gain):
    """Sample variance of (x1 - gain * x2): the residual uncertainty of
    Alice's scaled estimate of the outgoing quadrature."""
    if not (isinstance(gain, (int, float)) and math.isfinite(gain)):
        raise ParameterError([f"gain must be a finite number, got {gain!r}"])
    if batch.n_samples == 0:
        raise ParameterError(["batch is empty"])
    resid = batch.x1 - gain * batch.x2
    return float(np.mean(resid * resid))


def write_sample_csv(file_or_path, batch):
    """Write a batch in the columnar CSV wire format.

    Layout: one comment line ``# schema: ...``, a header naming the
    present columns in wire order, then one trial per row. Floats use
    repr-faithful decimal text; lines end with LF.
    """
    names = batch.column_names()
    matrix = np.column_stack(batch.columns())
    header = ",".join(names)

    def _write(f):
        f.write(f"# schema: {_SAMPLES_SCHEMA}\n")
        f.write(header + "\n")
        np.savetxt(f, matrix, fmt=_FLOAT_FMT, delimiter=",", newline="\n")

    if hasattr(file_or_path, "write"):
        _write(file_or_path)
    else:
        with open(file_or_path, "w", encoding="utf-8", newline="\n") as f:
            _write(f)


def read_sample_csv(file_or_path):
    """Read a batch written by ``write_sample_csv``.

    Returns a ``SampleBatch``; columns absent from the file stay None.
    """
    def _read(f):
        header = None
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            header = line
            break
        if header is None:
            raise ParameterError(["sample CSV contains no header row"])
        names = [c.strip() for c in header.split(",")]
        allowed = {"x1", "x2", "x3", "x4", "p1", "p2", "p3", "p4"}
        unknown = [c for c in names if c not in allowed]
        if unknown:
            raise ParameterError([f"unknown sample columns: {', '.join(unknown)}"])
        body = [ln for ln in f if ln.strip() and not ln.lstrip().startswith("#")]
        if not body:
            raise ParameterError(["sample CSV contains no data rows"])
        data = np.loadtxt(body, delimiter=",", ndmin=2)
        if data.shape[1] != len(names):
            raise ParameterError(
                [f"sample CSV rows have {data.shape[1]} fields, header names {len(names)}"])
        by_name = {name: np.ascontiguousarray(data[:, i]) for i, name in enumerate(names)}
        required = ("x1", "x2", "x3", "p1", "p2", "p3")
        missing = [c for c in required if c not in by_name]
        if missing:
            raise ParameterError([f"sample CSV is missing columns: {', '.join(missing)}"])
        return SampleBatch(
            x1=by_name["x1"], x2=by_name["x2"], x3=by_name["x3"],
            p1=by_name["p1"], p2=by_name["p2"], p3=by_name["p3"],
            x4=by_name.get("x4"), p4=by_name.get("p4"))

    if hasattr(file_or_path, "read"):
        return _read(file_or_path)
    with open(file_or_path, "r", encoding="utf-8") as f:
        return _read(f)
