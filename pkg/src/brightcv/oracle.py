"""Exact stochastic model of the multimode homodyne detector.

Phase-space Monte Carlo: quadratures of every matched signal mode,
unmatched signal mode and unmatched vacuum mode are drawn from their
Gaussian (Wigner) distributions, propagated through the coupling
beamsplitters, and the photocurrent difference n1 - g n2 is evaluated with
photon numbers as symmetric-ordered quadratic forms (x^2 + p^2)/4.  The LO
is a deterministic classical amplitude alpha e^{i phi}, mirroring the
strong-LO approximation of the analytic model.

The normalized variance is estimated from two passes sharing the same
underlying standard normals: signal present, and signal blocked (every
signal mode replaced by vacuum).  The paired difference cancels the
symmetric-ordering offsets of phase-space sampling exactly and strongly
reduces the estimator variance.  The result is normalized by the blocked
(vacuum) variance g M alpha^2, which for a balanced detector is the
textbook M alpha^2 shot-noise level.
"""

from __future__ import annotations

import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from .detector import DetectorConfig

SAMPLE_DUMP_MAGIC = b"MCVORCL1"
MIN_SAMPLES_FOR_VARIANCE = 10_000


@dataclass(frozen=True)
class ModeSpec:
    """Gaussian input state of a single mode: quadrature variances and means."""

    var_x: float
    var_p: float
    mean_x: float = 0.0
    mean_p: float = 0.0

    def __post_init__(self) -> None:
        if self.var_x <= 0.0 or self.var_p <= 0.0:
            raise ValueError("quadrature variances must be positive")
        if self.var_x * self.var_p < 1.0 - 1e-9:
            raise ValueError(
                f"var_x * var_p = {self.var_x * self.var_p:g} < 1 violates uncertainty"
            )

    @classmethod
    def vacuum(cls) -> "ModeSpec":
        return cls(1.0, 1.0)

    @classmethod
    def thermal(cls, n_bar: float) -> "ModeSpec":
        if n_bar < 0.0:
            raise ValueError(f"n_bar must be non-negative, got {n_bar}")
        v = 2.0 * n_bar + 1.0
        return cls(v, v)

    @classmethod
    def coherent(cls, amplitude: float) -> "ModeSpec":
        return cls(1.0, 1.0, mean_x=2.0 * amplitude)

    @classmethod
    def squeezed(cls, v_s: float, displacement: tuple[float, float] = (0.0, 0.0)) -> "ModeSpec":
        if v_s <= 0.0:
            raise ValueError(f"v_s must be positive, got {v_s}")
        return cls(v_s, 1.0 / v_s, mean_x=displacement[0], mean_p=displacement[1])

    @property
    def mean_photons(self) -> float:
        """Quantum mean photon number, (Var x + Var p - 2)/4 + |mean|^2/4."""
        return (self.var_x + self.var_p - 2.0) / 4.0 + (self.mean_x**2 + self.mean_p**2) / 4.0

    @property
    def photon_number_variance(self) -> float:
        """Quantum Var(n) of the Gaussian mode.

        (Var_x^2 + Var_p^2)/8 - 1/4 + (mean_x^2 Var_x + mean_p^2 Var_p)/4;
        reproduces n(n+1) for thermal, n for coherent and 2n(n+1) for
        squeezed-vacuum states.
        """
        return (
            (self.var_x**2 + self.var_p**2) / 8.0
            - 0.25
            + (self.mean_x**2 * self.var_x + self.mean_p**2 * self.var_p) / 4.0
        )


@dataclass(frozen=True)
class OracleConfig:
    """Detector plus input-state specification for one oracle run.

    The seed fully determines every output; batches derive independent
    substreams from (seed, batch index), so results do not depend on how
    the batches are distributed over workers.
    """

    detector: DetectorConfig
    matched: ModeSpec
    unmatched: ModeSpec
    samples: int = 1_000_000
    seed: int = 0
    batches: int = 100

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise ValueError(f"samples must be positive, got {self.samples}")
        if self.batches < 2 or self.batches > self.samples:
            raise ValueError(f"need 2 <= batches <= samples, got {self.batches}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class OracleEstimate:
    value: float
    stderr: float
    samples_used: int


def _photocurrent(
    det: DetectorConfig,
    x_a: np.ndarray,
    p_a: np.ndarray,
    x_b: np.ndarray,
    p_b: np.ndarray,
    x_v: np.ndarray,
    p_v: np.ndarray,
) -> np.ndarray:
    """n1 - g n2 for arrays of mode quadratures, shape (samples, modes)."""
    x_lo = 2.0 * det.alpha * math.cos(det.phi)
    p_lo = 2.0 * det.alpha * math.sin(det.phi)

    sta, ra = math.sqrt(det.t_a), math.sqrt(1.0 - det.t_a)
    x1 = sta * x_a + ra * x_lo
    p1 = sta * p_a + ra * p_lo
    x2 = -ra * x_a + sta * x_lo
    p2 = -ra * p_a + sta * p_lo
    n1 = (x1**2 + p1**2).sum(axis=1) / 4.0
    n2 = (x2**2 + p2**2).sum(axis=1) / 4.0

    if det.n > 0:
        stb, rb = math.sqrt(det.t_b), math.sqrt(1.0 - det.t_b)
        xb1 = stb * x_b + rb * x_v
        pb1 = stb * p_b + rb * p_v
        xb2 = -rb * x_b + stb * x_v
        pb2 = -rb * p_b + stb * p_v
        n1 += det.epsilon * (xb1**2 + pb1**2).sum(axis=1) / 4.0
        n2 += det.epsilon * (xb2**2 + pb2**2).sum(axis=1) / 4.0

    return n1 - det.g * n2


def _batch_normals(config: OracleConfig, batch_index: int, batch_size: int):
    rng = np.random.default_rng([config.seed, batch_index])
    det = config.detector
    za = rng.standard_normal((2, batch_size, det.m))
    zb = rng.standard_normal((2, batch_size, det.n))
    zv = rng.standard_normal((2, batch_size, det.n))
    return za, zb, zv


def _scale(spec: ModeSpec, z_pair: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = spec.mean_x + math.sqrt(spec.var_x) * z_pair[0]
    p = spec.mean_p + math.sqrt(spec.var_p) * z_pair[1]
    return x, p


def _batch_photocurrents(
    config: OracleConfig, batch_index: int, batch_size: int, blocked: bool
) -> np.ndarray:
    za, zb, zv = _batch_normals(config, batch_index, batch_size)
    matched = ModeSpec.vacuum() if blocked else config.matched
    unmatched = ModeSpec.vacuum() if blocked else config.unmatched
    x_a, p_a = _scale(matched, za)
    x_b, p_b = _scale(unmatched, zb)
    x_v, p_v = _scale(ModeSpec.vacuum(), zv)
    return _photocurrent(config.detector, x_a, p_a, x_b, p_b, x_v, p_v)


def sample_photocurrent(config: OracleConfig, blocked: bool = False) -> np.ndarray:
    """All photocurrent-difference samples of a run, in batch order."""
    batch_size = config.samples // config.batches
    parts = [
        _batch_photocurrents(config, b, batch_size, blocked) for b in range(config.batches)
    ]
    return np.concatenate(parts)


def _batch_variance_difference(config: OracleConfig, batch_index: int, batch_size: int) -> float:
    signal = _batch_photocurrents(config, batch_index, batch_size, blocked=False)
    blocked = _batch_photocurrents(config, batch_index, batch_size, blocked=True)
    return float(signal.var(ddof=1) - blocked.var(ddof=1))


def _batch_range_variance_differences(args) -> list[float]:
    config, indices, batch_size = args
    return [_batch_variance_difference(config, b, batch_size) for b in indices]


def oracle_normalized_variance(config: OracleConfig, jobs: int = 1) -> OracleEstimate:
    """Monte-Carlo estimate of the normalized photocurrent variance (SNU).

    (Var(Delta) - Var(Delta0)) / (g M alpha^2) + 1, with Var(Delta0) taken
    from the signal-blocked pass.  The standard error comes from the spread
    of the per-batch paired differences.
    """
    if config.samples < MIN_SAMPLES_FOR_VARIANCE:
        raise ValueError(
            f"variance estimates need at least {MIN_SAMPLES_FOR_VARIANCE} samples, "
            f"got {config.samples}"
        )
    batch_size = config.samples // config.batches

    if jobs > 1:
        chunks = [
            (config, list(range(w, config.batches, jobs)), batch_size) for w in range(jobs)
        ]
        diffs_by_batch: dict[int, float] = {}
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for (cfg, indices, _), values in zip(chunks, pool.map(_batch_range_variance_differences, chunks)):
                for b, v in zip(indices, values):
                    diffs_by_batch[b] = v
        diffs = np.array([diffs_by_batch[b] for b in range(config.batches)])
    else:
        diffs = np.array(
            [_batch_variance_difference(config, b, batch_size) for b in range(config.batches)]
        )

    det = config.detector
    norm = det.g * det.m * det.alpha**2
    value = float(diffs.mean()) / norm + 1.0
    stderr = float(diffs.std(ddof=1)) / math.sqrt(config.batches) / norm
    return OracleEstimate(value, stderr, batch_size * config.batches)


def convergence_report(
    config: OracleConfig, schedule: Sequence[int]
) -> list[tuple[int, float, float]]:
    """(samples, value, stderr) rows over an increasing sample schedule."""
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("sample schedule must be strictly increasing")
    rows = []
    for samples in schedule:
        est = oracle_normalized_variance(replace(config, samples=samples))
        rows.append((est.samples_used, est.value, est.stderr))
    return rows


def dump_samples(stream: BinaryIO, samples: Iterable[float]) -> None:
    """Raw-sample dump: magic, u64-LE count, then f64-LE photocurrent values."""
    data = np.asarray(list(samples) if not isinstance(samples, np.ndarray) else samples, dtype="<f8")
    stream.write(SAMPLE_DUMP_MAGIC)
    stream.write(struct.pack("<Q", data.size))
    stream.write(data.tobytes())


def read_samples(stream: BinaryIO) -> np.ndarray:
    magic = stream.read(8)
    if magic != SAMPLE_DUMP_MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    (count,) = struct.unpack("<Q", stream.read(8))
    data = np.frombuffer(stream.read(8 * count), dtype="<f8")
    if data.size != count:
        raise ValueError(f"truncated dump: expected {count} samples, got {data.size}")
    return data
