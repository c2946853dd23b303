"""Seeded-stream discipline and Monte Carlo estimate containers.

RNG: numpy's Philox counter-based bit generator. One generator per batch,
derived from SeedSequence(seed) with the batch index in the spawn key, so a
(seed, samples, batches) triple maps to a fixed set of streams and estimates
are bit-identical across reruns on one platform (per kernel backend).
Reduction over batches is in fixed batch order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .numerics import q_inverse

__all__ = ["McConfig", "McEstimate", "batch_generators", "batch_sizes", "pooled_estimate"]


@dataclass(frozen=True)
class McConfig:
    """Sample budget, seed and batching for one estimator run."""

    samples: int = 100_000
    seed: int = 0
    batches: int = 16
    confidence: float = 0.95

    def __post_init__(self):
        if self.samples < 1 or self.batches < 1:
            raise DomainError("samples and batches must be >= 1")
        if self.samples < self.batches:
            raise DomainError("samples must be >= batches")
        if not (0.0 < self.confidence < 1.0):
            raise DomainError("confidence must be in (0,1)")

    @property
    def z_value(self) -> float:
        """Two-sided normal quantile for the configured confidence level."""
        return q_inverse(0.5 * (1.0 - self.confidence))


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo estimate with its standard error and provenance."""

    mean: float
    std_err: float
    n_effective: int
    ci_half_width: float
    extras: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_moments(cls, mean: float, variance: float, n: int, z: float, **extras) -> "McEstimate":
        se = math.sqrt(max(variance, 0.0) / n) if n > 0 else 0.0
        return cls(mean=float(mean), std_err=se, n_effective=n,
                   ci_half_width=z * se, extras=dict(extras))

    @classmethod
    def exact(cls, value: float, **extras) -> "McEstimate":
        """Degenerate estimate for analytic shortcuts (zero spread)."""
        return cls(mean=float(value), std_err=0.0, n_effective=0,
                   ci_half_width=0.0, extras=dict(extras))

    def to_record(self) -> dict:
        rec = {
            "mean": self.mean,
            "std_err": self.std_err,
            "n_effective": self.n_effective,
            "ci_half_width": self.ci_half_width,
        }
        rec.update(self.extras)
        return rec


def batch_sizes(mc: McConfig) -> list[int]:
    """Deterministic near-equal split of mc.samples over mc.batches."""
    base, rem = divmod(mc.samples, mc.batches)
    return [base + (1 if b < rem else 0) for b in range(mc.batches)]


def batch_generators(mc: McConfig, stream_tag: tuple[int, ...] = ()) -> list[np.random.Generator]:
    """One Philox generator per batch.

    stream_tag namespaces independent estimators inside one run (e.g. the
    autocovariance lag index) so they never share a stream.
    """
    root = np.random.SeedSequence(entropy=mc.seed, spawn_key=tuple(stream_tag))
    children = root.spawn(mc.batches)
    return [np.random.Generator(np.random.Philox(child)) for child in children]


_THREADS = 1


def set_thread_count(n: int):
    """Worker threads for batch mapping (CLI --threads); 1 = serial."""
    global _THREADS
    _THREADS = max(1, int(n))


def map_batches(fn, gens, sizes) -> list:
    """Apply fn(rng, size) per batch; results come back in batch order,
    so the reduction is deterministic regardless of thread count."""
    if _THREADS > 1 and len(sizes) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=_THREADS) as ex:
            return list(ex.map(fn, gens, sizes))
    return [fn(g, nb) for g, nb in zip(gens, sizes)]


def pooled_estimate(batch_means: np.ndarray, batch_vars: np.ndarray,
                    sizes: list[int], z: float, **extras) -> McEstimate:
    """Combine per-batch means/variances into one estimate (fixed batch order)."""
    sizes_arr = np.asarray(sizes, dtype=np.float64)
    n = int(sizes_arr.sum())
    mean = float(np.dot(sizes_arr, batch_means) / n)
    # pooled within+between variance of the raw samples
    within = np.dot(sizes_arr, batch_vars)
    between = np.dot(sizes_arr, (batch_means - mean) ** 2)
    var = (within + between) / n
    return McEstimate.from_moments(mean, var, n, z, **extras)
