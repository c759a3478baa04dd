"""
Random sub-stream derivation and chunked fan-out.

Every random draw in the package comes from a generator built by :func:`make_generator`:
a Philox (counter-based) bit generator keyed by ``SeedSequence(master_seed,
spawn_key=(stream, *counters))``. A chunk of Monte Carlo paths is keyed by its chunk index,
so serial and threaded runs consume identical streams and are reduced in chunk order.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, TypeVar

import numpy as np

from robust_bond_pricer._base.model import ParameterValidationError
from robust_bond_pricer.stochastic import RandomStream

logger = logging.getLogger(__name__)

DEFAULT_CHUNK_SIZE: int = 10_000

T = TypeVar("T")


def derive_seed_sequence(seed: int, stream: RandomStream, *counters: int) -> np.random.SeedSequence:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ParameterValidationError("seed", f"must be a non-negative integer, got {seed!r}")
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(stream.value, *(int(c) for c in counters)))


def make_generator(seed: int, stream: RandomStream, *counters: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(derive_seed_sequence(seed, stream, *counters)))


def plan_chunks(n_paths: int, chunk_size: int = DEFAULT_CHUNK_SIZE) -> List[int]:
    if n_paths < 1:
        raise ParameterValidationError("n_paths", f"must be positive, got {n_paths}")
    if chunk_size < 1:
        raise ParameterValidationError("chunk_size", f"must be positive, got {chunk_size}")
    full, rest = divmod(n_paths, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def map_chunks(
    work: Callable[[int, np.random.Generator], T],
    n_paths: int,
    seed: int,
    stream: RandomStream,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    n_workers: int = 1,
) -> List[T]:
    """
    Run ``work(chunk_paths, rng)`` over all chunks and return the results in chunk order.

    Args:
        work: Callable receiving the number of paths in the chunk and the chunk's generator
        n_paths: Total number of paths
        seed: Master seed
        stream: Sub-stream of the master seed
        chunk_size: Paths per chunk
        n_workers: Thread count; 1 runs serially

    Returns:
        One result per chunk, ordered by chunk index
    """
    sizes = plan_chunks(n_paths, chunk_size)
    generators = [make_generator(seed, stream, index) for index in range(len(sizes))]
    logger.debug(f"Fan-out of {n_paths} paths on stream {stream.name}: {len(sizes)} chunk(s), {n_workers} worker(s)")
    if n_workers <= 1 or len(sizes) == 1:
        return [work(size, rng) for size, rng in zip(sizes, generators)]
    with ThreadPoolExecutor(max_workers=n_workers) as executor:
        return list(executor.map(work, sizes, generators))


@dataclass(frozen=True)
class SampleMoments:
    """Count, mean and sum of squared deviations, mergeable in a fixed order."""

    count: int
    mean: float
    m2: float

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "SampleMoments":
        samples = np.asarray(samples, dtype=float).ravel()
        if samples.size == 0:
            return cls(count=0, mean=0.0, m2=0.0)
        if np.all(samples == samples[0]):
            return cls(count=int(samples.size), mean=float(samples[0]), m2=0.0)
        mean = float(samples.mean())
        return cls(count=int(samples.size), mean=mean, m2=float(np.sum((samples - mean) ** 2)))

    def merge(self, other: "SampleMoments") -> "SampleMoments":
        if self.count == 0:
            return other
        if other.count == 0:
            return self
        count = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / count
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / count
        return SampleMoments(count=count, mean=mean, m2=m2)

    @classmethod
    def combine(cls, parts: List["SampleMoments"]) -> "SampleMoments":
        total = cls(count=0, mean=0.0, m2=0.0)
        for part in parts:
            total = total.merge(part)
        return total

    @property
    def stderr(self) -> float:
        if self.count < 2:
            return 0.0
        return float(np.sqrt(self.m2 / (self.count - 1) / self.count))
