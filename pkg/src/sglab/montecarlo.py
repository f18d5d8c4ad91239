"""Seeded random streams and Monte Carlo estimates with error bars.

Every random block is drawn from ``SeedSequence(seed, spawn_key=(stream, block))``
with a fixed block size, so sample values never depend on how many worker
threads consumed the blocks.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

DEFAULT_BLOCK = 4096


def rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


@dataclass(frozen=True)
class MCEstimate:
    """A Monte Carlo value with its standard error."""

    value: float
    stderr: float
    n: int

    def within(self, target: float, sigmas: float = 3.0, extra: float = 0.0) -> bool:
        return abs(self.value - target) <= sigmas * self.stderr + extra

    def __float__(self) -> float:
        return float(self.value)


def mean_estimate(x: np.ndarray) -> MCEstimate:
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    se = float(np.std(x, ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
    return MCEstimate(float(np.mean(x)), se, n)


def batch_mean_estimate(x: np.ndarray, batches: int) -> MCEstimate:
    """Mean with a standard error from ``batches`` contiguous batch means."""
    x = np.asarray(x, dtype=float)
    means = np.array([b.mean() for b in np.array_split(x, batches)])
    return MCEstimate(float(x.mean()), float(np.std(means, ddof=1) / np.sqrt(batches)), x.shape[0])


def block_sizes(samples: int, block: int = DEFAULT_BLOCK) -> list[int]:
    full, rest = divmod(int(samples), int(block))
    return [block] * full + ([rest] if rest else [])


def normal_block(seed: int, stream: int, index: int, rows: int, N: int) -> np.ndarray:
    return rng(seed, stream, index).standard_normal((rows, N))


def iter_mode_blocks(N: int, samples: int, seed: int, stream: int = 0, block: int = DEFAULT_BLOCK) -> Iterator[np.ndarray]:
    """Yield standard normal arrays of shape ``(rows, N)`` covering ``samples`` rows."""
    for i, rows in enumerate(block_sizes(samples, block)):
        yield normal_block(seed, stream, i, rows, N)


def map_mode_blocks(
    fn: Callable[[np.ndarray], np.ndarray],
    N: int,
    samples: int,
    seed: int,
    stream: int = 0,
    threads: int = 1,
    block: int = DEFAULT_BLOCK,
) -> np.ndarray:
    """Apply ``fn`` to every mode block and concatenate results in block order."""
    sizes = block_sizes(samples, block)

    def work(i):
        return np.asarray(fn(normal_block(seed, stream, i, sizes[i], N)))

    if threads <= 1 or len(sizes) <= 1:
        parts = [work(i) for i in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            parts = list(pool.map(work, range(len(sizes))))
    return np.concatenate(parts, axis=0)


def sample_mode_matrix(N: int, samples: int, seed: int, stream: int = 0, threads: int = 1, block: int = DEFAULT_BLOCK) -> np.ndarray:
    return map_mode_blocks(lambda z: z, N, samples, seed, stream, threads, block)
