"""Reproducible, splittable random streams.

An :class:`RngStream` names a stream by ``(seed, stream_id)`` plus an optional
spawn path. Each stream maps to its own Philox counter-based generator through
``numpy.random.SeedSequence``, so work split into chunks draws the same
numbers no matter how the chunks are scheduled across threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence, TypeVar, Union

import numpy as np

__all__ = ["RngStream", "as_generator", "run_chunks", "chunk_sizes", "DEFAULT_CHUNK"]

DEFAULT_CHUNK = 1 << 16
_MASK64 = (1 << 64) - 1

T = TypeVar("T")


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        if not (0 <= self.seed <= _MASK64 and 0 <= self.stream_id <= _MASK64):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *self.path))
        return np.random.Generator(np.random.Philox(ss))

    def spawn(self, index: int) -> "RngStream":
        """Child stream; children with distinct indices are independent."""
        return RngStream(self.seed, self.stream_id, self.path + (int(index),))

    def stream(self, stream_id: int) -> "RngStream":
        """Sibling stream with a different ``stream_id`` (same seed)."""
        return RngStream(self.seed, stream_id, self.path)


RngLike = Union[RngStream, np.random.Generator, int, None]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    return np.random.Generator(np.random.Philox(rng))


def as_stream(rng: RngLike) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng))
    if rng is None:
        return RngStream(int(np.random.SeedSequence().entropy) & _MASK64)
    # a Generator: derive a stream deterministically from its next draw
    return RngStream(int(rng.integers(0, 2**63)))


def chunk_sizes(n: int, chunk: int = DEFAULT_CHUNK) -> list[int]:
    if n < 0:
        raise ValueError("sample size must be nonnegative")
    full, rest = divmod(n, chunk)
    return [chunk] * full + ([rest] if rest else [])


def run_chunks(
    fn: Callable[[np.random.Generator, int], T],
    n: int,
    rng: RngLike,
    threads: int = 1,
    chunk: int = DEFAULT_CHUNK,
) -> list[T]:
    """Evaluate ``fn(generator, size)`` over fixed-size chunks.

    Chunk ``i`` always uses ``stream.spawn(i)``; results come back in chunk
    order, so the output does not depend on ``threads``.
    """
    stream = as_stream(rng)
    sizes = chunk_sizes(n, chunk)
    jobs: Sequence[tuple[int, int]] = list(enumerate(sizes))

    def work(job: tuple[int, int]) -> T:
        i, size = job
        return fn(stream.spawn(i).generator(), size)

    if threads <= 1 or len(jobs) <= 1:
        return [work(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, jobs))
