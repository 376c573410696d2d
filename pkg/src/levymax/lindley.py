"""Lindley-type recursions: classical, Bernoulli-killed and two-dimensional.

Deterministic engines work on plain sequences and are checked pathwise
against their closed forms. The stochastic helpers draw the distributional
fixed point of the killed recursion ``W = I (W + X)^+`` with ``I ~ B(1-p)``,
which is the maximum of a random walk stopped after ``N`` steps where
``N + 1`` is geometric with parameter ``p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    IndexOutOfRange,
    InfiniteMean,
    InvalidProbability,
    LengthMismatch,
    NegativeInput,
    NegativeSecondCoordinate,
)
from .inspection import _segment_cumsum, _summarize
from .rng import DEFAULT_CHUNK, RngLike, as_generator, run_chunks

__all__ = [
    "TwoDimState",
    "lindley_run",
    "lindley_closed_form",
    "killed_lindley_run",
    "z_recursion_run",
    "two_dim_run",
    "two_dim_closed_form",
    "size_biased_pmf",
    "geometric_pmf",
    "fixed_point_sample",
    "fixed_point_samples",
    "killed_long_run",
    "two_dim_fixed_point_samples",
    "killed_two_dim_long_run",
    "default_burn_in",
]

IncrementSampler = Callable[[np.random.Generator, int], np.ndarray]
PairSampler = Callable[[np.random.Generator, int], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class TwoDimState:
    w: float
    w_prime: float


def lindley_run(x: Sequence[float]) -> list[float]:
    """``w_n = (w_{n-1} + x_n)^+`` from ``w_0 = 0``; returns ``w_1..w_n``."""
    w = 0.0
    out = []
    for xi in x:
        w = max(w + xi, 0.0)
        out.append(w)
    return out


def lindley_closed_form(x: Sequence[float], n: int) -> float:
    """``s_n - min_{k<=n} s_k`` with ``s_0 = 0``."""
    if not 0 <= n <= len(x):
        raise IndexOutOfRange(f"n={n} outside 0..{len(x)}")
    s = 0.0
    lowest = 0.0
    for xi in x[:n]:
        s += xi
        lowest = min(lowest, s)
    return s - lowest


def killed_lindley_run(x: Sequence[float], kill_flags: Sequence[int]) -> list[float]:
    """``W_n = I_n (W_{n-1} + x_n)^+``: a zero flag restarts the recursion at 0."""
    if len(x) != len(kill_flags):
        raise LengthMismatch("x and kill_flags differ in length")
    w = 0.0
    out = []
    for xi, flag in zip(x, kill_flags):
        w = max(w + xi, 0.0) if flag else 0.0
        out.append(w)
    return out


def z_recursion_run(u: Sequence[float], v: Sequence[float]) -> list[float]:
    """Sojourn-time recursion ``z_{k+1} = u_{k+1} + (z_k - v_k)^+`` with ``z_0 = 0``.

    ``u`` holds ``u_1..u_{n+1}`` and ``v`` holds ``v_1..v_n``; returns
    ``z_1..z_{n+1}``.
    """
    if len(u) != len(v) + 1:
        raise LengthMismatch("u needs exactly one more element than v")
    if any(ui < 0 for ui in u) or any(vi < 0 for vi in v):
        raise NegativeInput("u and v must be nonnegative")
    z = u[0]
    out = [z]
    for ui, vi in zip(u[1:], v):
        z = ui + max(z - vi, 0.0)
        out.append(z)
    return out


def two_dim_run(x: Sequence[float], x_prime: Sequence[float]) -> list[TwoDimState]:
    """Two-dimensional recursion tracking the time since the last reset.

    ``w_n = (w_{n-1} + x_n)^+`` and
    ``w'_n = (w'_{n-1} + x'_n) * 1{w_{n-1} + x_n >= 0}`` (weak inequality).
    """
    if len(x) != len(x_prime):
        raise LengthMismatch("x and x_prime differ in length")
    if any(xp < 0 for xp in x_prime):
        raise NegativeSecondCoordinate("second coordinates must be nonnegative")
    w, wp = 0.0, 0.0
    out = []
    for xi, xpi in zip(x, x_prime):
        level = w + xi
        wp = wp + xpi if level >= 0 else 0.0
        w = max(level, 0.0)
        out.append(TwoDimState(w, wp))
    return out


def two_dim_closed_form(x: Sequence[float], x_prime: Sequence[float], n: int) -> tuple[float, int, float]:
    """``(max_k s_k, last argmax k_n, s'_{k_n})`` over ``k = 0..n``."""
    if len(x) != len(x_prime):
        raise LengthMismatch("x and x_prime differ in length")
    if not 0 <= n <= len(x):
        raise IndexOutOfRange(f"n={n} outside 0..{len(x)}")
    s, sp = 0.0, 0.0
    best, best_k, best_sp = 0.0, 0, 0.0
    for k in range(1, n + 1):
        s += x[k - 1]
        sp += x_prime[k - 1]
        if s >= best:
            best, best_k, best_sp = s, k, sp
    return best, best_k, best_sp


def geometric_pmf(p: float, tail: float = 1e-12) -> np.ndarray:
    """pmf of ``N`` with ``N + 1 ~ G(p)``, truncated once the tail is below ``tail``."""
    if not 0 < p <= 1:
        raise InvalidProbability(f"p must lie in (0, 1], got {p}")
    if p == 1:
        return np.array([1.0])
    length = int(math.ceil(math.log(tail) / math.log1p(-p))) + 1
    return p * (1.0 - p) ** np.arange(length)


def size_biased_pmf(pmf: Sequence[float], tail: float = 1e-12) -> np.ndarray:
    """``P(N_e = n) = P(N >= n) / (E N + 1)`` for a finite pmf vector.

    ``pmf`` may be a truncation whose missing mass is at most ``tail``.
    """
    p = np.asarray(pmf, dtype=float)
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise InfiniteMean("pmf must be finite and nonnegative")
    total = p.sum()
    if abs(total - 1.0) > max(tail, 1e-9):
        raise ValueError(f"pmf sums to {total}, not 1")
    p = p / total
    survival = p[::-1].cumsum()[::-1]  # P(N >= n)
    mean = float(np.dot(np.arange(len(p)), p))
    if not math.isfinite(mean):
        raise InfiniteMean("N has infinite mean")
    return survival / (mean + 1.0)


def _check_p(p: float) -> None:
    if not 0 < p < 1:
        raise InvalidProbability(f"p must lie in (0, 1), got {p}")


def fixed_point_sample(p: float, increment_sampler: IncrementSampler, rng: RngLike) -> float:
    """One draw of ``max_{k<=N} S_k`` with ``N + 1 ~ G(p)``."""
    _check_p(p)
    gen = as_generator(rng)
    n = int(gen.geometric(p)) - 1
    if n == 0:
        return 0.0
    s = np.cumsum(increment_sampler(gen, n))
    return float(max(0.0, s.max()))


def _walk_max_batch(p: float, increment_sampler: IncrementSampler, gen: np.random.Generator, size: int) -> np.ndarray:
    counts = gen.geometric(p, size).astype(np.int64) - 1
    steps = increment_sampler(gen, int(counts.sum()))
    zeros = np.zeros(len(steps))
    return _summarize(counts, zeros, steps, np.zeros(size)).max_value


def fixed_point_samples(
    p: float,
    increment_sampler: IncrementSampler,
    n: int,
    rng: RngLike,
    threads: int = 1,
    chunk: int = DEFAULT_CHUNK,
) -> np.ndarray:
    _check_p(p)
    parts = run_chunks(lambda g, k: _walk_max_batch(p, increment_sampler, g, k), n, rng, threads, chunk)
    return np.concatenate(parts) if parts else np.empty(0)


def default_burn_in(p: float) -> int:
    """Ten mean regeneration cycles: ``10 * E[N + 1] = 10 / p`` steps."""
    return int(math.ceil(10.0 / p))


def killed_long_run(
    p: float,
    increment_sampler: IncrementSampler,
    n: int,
    rng: RngLike,
    burn_in: int | None = None,
    threads: int = 1,
    chunk: int = DEFAULT_CHUNK,
) -> np.ndarray:
    """Final values of ``n`` independent killed recursions after ``burn_in`` steps.

    Every chain starts at 0 and uses i.i.d. ``B(1 - p)`` survival flags.
    """
    _check_p(p)
    steps = default_burn_in(p) if burn_in is None else int(burn_in)

    def work(gen: np.random.Generator, size: int) -> np.ndarray:
        w = np.zeros(size)
        for _ in range(steps):
            alive = gen.random(size) >= p
            w = np.where(alive, np.maximum(w + increment_sampler(gen, size), 0.0), 0.0)
        return w

    parts = run_chunks(work, n, rng, threads, chunk)
    return np.concatenate(parts) if parts else np.empty(0)


def two_dim_fixed_point_samples(
    p: float,
    pair_sampler: PairSampler,
    n: int,
    rng: RngLike,
    threads: int = 1,
    chunk: int = DEFAULT_CHUNK,
) -> np.ndarray:
    """Draws of ``(max_{k<=N} S_k, S'_{K_N})`` as an ``(n, 2)`` array."""
    _check_p(p)

    def work(gen: np.random.Generator, size: int) -> np.ndarray:
        counts = gen.geometric(p, size).astype(np.int64) - 1
        x, xp = pair_sampler(gen, int(counts.sum()))
        if np.any(xp < 0):
            raise NegativeSecondCoordinate("second coordinates must be nonnegative")
        sp = _segment_cumsum(xp, counts)
        batch = _summarize(counts, sp, x, np.zeros(size))
        return np.column_stack([batch.max_value, batch.argmax_epoch])

    parts = run_chunks(work, n, rng, threads, chunk)
    return np.vstack(parts)


def killed_two_dim_long_run(
    p: float,
    pair_sampler: PairSampler,
    n: int,
    rng: RngLike,
    burn_in: int | None = None,
    threads: int = 1,
    chunk: int = DEFAULT_CHUNK,
) -> np.ndarray:
    """Long-run state of the killed two-dimensional recursion, ``(n, 2)``."""
    _check_p(p)
    steps = default_burn_in(p) if burn_in is None else int(burn_in)

    def work(gen: np.random.Generator, size: int) -> np.ndarray:
        w = np.zeros(size)
        wp = np.zeros(size)
        for _ in range(steps):
            alive = gen.random(size) >= p
            x, xp = pair_sampler(gen, size)
            level = w + x
            wp = np.where(alive & (level >= 0), wp + xp, 0.0)
            w = np.where(alive, np.maximum(level, 0.0), 0.0)
        return np.column_stack([w, wp])

    parts = run_chunks(work, n, rng, threads, chunk)
    return np.vstack(parts)
