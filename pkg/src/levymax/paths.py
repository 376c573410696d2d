"""Exact sampling of the running maximum and its last-argmax time.

Two engines are provided:

* piecewise-linear paths (compound Poisson plus drift): the supremum is
  attained at a path vertex, so the maximum and the *last* time it is attained
  are exact;
* Brownian motion with drift on a uniform grid, with the exact maximum of the
  Brownian bridge inside each cell. The maximum is exact for any grid; the
  argmax is reported as the midpoint of the winning cell (bias at most half a
  cell).

Batch samplers return :class:`ExtremaBatch` (columns as numpy arrays); the
single-path functions wrap them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import InvalidHorizon, InvalidModel, InvalidRate
from .models import Kind, LevyModel
from .rng import DEFAULT_CHUNK, RngLike, as_generator, run_chunks

__all__ = [
    "PathExtrema",
    "ExtremaBatch",
    "sample_exponential",
    "sample_increments",
    "scan_piecewise_linear",
    "extrema_from_events",
    "sample_events",
    "sample_extrema_piecewise_linear",
    "sample_extrema_brownian",
    "sample_extrema_batch",
    "sample_continuous_pair",
    "sample_continuous_pairs",
    "DEFAULT_CELLS",
]

DEFAULT_CELLS = 256
_BLOCK_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class PathExtrema:
    max_value: float
    argmax_time: float
    terminal_value: float
    horizon: float


@dataclass(frozen=True)
class ExtremaBatch:
    max_value: np.ndarray
    argmax_time: np.ndarray
    terminal_value: np.ndarray
    horizon: np.ndarray

    def __len__(self) -> int:
        return len(self.max_value)

    def __getitem__(self, i: int) -> PathExtrema:
        return PathExtrema(
            float(self.max_value[i]),
            float(self.argmax_time[i]),
            float(self.terminal_value[i]),
            float(self.horizon[i]),
        )

    def __iter__(self) -> Iterator[PathExtrema]:
        for i in range(len(self)):
            yield self[i]

    def pairs(self) -> np.ndarray:
        """``(max, argmax)`` as an ``(n, 2)`` array."""
        return np.column_stack([self.max_value, self.argmax_time])

    @classmethod
    def concat(cls, parts: Sequence["ExtremaBatch"]) -> "ExtremaBatch":
        if not parts:
            empty = np.empty(0)
            return cls(empty, empty, empty, empty)
        return cls(
            np.concatenate([p.max_value for p in parts]),
            np.concatenate([p.argmax_time for p in parts]),
            np.concatenate([p.terminal_value for p in parts]),
            np.concatenate([p.horizon for p in parts]),
        )


def sample_exponential(rate: float, rng: RngLike, size=None):
    """Exponential draw(s) with mean ``1 / rate``."""
    if not rate > 0:
        raise InvalidRate(f"rate must be positive, got {rate}")
    out = as_generator(rng).exponential(1.0 / rate, size)
    return float(out) if size is None else out


def _jump_sizes(model: LevyModel, gen: np.random.Generator, size: int) -> np.ndarray:
    return gen.gamma(model.jump_shape, 1.0 / model.jump_mu, size)


def sample_increments(model: LevyModel, gen: np.random.Generator, t: np.ndarray) -> np.ndarray:
    """Exact draws of ``Y(t)`` for an array of nonnegative times."""
    t = np.asarray(t, dtype=float)
    out = model.drift * t
    if model.volatility > 0:
        out = out + model.volatility * np.sqrt(t) * gen.standard_normal(t.shape)
    if model.jump_rate > 0:
        counts = gen.poisson(model.jump_rate * t)
        shape = counts * model.jump_shape
        # a sum of `counts` Erlang(k, mu) jumps is Gamma(counts * k, mu)
        total = np.zeros(t.shape)
        pos = shape > 0
        total[pos] = gen.gamma(shape[pos], 1.0 / model.jump_mu)
        out = out + model.jump_sign * total
    return out


def scan_piecewise_linear(drift: float, times: Sequence[float], jumps: Sequence[float], horizon: float) -> PathExtrema:
    """Event-by-event scan of a piecewise-linear path (reference oracle).

    ``times`` must be increasing and lie in ``[0, horizon]``. Ties go to the
    latest epoch.
    """
    acc = 0.0
    best, best_t = 0.0, 0.0
    for t, j in zip(times, jumps):
        pre = acc + drift * t
        if pre >= best:
            best, best_t = pre, t
        acc = acc + j
        post = acc + drift * t
        if post >= best:
            best, best_t = post, t
    terminal = acc + drift * horizon
    if terminal >= best:
        best, best_t = terminal, horizon
    return PathExtrema(float(best), float(best_t), float(terminal), float(horizon))


def _row_blocks(counts: np.ndarray, width_floor: int = 1) -> Iterator[tuple[int, int]]:
    """Split rows into consecutive blocks whose padded size stays bounded."""
    n = len(counts)
    start = 0
    while start < n:
        stop = start
        width = width_floor
        while stop < n:
            w = max(width, int(counts[stop]))
            if (stop - start + 1) * w > _BLOCK_ELEMENTS and stop > start:
                break
            width = w
            stop += 1
        yield start, stop
        start = stop


def extrema_from_events(
    drift: float,
    horizons: np.ndarray,
    counts: np.ndarray,
    times: np.ndarray,
    jumps: np.ndarray,
) -> ExtremaBatch:
    """Vectorized extrema of piecewise-linear paths given explicit events.

    ``counts[i]`` events belong to path ``i``; ``times``/``jumps`` are the
    concatenation of every path's events, sorted by time within each path.
    Arithmetic mirrors :func:`scan_piecewise_linear` so results agree bit for bit.
    """
    horizons = np.asarray(horizons, dtype=float)
    counts = np.asarray(counts, dtype=np.int64)
    times = np.asarray(times, dtype=float)
    jumps = np.asarray(jumps, dtype=float)
    n = len(horizons)
    max_value = np.empty(n)
    argmax = np.empty(n)
    terminal = np.empty(n)
    offsets = np.concatenate([[0], np.cumsum(counts)])

    for lo, hi in _row_blocks(counts):
        rows = hi - lo
        c = counts[lo:hi]
        width = int(c.max()) if rows else 0
        h = horizons[lo:hi]
        if width == 0:
            term = np.zeros(rows) + drift * h
            best = np.maximum(term, 0.0)
            max_value[lo:hi] = best
            argmax[lo:hi] = np.where(term >= best, h, 0.0)
            terminal[lo:hi] = term
            continue
        e0, e1 = offsets[lo], offsets[hi]
        row_of = np.repeat(np.arange(rows), c)
        col_of = np.arange(e1 - e0) - np.repeat(offsets[lo:hi] - e0, c)
        J = np.zeros((rows, width))
        T = np.zeros((rows, width))
        J[row_of, col_of] = jumps[e0:e1]
        T[row_of, col_of] = times[e0:e1]
        cum = np.cumsum(J, axis=1)
        prev = np.zeros_like(cum)
        prev[:, 1:] = cum[:, :-1]
        valid = np.arange(width)[None, :] < c[:, None]
        pre = np.where(valid, prev + drift * T, -np.inf)
        post = np.where(valid, cum + drift * T, -np.inf)
        acc = np.where(c > 0, cum[np.arange(rows), np.maximum(c - 1, 0)], 0.0)
        term = acc + drift * h

        # candidates in time order: t=0, (pre, post) per event, horizon
        vals = np.empty((rows, 2 * width + 2))
        tms = np.empty_like(vals)
        vals[:, 0] = 0.0
        tms[:, 0] = 0.0
        vals[:, 1:-1:2] = pre
        vals[:, 2:-1:2] = post
        tms[:, 1:-1:2] = T
        tms[:, 2:-1:2] = T
        vals[:, -1] = term
        tms[:, -1] = h
        best = vals.max(axis=1)
        at_best = vals == best[:, None]
        max_value[lo:hi] = best
        argmax[lo:hi] = np.where(at_best, tms, -np.inf).max(axis=1)
        terminal[lo:hi] = term
    return ExtremaBatch(max_value, argmax, terminal, horizons.copy())


def sample_events(model: LevyModel, gen: np.random.Generator, horizons: np.ndarray):
    """Jump epochs and signed sizes on ``[0, horizon_i]`` for each path.

    Returns ``(counts, times, jumps)`` in the ragged layout used by
    :func:`extrema_from_events`.
    """
    horizons = np.asarray(horizons, dtype=float)
    if model.jump_rate > 0:
        counts = gen.poisson(model.jump_rate * horizons).astype(np.int64)
    else:
        counts = np.zeros(len(horizons), dtype=np.int64)
    total = int(counts.sum())
    seg = np.repeat(np.arange(len(horizons)), counts)
    u = gen.random(total)
    # uniform order statistics per path: sort u within each segment
    u = u[np.lexsort((u, seg))]
    times = u * horizons[seg]
    jumps = model.jump_sign * _jump_sizes(model, gen, total)
    return counts, times, jumps


def _check_horizons(horizons: np.ndarray) -> None:
    if np.any(~(horizons > 0)) or np.any(~np.isfinite(horizons)):
        raise InvalidHorizon("horizons must be positive and finite")


def _piecewise_batch(model: LevyModel, gen: np.random.Generator, horizons: np.ndarray) -> ExtremaBatch:
    if not model.piecewise_linear:
        raise InvalidModel("piecewise-linear engine needs zero volatility")
    counts, times, jumps = sample_events(model, gen, horizons)
    return extrema_from_events(model.drift, horizons, counts, times, jumps)


def _brownian_batch(model: LevyModel, gen: np.random.Generator, horizons: np.ndarray, cells: int) -> ExtremaBatch:
    n = len(horizons)
    sigma = model.volatility
    max_value = np.empty(n)
    argmax = np.empty(n)
    terminal = np.empty(n)
    rows_per_block = max(1, _BLOCK_ELEMENTS // cells)
    for lo in range(0, n, rows_per_block):
        hi = min(n, lo + rows_per_block)
        h = horizons[lo:hi]
        dt = (h / cells)[:, None]
        z = gen.standard_normal((hi - lo, cells))
        u = 1.0 - gen.random((hi - lo, cells))
        y = np.cumsum(model.drift * dt + sigma * np.sqrt(dt) * z, axis=1)
        a = np.zeros_like(y)
        a[:, 1:] = y[:, :-1]
        # inverse of P(M >= m | a, b) = exp(-2 (m - a)(m - b) / (sigma^2 dt))
        bridge = 0.5 * (a + y + np.sqrt((y - a) ** 2 - 2.0 * sigma**2 * dt * np.log(u)))
        idx = bridge.argmax(axis=1)
        max_value[lo:hi] = bridge[np.arange(hi - lo), idx]
        argmax[lo:hi] = (idx + 0.5) * dt[:, 0]
        terminal[lo:hi] = y[:, -1]
    return ExtremaBatch(max_value, argmax, terminal, horizons.copy())


def sample_extrema_batch(
    model: LevyModel,
    gen: np.random.Generator,
    horizons: np.ndarray,
    cells: int = DEFAULT_CELLS,
) -> ExtremaBatch:
    """Dispatch to the exact engine for the model class."""
    horizons = np.asarray(horizons, dtype=float)
    _check_horizons(horizons)
    if model.piecewise_linear:
        return _piecewise_batch(model, gen, horizons)
    if model.kind is not Kind.BROWNIAN:
        raise InvalidModel("no exact engine for jump-diffusions")
    if cells < 1:
        raise ValueError("cells must be at least 1")
    return _brownian_batch(model, gen, horizons, cells)


def sample_extrema_piecewise_linear(model: LevyModel, horizon: float, rng: RngLike) -> PathExtrema:
    if not horizon > 0:
        raise InvalidHorizon(f"horizon must be positive, got {horizon}")
    return _piecewise_batch(model, as_generator(rng), np.array([float(horizon)]))[0]


def sample_extrema_brownian(model: LevyModel, horizon: float, cells: int, rng: RngLike) -> PathExtrema:
    if model.kind is not Kind.BROWNIAN:
        raise InvalidModel("Brownian engine needs a BrownianDrift model")
    if not horizon > 0:
        raise InvalidHorizon(f"horizon must be positive, got {horizon}")
    return sample_extrema_batch(model, as_generator(rng), np.array([float(horizon)]), cells)[0]


def sample_continuous_pair(model: LevyModel, beta: float, rng: RngLike, cells: int = DEFAULT_CELLS) -> PathExtrema:
    """One draw of ``(max, last argmax)`` over an independent exp(beta) horizon."""
    gen = as_generator(rng)
    horizon = sample_exponential(beta, gen, size=1)
    return sample_extrema_batch(model, gen, horizon, cells)[0]


def sample_continuous_pairs(
    model: LevyModel,
    beta: float,
    n: int,
    rng: RngLike,
    cells: int = DEFAULT_CELLS,
    threads: int = 1,
    chunk: int = DEFAULT_CHUNK,
) -> ExtremaBatch:
    """``n`` i.i.d. draws of the continuous-observation extrema over ``T_beta``."""
    if not beta > 0:
        raise InvalidRate(f"beta must be positive, got {beta}")

    def work(gen: np.random.Generator, size: int) -> ExtremaBatch:
        horizons = gen.exponential(1.0 / beta, size)
        return sample_extrema_batch(model, gen, horizons, cells)

    return ExtremaBatch.concat(run_chunks(work, n, rng, threads, chunk))
