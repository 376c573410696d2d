"""Poisson-inspected random walks up to an exponential killing time.

The process ``Y`` is observed at Poisson(omega) epochs ``U_1 < U_2 < ...``
until an independent exp(beta) time. The observed values form a random walk
``S_0 = 0, S_1, ..., S_N`` whose length ``N`` is geometric with success
probability ``q = beta / (beta + omega)``.

Two constructions are implemented:

``"competing"`` (default)
    a single stream of exp(beta + omega) inter-event times, each event marked
    as an inspection with probability ``omega / (beta + omega)`` and as the
    kill otherwise;
``"direct"``
    draw ``T_beta``, lay a Poisson(omega) process on ``[0, T_beta]`` and
    evaluate ``Y`` at its points.

Both are exact; the second is kept as a cross-check of the first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidRate
from .models import LevyModel
from .paths import _row_blocks, sample_increments
from .rng import DEFAULT_CHUNK, RngLike, as_generator, as_stream, run_chunks
from .stats import TestReport, chi_square_two_sample, ks_two_sample

__all__ = [
    "InspectionParams",
    "InspectedWalk",
    "WalkBatch",
    "inspection_count_pmf",
    "sample_inspection_count",
    "walk_from_values",
    "sample_inspected_walk",
    "sample_inspected_walks",
    "duality_pair",
    "last_record_index",
    "alternative_construction_check",
]


@dataclass(frozen=True)
class InspectionParams:
    beta: float
    omega: float

    def __post_init__(self) -> None:
        if not (self.beta > 0 and np.isfinite(self.beta)):
            raise InvalidRate(f"kill rate beta must be positive, got {self.beta}")
        if not (self.omega > 0 and np.isfinite(self.omega)):
            raise InvalidRate(f"inspection rate omega must be positive, got {self.omega}")

    @property
    def q(self) -> float:
        """Probability that the next event is the kill."""
        return self.beta / (self.beta + self.omega)

    @property
    def total_rate(self) -> float:
        return self.beta + self.omega


def inspection_count_pmf(params: InspectionParams, n) -> np.ndarray | float:
    """``P(N = n) = (1 - q)**n q``."""
    q = params.q
    out = (1.0 - q) ** np.asarray(n, dtype=float) * q
    return float(out) if np.ndim(out) == 0 else out


def sample_inspection_count(params: InspectionParams, rng: RngLike, size=None):
    gen = as_generator(rng)
    # numpy's geometric counts trials up to and including the first success
    out = gen.geometric(params.q, size) - 1
    return int(out) if size is None else out.astype(np.int64)


def last_record_index(values: Sequence[float]) -> tuple[int, int]:
    """Both definitions of the last-maximum index of ``S_0..S_n``.

    Returns ``(max{k : S_k = max_j S_j}, max{k : S_k = max_{j<=k} S_j})``.
    """
    s = np.asarray(values, dtype=float)
    top = s.max()
    by_global = int(np.flatnonzero(s == top)[-1])
    running = np.maximum.accumulate(s)
    by_record = int(np.flatnonzero(s == running)[-1])
    return by_global, by_record


@dataclass(frozen=True)
class InspectedWalk:
    epochs: tuple[float, ...]
    values: tuple[float, ...]
    count: int
    max_value: float
    argmax_index: int
    argmax_epoch: float

    @property
    def terminal(self) -> float:
        return self.values[-1]

    @property
    def final_epoch(self) -> float:
        return self.epochs[-1] if self.count else 0.0


def walk_from_values(epochs: Sequence[float], values: Sequence[float]) -> InspectedWalk:
    """Build a walk from inspection epochs ``U_1..U_N`` and values ``S_0..S_N``."""
    epochs = tuple(float(u) for u in epochs)
    values = tuple(float(v) for v in values)
    if len(values) != len(epochs) + 1 or values[0] != 0.0:
        raise ValueError("values must be S_0 = 0, S_1, ..., S_N")
    if any(b <= a for a, b in zip(epochs, epochs[1:])) or (epochs and epochs[0] < 0):
        raise ValueError("epochs must be nonnegative and strictly increasing")
    top = max(values)
    k = max(i for i, v in enumerate(values) if v == top)
    return InspectedWalk(
        epochs=epochs,
        values=values,
        count=len(epochs),
        max_value=top,
        argmax_index=k,
        argmax_epoch=epochs[k - 1] if k > 0 else 0.0,
    )


def sample_inspected_walk(model: LevyModel, params: InspectionParams, rng: RngLike) -> InspectedWalk:
    """One walk by the competing-risks construction, event by event."""
    gen = as_generator(rng)
    t, s = 0.0, 0.0
    epochs: list[float] = []
    values = [0.0]
    while True:
        tau = gen.exponential(1.0 / params.total_rate)
        if gen.random() < params.q:
            break
        t += tau
        s += float(sample_increments(model, gen, np.array([tau]))[0])
        epochs.append(t)
        values.append(s)
    return walk_from_values(epochs, values)


@dataclass(frozen=True)
class WalkBatch:
    """Summaries of ``n`` independent inspected walks (one entry per walk)."""

    count: np.ndarray
    max_value: np.ndarray
    argmax_index: np.ndarray
    argmax_epoch: np.ndarray
    terminal: np.ndarray
    final_epoch: np.ndarray
    min_value: np.ndarray
    kill_time: np.ndarray

    def __len__(self) -> int:
        return len(self.count)

    def pairs(self) -> np.ndarray:
        return np.column_stack([self.max_value, self.argmax_epoch])

    def duality(self) -> tuple[np.ndarray, np.ndarray]:
        """``(S_N - max S, U_N - G_N)`` for every walk."""
        return self.terminal - self.max_value, self.final_epoch - self.argmax_epoch

    @classmethod
    def concat(cls, parts: Sequence["WalkBatch"]) -> "WalkBatch":
        names = cls.__dataclass_fields__
        return cls(**{k: np.concatenate([getattr(p, k) for p in parts]) for k in names})


def _summarize(counts: np.ndarray, epochs: np.ndarray, increments: np.ndarray, kill_time: np.ndarray) -> WalkBatch:
    """Per-walk max, last argmax, min and terminal from ragged step arrays.

    ``epochs`` holds absolute inspection times, ``increments`` the walk steps.
    """
    n = len(counts)
    out = {k: np.zeros(n) for k in ("max_value", "argmax_epoch", "terminal", "final_epoch", "min_value")}
    argmax_index = np.zeros(n, dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(counts)])
    for lo, hi in _row_blocks(counts):
        c = counts[lo:hi]
        width = int(c.max()) if hi > lo else 0
        if width == 0:
            continue
        rows = hi - lo
        e0, e1 = offsets[lo], offsets[hi]
        row_of = np.repeat(np.arange(rows), c)
        col_of = np.arange(e1 - e0) - np.repeat(offsets[lo:hi] - e0, c)
        H = np.zeros((rows, width))
        U = np.zeros((rows, width))
        H[row_of, col_of] = increments[e0:e1]
        U[row_of, col_of] = epochs[e0:e1]
        S = np.cumsum(H, axis=1)
        valid = np.arange(width)[None, :] < c[:, None]
        Sv = np.where(valid, S, -np.inf)
        top = np.maximum(Sv.max(axis=1), 0.0)
        hit = Sv == top[:, None]
        # last maximizing position among S_1..S_N; 0 means S_0
        pos = np.where(hit, np.arange(1, width + 1)[None, :], 0).max(axis=1)
        r = np.arange(rows)
        last = np.maximum(c - 1, 0)
        out["max_value"][lo:hi] = top
        argmax_index[lo:hi] = pos
        out["argmax_epoch"][lo:hi] = np.where(pos > 0, U[r, np.maximum(pos - 1, 0)], 0.0)
        out["terminal"][lo:hi] = np.where(c > 0, S[r, last], 0.0)
        out["final_epoch"][lo:hi] = np.where(c > 0, U[r, last], 0.0)
        out["min_value"][lo:hi] = np.minimum(np.where(valid, S, np.inf).min(axis=1), 0.0)
    return WalkBatch(count=np.asarray(counts, dtype=np.int64), argmax_index=argmax_index, kill_time=kill_time, **out)


def _segment_cumsum(x: np.ndarray, counts: np.ndarray) -> np.ndarray:
    cs = np.cumsum(x)
    before = np.concatenate([[0.0], cs])[np.concatenate([[0], np.cumsum(counts)])[:-1]]
    return cs - np.repeat(before, counts)


def _competing_batch(model: LevyModel, params: InspectionParams, gen: np.random.Generator, n: int) -> WalkBatch:
    counts = np.zeros(n, dtype=np.int64)
    active = np.arange(n)
    while active.size:
        inspect = gen.random(active.size) >= params.q
        counts[active[inspect]] += 1
        active = active[inspect]
    taus = gen.exponential(1.0 / params.total_rate, int(counts.sum()))
    kill_tau = gen.exponential(1.0 / params.total_rate, n)
    epochs = _segment_cumsum(taus, counts)
    increments = sample_increments(model, gen, taus)
    batch = _summarize(counts, epochs, increments, np.zeros(n))
    return _with_kill_time(batch, batch.final_epoch + kill_tau)


def _direct_batch(model: LevyModel, params: InspectionParams, gen: np.random.Generator, n: int) -> WalkBatch:
    horizon = gen.exponential(1.0 / params.beta, n)
    counts = gen.poisson(params.omega * horizon).astype(np.int64)
    seg = np.repeat(np.arange(n), counts)
    u = gen.random(int(counts.sum()))
    u = u[np.lexsort((u, seg))]
    epochs = u * horizon[seg]
    gaps = epochs - np.concatenate([[0.0], epochs[:-1]])
    starts = np.concatenate([[0], np.cumsum(counts)])[:-1][counts > 0]
    gaps[starts] = epochs[starts]
    increments = sample_increments(model, gen, gaps)
    return _summarize(counts, epochs, increments, horizon)


def _with_kill_time(batch: WalkBatch, kill_time: np.ndarray) -> WalkBatch:
    fields = {k: getattr(batch, k) for k in WalkBatch.__dataclass_fields__}
    fields["kill_time"] = kill_time
    return WalkBatch(**fields)


_CONSTRUCTIONS = {"competing": _competing_batch, "direct": _direct_batch}


def sample_inspected_walks(
    model: LevyModel,
    params: InspectionParams,
    n: int,
    rng: RngLike,
    construction: str = "competing",
    threads: int = 1,
    chunk: int = DEFAULT_CHUNK,
) -> WalkBatch:
    """``n`` independent inspected walks, summarized."""
    try:
        build = _CONSTRUCTIONS[construction]
    except KeyError:
        raise ValueError(f"unknown construction {construction!r}") from None
    parts = run_chunks(lambda gen, size: build(model, params, gen, size), n, rng, threads, chunk)
    return WalkBatch.concat(parts)


def duality_pair(walk: InspectedWalk) -> tuple[float, float]:
    """``(S_N - max_k S_k, U_N - G_N)``; the first entry is never positive."""
    return walk.terminal - walk.max_value, walk.final_epoch - walk.argmax_epoch


def alternative_construction_check(
    model: LevyModel,
    params: InspectionParams,
    n: int,
    rng: RngLike,
    a: str = "competing",
    b: str = "direct",
    threshold: float = 0.01,
    threads: int = 1,
) -> TestReport:
    """Compare two walk constructions: KS on the maximum, chi-square on ``N``.

    The reported p-value is the smaller of the two, so the check passes only
    if both tests pass.
    """
    if n < 10_000:
        raise ValueError("cross-construction check needs n >= 1e4")
    stream = as_stream(rng)
    wa = sample_inspected_walks(model, params, n, stream.spawn(0), construction=a, threads=threads)
    wb = sample_inspected_walks(model, params, n, stream.spawn(1), construction=b, threads=threads)
    ks = ks_two_sample(wa.max_value, wb.max_value)
    chi = chi_square_two_sample(wa.count, wb.count)
    p = min(ks.p_value, chi.p_value)
    return TestReport(
        test_name=f"construction_{a}_vs_{b}",
        statistic=ks.statistic,
        p_value=p,
        threshold=threshold,
        n1=n,
        n2=n,
        seed=stream.seed,
        details={"ks_p": ks.p_value, "chi2_p": chi.p_value, "chi2_stat": chi.statistic},
    )
