"""Two-sample and goodness-of-fit tests used to check equality in law.

All tests are deterministic given their inputs (and, for permutation tests,
the random stream). The energy test standardizes each coordinate by a pooled
robust scale so that space and time coordinates weigh comparably.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy import special
from scipy import stats as sps

from .errors import DegenerateCells, EmptySample
from .rng import RngLike, as_generator

__all__ = [
    "TestReport",
    "EmpiricalSample",
    "ks_two_sample",
    "ks_one_sample",
    "chi_square_pmf",
    "chi_square_two_sample",
    "energy_distance",
    "energy_permutation_2d",
    "distance_covariance_independence",
    "z_check",
    "tolerance_check",
    "pooled_scale",
    "null_rejection_rate",
]


@dataclass
class TestReport:
    """Outcome of one verification.

    For a hypothesis test ``passed`` is ``p_value > threshold``. When
    ``p_value`` is ``None`` the statistic is an error measure and the check
    passes when it does not exceed ``threshold``.
    """

    __test__ = False  # not a pytest class

    test_name: str
    statistic: float
    p_value: float | None
    threshold: float
    n1: int = 0
    n2: int = 0
    seed: int | None = None
    details: dict[str, Any] = field(default_factory=dict)
    passed: bool | None = None

    def __post_init__(self) -> None:
        self.statistic = float(self.statistic)
        if self.p_value is not None:
            self.p_value = float(min(1.0, max(0.0, self.p_value)))
        if self.passed is None:
            if self.p_value is not None:
                self.passed = self.p_value > self.threshold
            else:
                self.passed = bool(self.statistic <= self.threshold)
        self.passed = bool(self.passed)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def renamed(self, name: str, **details: Any) -> "TestReport":
        return TestReport(
            name, self.statistic, self.p_value, self.threshold, self.n1, self.n2, self.seed,
            {**self.details, **details}, self.passed,
        )


class EmpiricalSample:
    """Observations with cached sorting for ECDF queries."""

    def __init__(self, values: Sequence[float] | np.ndarray):
        arr = np.asarray(values, dtype=float)
        if arr.size == 0:
            raise EmptySample("empirical sample is empty")
        self.values = arr
        self._sorted: np.ndarray | None = None

    @property
    def sorted(self) -> np.ndarray:
        if self._sorted is None:
            if self.values.ndim != 1:
                raise ValueError("sorting is defined for 1D samples only")
            self._sorted = np.sort(self.values)
        return self._sorted

    def __len__(self) -> int:
        return len(self.values)

    def ecdf(self, x) -> np.ndarray:
        return np.searchsorted(self.sorted, x, side="right") / len(self)

    def mean(self) -> float:
        return float(self.values.mean())

    def stderr(self) -> float:
        return float(self.values.std(ddof=1) / math.sqrt(len(self)))


def _as_1d(x) -> np.ndarray:
    if isinstance(x, EmpiricalSample):
        x = x.values
    arr = np.asarray(x, dtype=float).ravel()
    if arr.size == 0:
        raise EmptySample("empty sample")
    return arr


def ks_two_sample(a, b, threshold: float = 0.01, name: str = "ks_two_sample") -> TestReport:
    """Two-sided KS test with the asymptotic Kolmogorov p-value.

    ECDFs are evaluated right-continuously at every pooled point, so atoms
    are handled correctly; the asymptotic p-value is conservative with ties.
    """
    xa, xb = np.sort(_as_1d(a)), np.sort(_as_1d(b))
    n, m = len(xa), len(xb)
    grid = np.concatenate([xa, xb])
    d = np.max(np.abs(np.searchsorted(xa, grid, "right") / n - np.searchsorted(xb, grid, "right") / m))
    en = n * m / (n + m)
    p = 1.0 if d == 0 else float(special.kolmogorov(math.sqrt(en) * d))
    return TestReport(name, d, p, threshold, n, m)


def ks_one_sample(x, cdf: Callable[[np.ndarray], np.ndarray], threshold: float = 0.01, name: str = "ks_one_sample") -> TestReport:
    """One-sample KS test against a CDF (asymptotic p-value).

    The CDF's left limit is taken one float below each point, so laws with
    atoms at representable values are handled exactly.
    """
    xs = np.sort(_as_1d(x))
    n = len(xs)
    f = np.asarray(cdf(xs), dtype=float)
    f_left = np.asarray(cdf(np.nextafter(xs, -np.inf)), dtype=float)
    i = np.arange(1, n + 1)
    d = max(float(np.max(i / n - f)), float(np.max(f_left - (i - 1) / n)), 0.0)
    p = float(special.kolmogorov(math.sqrt(n) * d))
    return TestReport(name, d, p, threshold, n)


def _merge_cells(expected: np.ndarray, minimum: float) -> list[tuple[int, int]]:
    groups: list[tuple[int, int]] = []
    start, acc = 0, 0.0
    for i, e in enumerate(expected):
        acc += e
        if acc >= minimum:
            groups.append((start, i + 1))
            start, acc = i + 1, 0.0
    if start < len(expected):
        if groups:
            groups[-1] = (groups[-1][0], len(expected))
        else:
            groups.append((start, len(expected)))
    return groups


def chi_square_pmf(
    observed_counts,
    expected_pmf,
    tail_merge_min: int = 5,
    threshold: float = 0.01,
    name: str = "chi_square_pmf",
) -> TestReport:
    """Pearson goodness-of-fit of category counts ``0, 1, 2, ...`` to a pmf.

    Mass missing from ``expected_pmf`` becomes a tail cell that also absorbs
    observations beyond its support. Cells with expected count below
    ``tail_merge_min`` are merged with their neighbours.
    """
    obs = np.asarray(observed_counts, dtype=float)
    pmf = np.asarray(expected_pmf, dtype=float)
    if np.any(pmf < 0):
        raise ValueError("pmf entries must be nonnegative")
    missing = 1.0 - pmf.sum()
    if missing < -1e-9:
        raise ValueError("pmf sums to more than one")
    total = obs.sum()
    if total <= 0:
        raise EmptySample("no observations")
    L = len(pmf)
    o = np.zeros(L + 1)
    o[: min(L, len(obs))] = obs[:L]
    o[L] = obs[L:].sum()
    p = np.append(pmf, max(missing, 0.0))
    if p[-1] <= 1e-12 and o[-1] == 0:
        o, p = o[:-1], p[:-1]
    e = total * p
    groups = _merge_cells(e, tail_merge_min)
    if len(groups) < 2:
        raise DegenerateCells("fewer than two cells after merging")
    og = np.array([o[a:b].sum() for a, b in groups])
    eg = np.array([e[a:b].sum() for a, b in groups])
    stat = float(np.sum((og - eg) ** 2 / eg))
    dof = len(groups) - 1
    pval = float(sps.chi2.sf(stat, dof))
    return TestReport(name, stat, pval, threshold, int(total), details={"dof": dof})


def chi_square_two_sample(a, b, tail_merge_min: int = 5, threshold: float = 0.01, name: str = "chi_square_two_sample") -> TestReport:
    """Chi-square homogeneity test for two samples of nonnegative integers."""
    xa = np.asarray(a, dtype=np.int64).ravel()
    xb = np.asarray(b, dtype=np.int64).ravel()
    if xa.size == 0 or xb.size == 0:
        raise EmptySample("empty sample")
    width = int(max(xa.max(), xb.max())) + 1
    ca = np.bincount(xa, minlength=width).astype(float)
    cb = np.bincount(xb, minlength=width).astype(float)
    na, nb = ca.sum(), cb.sum()
    pooled = ca + cb
    # merge on the smaller expected count of the two rows
    groups = _merge_cells(pooled * min(na, nb) / (na + nb), tail_merge_min)
    if len(groups) < 2:
        if len(np.unique(np.concatenate([xa, xb]))) == 1:
            return TestReport(name, 0.0, 1.0, threshold, len(xa), len(xb), details={"dof": 0})
        raise DegenerateCells("fewer than two cells after merging")
    ga = np.array([ca[s:t].sum() for s, t in groups])
    gb = np.array([cb[s:t].sum() for s, t in groups])
    gp = ga + gb
    ea, eb = gp * na / (na + nb), gp * nb / (na + nb)
    stat = float(np.sum((ga - ea) ** 2 / ea) + np.sum((gb - eb) ** 2 / eb))
    dof = len(groups) - 1
    return TestReport(name, stat, float(sps.chi2.sf(stat, dof)), threshold, len(xa), len(xb), details={"dof": dof})


def pooled_scale(x: np.ndarray) -> np.ndarray:
    """Per-column robust scale: MAD, else mean absolute deviation, else 1.

    Samples with a large atom have zero MAD, hence the fallbacks.
    """
    med = np.median(x, axis=0)
    dev = np.abs(x - med)
    scale = np.median(dev, axis=0)
    fallback = dev.mean(axis=0)
    scale = np.where(scale > 0, scale, fallback)
    return np.where(scale > 0, scale, 1.0)


def _as_2d(x) -> np.ndarray:
    if isinstance(x, EmpiricalSample):
        x = x.values
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.shape[0] == 0:
        raise EmptySample("empty sample")
    return arr


def energy_distance(a, b) -> float:
    """Energy distance ``2E|X-Y| - E|X-X'| - E|Y-Y'|`` (V-statistic, brute force)."""
    xa, xb = _as_2d(a), _as_2d(b)

    def mean_dist(u, v):
        return float(np.sqrt(((u[:, None, :] - v[None, :, :]) ** 2).sum(-1)).mean())

    return 2 * mean_dist(xa, xb) - mean_dist(xa, xa) - mean_dist(xb, xb)


EXACT_LIMIT = 2000
DIRECTIONS = 64


class _ExactEnergy:
    """Energy statistic from the full distance matrix."""

    def __init__(self, pooled: np.ndarray):
        diff = pooled[:, None, :] - pooled[None, :, :]
        self.D = np.sqrt((diff**2).sum(-1))

    def __call__(self, labels: np.ndarray, n: int, m: int) -> np.ndarray:
        x = labels.astype(float)
        y = 1.0 - x
        Dx, Dy = self.D @ x, self.D @ y
        s_aa = (x * Dx).sum(0)
        s_bb = (y * Dy).sum(0)
        s_ab = (x * Dy).sum(0)
        return 2.0 * s_ab / (n * m) - s_aa / n**2 - s_bb / m**2


class _ProjectedEnergy:
    """Energy statistic through its 1D projection representation.

    In the plane ``|z| = 1/4 * integral over [0, 2 pi) of |<u(t), z>| dt``, so
    the energy distance is ``(pi / 2)`` times the direction-averaged 1D energy
    distance ``2 * integral (F - G)^2``. The angle integral uses the periodic
    trapezoid rule with ``directions`` nodes on ``[0, pi)``. The sort order of
    each projection is label-free, so each permutation costs O(N) per direction.
    """

    def __init__(self, pooled: np.ndarray, directions: int):
        theta = np.arange(directions) * np.pi / directions
        proj = pooled @ np.vstack([np.cos(theta), np.sin(theta)])
        self.order = np.argsort(proj, axis=0, kind="stable")
        srt = np.take_along_axis(proj, self.order, axis=0)
        self.gaps = np.diff(srt, axis=0)
        self.directions = directions

    def __call__(self, labels: np.ndarray, n: int, m: int) -> np.ndarray:
        N = labels.shape[0]
        rank = np.arange(1, N)[:, None]
        total = np.zeros(labels.shape[1])
        for k in range(self.directions):
            c = np.cumsum(labels[self.order[:, k]], axis=0, dtype=np.int64)[:-1]
            diff = c * (1.0 / n + 1.0 / m) - rank / m
            total += 2.0 * (diff**2 * self.gaps[:, k : k + 1]).sum(0)
        return (np.pi / 2.0) * total / self.directions


def energy_permutation_2d(
    a,
    b,
    permutations: int = 200,
    rng: RngLike = 0,
    threshold: float = 0.01,
    directions: int | None = None,
    name: str = "energy_permutation_2d",
) -> TestReport:
    """Permutation test on the energy distance between two point clouds.

    Coordinates are standardized by the pooled robust scale. Up to
    ``EXACT_LIMIT`` pooled points the statistic uses all pairwise distances;
    beyond that (or when ``directions`` is given) the projection form is used.
    ``p = (1 + #{perm >= observed}) / (permutations + 1)``.
    """
    if permutations < 100:
        raise ValueError("use at least 100 permutations")
    xa, xb = _as_2d(a), _as_2d(b)
    n, m = len(xa), len(xb)
    pooled = np.vstack([xa, xb])
    pooled = (pooled - np.median(pooled, axis=0)) / pooled_scale(pooled)
    N = n + m
    if directions is None and N <= EXACT_LIMIT:
        stat_fn = _ExactEnergy(pooled)
        method = "exact"
    else:
        stat_fn = _ProjectedEnergy(pooled, directions or DIRECTIONS)
        method = "projected"
    labels0 = np.zeros((N, 1), dtype=np.int8)
    labels0[:n] = 1
    observed = float(stat_fn(labels0, n, m)[0])
    gen = as_generator(rng)
    exceed = 0
    batch = 50
    done = 0
    while done < permutations:
        k = min(batch, permutations - done)
        labels = np.zeros((N, k), dtype=np.int8)
        for j in range(k):
            labels[gen.permutation(N)[:n], j] = 1
        stats_ = stat_fn(labels, n, m)
        # relative slack so exact ties with the observed value count
        exceed += int(np.sum(stats_ >= observed - 1e-12 * abs(observed)))
        done += k
    p = (1 + exceed) / (permutations + 1)
    return TestReport(name, observed, p, threshold, n, m, details={"permutations": permutations, "method": method})


def _double_centered(x: np.ndarray) -> np.ndarray:
    d = np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(-1))
    return d - d.mean(0, keepdims=True) - d.mean(1, keepdims=True) + d.mean()


def distance_covariance_independence(
    x,
    y,
    permutations: int = 200,
    rng: RngLike = 0,
    threshold: float = 0.01,
    name: str = "distance_covariance",
) -> TestReport:
    """Permutation test of independence with the squared distance covariance."""
    xa, ya = _as_2d(x), _as_2d(y)
    if len(xa) != len(ya):
        raise ValueError("paired samples must have equal length")
    n = len(xa)
    A, B = _double_centered(xa), _double_centered(ya)
    observed = float((A * B).mean())
    gen = as_generator(rng)
    exceed = 0
    tol = 1e-12 * max(abs(observed), np.abs(A).max() * np.abs(B).max())
    for _ in range(permutations):
        pi = gen.permutation(n)
        if (A * B[np.ix_(pi, pi)]).mean() >= observed - tol:
            exceed += 1
    p = (1 + exceed) / (permutations + 1)
    return TestReport(name, observed, p, threshold, n, n, details={"permutations": permutations})


def z_check(estimate: float, target: float, se: float, k: float = 4.0, name: str = "z_check", n: int = 0) -> TestReport:
    """Pass when ``|estimate - target| <= k * se``.

    Reported as a two-sided normal test so that ``passed`` agrees with
    ``p_value > threshold``.
    """
    if se <= 0:
        z = 0.0 if estimate == target else math.inf
    else:
        z = abs(estimate - target) / se
    p = float(2 * sps.norm.sf(z))
    return TestReport(
        name, z, p, float(2 * sps.norm.sf(k)), n,
        details={"estimate": float(estimate), "target": float(target), "se": float(se), "k": k},
    )


def tolerance_check(error: float, tolerance: float, name: str, **details: Any) -> TestReport:
    return TestReport(name, float(error), None, tolerance, details=details)


def null_rejection_rate(
    run_once: Callable[[np.random.Generator], TestReport],
    replications: int,
    rng: RngLike,
    level: float = 0.05,
    band: tuple[float, float] = (0.01, 0.12),
    name: str = "calibration",
) -> TestReport:
    """Rejection frequency of a test under its null, checked against ``band``."""
    gen = as_generator(rng)
    rejections = 0
    for _ in range(replications):
        rep = run_once(gen)
        if rep.p_value is not None and rep.p_value <= level:
            rejections += 1
    rate = rejections / replications
    ok = band[0] <= rate <= band[1]
    return TestReport(
        name, rate, None, band[1], replications,
        details={"level": level, "band": list(band)}, passed=ok,
    )
