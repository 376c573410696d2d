import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from levymax.errors import DegenerateCells, EmptySample
from levymax.rng import RngStream
from levymax.stats import (
    EmpiricalSample,
    TestReport,
    _ExactEnergy,
    _ProjectedEnergy,
    chi_square_pmf,
    chi_square_two_sample,
    distance_covariance_independence,
    energy_distance,
    energy_permutation_2d,
    ks_one_sample,
    ks_two_sample,
    null_rejection_rate,
    pooled_scale,
    z_check,
)


def _gen(seed):
    return np.random.Generator(np.random.Philox(seed))


# ---------------------------------------------------------------- reports and samples


def test_report_pass_rule():
    assert TestReport("t", 1.0, 0.5, 0.01).passed
    assert not TestReport("t", 1.0, 0.005, 0.01).passed
    assert not TestReport("t", 1.0, 0.01, 0.01).passed
    # error-type reports: statistic against threshold
    assert TestReport("t", 1e-12, None, 1e-10).passed
    assert not TestReport("t", 1e-9, None, 1e-10).passed


def test_report_serializes():
    d = TestReport("t", 1.0, 0.5, 0.01, 10, 20, 7, {"k": 1}).to_dict()
    assert json.loads(json.dumps(d)) == d
    assert d["passed"] is True and d["seed"] == 7


def test_empirical_sample():
    s = EmpiricalSample([3.0, 1.0, 2.0, 2.0])
    assert s.sorted.tolist() == [1.0, 2.0, 2.0, 3.0]
    assert s.ecdf([0.5, 2.0, 3.0]).tolist() == [0.0, 0.75, 1.0]
    assert s.mean() == 2.0
    with pytest.raises(EmptySample):
        EmpiricalSample([])


# ---------------------------------------------------------------- KS


def test_ks_identical_samples():
    a = _gen(0).normal(size=1000)
    rep = ks_two_sample(a, a)
    assert rep.statistic == 0 and rep.p_value == 1.0


def test_ks_detects_shift():
    g = _gen(1)
    assert ks_two_sample(g.normal(size=10_000), g.normal(5, 1, 10_000)).p_value < 1e-6


def test_ks_same_law():
    g = _gen(2)
    assert ks_two_sample(g.exponential(size=100_000), g.exponential(size=100_000)).p_value > 0.01


def test_ks_empty():
    with pytest.raises(EmptySample):
        ks_two_sample([], [1.0])


def test_ks_two_sample_matches_scipy():
    g = _gen(3)
    a, b = g.normal(size=3000), g.normal(0.05, 1, 2000)
    ours = ks_two_sample(a, b)
    ref = sps.ks_2samp(a, b, method="asymp")
    assert ours.statistic == pytest.approx(ref.statistic, rel=1e-12)
    # scipy's asymptotic variant uses a finite-sample correction; verdicts agree
    assert ours.p_value == pytest.approx(ref.pvalue, abs=0.01)


def test_ks_one_sample_matches_scipy():
    x = _gen(4).exponential(size=5000)
    ours = ks_one_sample(x, lambda t: 1 - np.exp(-t))
    ref = sps.kstest(x, "expon", method="asymp")
    assert ours.statistic == pytest.approx(ref.statistic, rel=1e-12)
    assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-3)


def test_ks_one_sample_with_atom():
    g = _gen(5)
    x = np.where(g.random(50_000) < 0.4, 0.0, g.exponential(size=50_000))
    cdf = lambda t: np.where(t < 0, 0.0, 0.4 + 0.6 * (1 - np.exp(-np.maximum(t, 0))))  # noqa: E731
    assert ks_one_sample(x, cdf).p_value > 0.01
    wrong = lambda t: np.where(t < 0, 0.0, 0.35 + 0.65 * (1 - np.exp(-np.maximum(t, 0))))  # noqa: E731
    assert ks_one_sample(x, wrong).p_value < 1e-6


def test_ks_two_sample_with_atoms():
    g = _gen(6)
    a = np.where(g.random(50_000) < 0.5, 0.0, g.exponential(size=50_000))
    b = np.where(g.random(50_000) < 0.5, 0.0, g.exponential(size=50_000))
    c = np.where(g.random(50_000) < 0.45, 0.0, g.exponential(size=50_000))
    assert ks_two_sample(a, b).passed
    assert ks_two_sample(a, c).p_value < 1e-6


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=50), st.lists(st.integers(0, 5), min_size=1, max_size=50))
def test_ks_statistic_is_sup_distance(a, b):
    grid = np.arange(-1, 7)
    fa = np.array([np.mean(np.array(a) <= t) for t in grid])
    fb = np.array([np.mean(np.array(b) <= t) for t in grid])
    assert ks_two_sample(a, b).statistic == pytest.approx(np.abs(fa - fb).max(), abs=1e-15)


# ---------------------------------------------------------------- chi-square


def test_chi_square_proportional_counts():
    rep = chi_square_pmf([50, 30, 20], [0.5, 0.3, 0.2])
    assert rep.statistic == pytest.approx(0.0, abs=1e-12) and rep.p_value == pytest.approx(1.0)


def _geometric_counts(q, n, seed):
    draws = _gen(seed).geometric(q, n) - 1
    return np.bincount(draws)


def _geometric_pmf(q, length=200):
    return q * (1 - q) ** np.arange(length)


def test_chi_square_geometric_calibration():
    assert chi_square_pmf(_geometric_counts(0.5, 1_000_000, 7), _geometric_pmf(0.5)).p_value > 0.01


def test_chi_square_wrong_law():
    assert chi_square_pmf(_geometric_counts(0.5, 100_000, 8), _geometric_pmf(0.25)).p_value < 1e-6


def test_chi_square_degenerate():
    with pytest.raises(DegenerateCells):
        chi_square_pmf([10], [1.0])
    with pytest.raises(ValueError):
        chi_square_pmf([10, 10], [0.7, 0.7])


def test_chi_square_matches_scipy_without_merging():
    obs = np.array([30, 50, 20])
    pmf = np.array([0.25, 0.5, 0.25])
    ours = chi_square_pmf(obs, pmf)
    ref = sps.chisquare(obs, pmf * obs.sum())
    assert ours.statistic == pytest.approx(ref.statistic, rel=1e-12)
    assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-10)


def test_chi_square_two_sample():
    g = _gen(9)
    assert chi_square_two_sample(g.poisson(2, 50_000), g.poisson(2, 50_000)).passed
    assert chi_square_two_sample(g.poisson(2, 50_000), g.poisson(2.1, 50_000)).p_value < 1e-6
    assert chi_square_two_sample(np.zeros(100, int), np.zeros(50, int)).p_value == 1.0


# ---------------------------------------------------------------- energy


def test_energy_identical_clouds():
    a = _gen(10).normal(size=(300, 2))
    rep = energy_permutation_2d(a, a, 200, RngStream(0))
    assert rep.statistic == pytest.approx(0.0, abs=1e-12)
    assert rep.p_value == 1.0


def test_energy_detects_scale_change():
    a = _gen(11).exponential(size=(5000, 2))
    b = a * np.array([1.0, 2.0])
    assert energy_permutation_2d(a, b, 200, RngStream(1)).p_value < 0.01


def test_energy_same_law_large():
    g = _gen(12)
    a, b = g.exponential(size=(20_000, 2)), g.exponential(size=(20_000, 2))
    rep = energy_permutation_2d(a, b, 200, RngStream(2))
    assert rep.details["method"] == "projected"
    assert rep.p_value > 0.01


def test_energy_needs_enough_permutations():
    a = _gen(13).normal(size=(50, 2))
    with pytest.raises(ValueError):
        energy_permutation_2d(a, a, 10)


def test_exact_energy_matches_brute_force():
    g = _gen(14)
    a, b = g.normal(size=(200, 2)), g.normal(0.3, 1.0, size=(150, 2))
    pooled = np.vstack([a, b])
    labels = np.zeros((350, 1), dtype=np.int8)
    labels[:200] = 1
    assert _ExactEnergy(pooled)(labels, 200, 150)[0] == pytest.approx(energy_distance(a, b), rel=1e-12)


def test_projected_energy_converges_to_exact():
    g = _gen(15)
    a, b = g.normal(size=(300, 2)), g.normal(size=(300, 2)) + [0.3, 0.0]
    pooled = np.vstack([a, b])
    labels = np.zeros((600, 1), dtype=np.int8)
    labels[:300] = 1
    exact = energy_distance(a, b)
    assert _ProjectedEnergy(pooled, 64)(labels, 300, 300)[0] == pytest.approx(exact, rel=1e-3)
    assert _ProjectedEnergy(pooled, 1024)(labels, 300, 300)[0] == pytest.approx(exact, rel=1e-6)


def test_exact_and_projected_p_values_agree_in_verdict():
    g = _gen(16)
    a, b = g.normal(size=(400, 2)), g.normal(size=(400, 2)) + [0.4, 0.0]
    exact = energy_permutation_2d(a, b, 200, RngStream(3))
    proj = energy_permutation_2d(a, b, 200, RngStream(3), directions=64)
    assert exact.details["method"] == "exact" and proj.details["method"] == "projected"
    assert exact.passed == proj.passed is False


def test_pooled_scale_with_atom():
    x = np.column_stack([np.r_[np.zeros(90), np.ones(10)], np.arange(100.0)])
    s = pooled_scale(x)
    assert s[0] == pytest.approx(0.1) and s[1] == 25.0
    assert pooled_scale(np.zeros((5, 1))).tolist() == [1.0]


# ---------------------------------------------------------------- distance covariance


def test_dcov_independent():
    g = _gen(17)
    assert distance_covariance_independence(g.normal(size=400), g.normal(size=400), rng=RngStream(4)).p_value > 0.01


def test_dcov_identical():
    x = _gen(18).normal(size=400)
    assert distance_covariance_independence(x, x, rng=RngStream(5)).p_value < 0.01


def test_dcov_constant():
    x = _gen(19).normal(size=200)
    rep = distance_covariance_independence(x, np.ones(200), rng=RngStream(6))
    assert rep.statistic == pytest.approx(0.0, abs=1e-15)
    assert rep.p_value == 1.0


def test_dcov_detects_nonlinear_dependence():
    x = _gen(20).normal(size=400)
    assert distance_covariance_independence(x, x**2, rng=RngStream(7)).p_value < 0.01


# ---------------------------------------------------------------- z check and calibration


def test_z_check():
    assert z_check(1.0, 1.0, 0.1).passed
    assert z_check(1.39, 1.0, 0.1).passed
    assert not z_check(1.41, 1.0, 0.1).passed
    assert not z_check(1.0, 2.0, 0.0).passed
    assert z_check(1.0, 1.0, 0.0).passed


def test_ks_null_rejection_rate():
    def run_once(gen):
        return ks_two_sample(gen.normal(size=500), gen.normal(size=500))

    rep = null_rejection_rate(run_once, 200, RngStream(8), name="ks_cal")
    assert rep.passed, rep


def test_rejection_rate_detects_miscalibration():
    def run_once(gen):
        return ks_two_sample(gen.normal(size=500), gen.normal(0.2, 1.0, 500))

    assert not null_rejection_rate(run_once, 200, RngStream(9)).passed


def test_determinism():
    g = _gen(21)
    a, b = g.normal(size=(300, 2)), g.normal(size=(300, 2))
    r1 = energy_permutation_2d(a, b, 200, RngStream(10))
    r2 = energy_permutation_2d(a, b, 200, RngStream(10))
    assert r1 == r2
    assert math.isfinite(r1.statistic)
