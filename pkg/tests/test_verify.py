import math

import numpy as np
import pytest

from levymax.errors import ConfigError, InvalidModel, InvalidProbability, TruncationTooCoarse
from levymax.inspection import InspectionParams
from levymax.models import PRESETS, LevyModel, Side, right_inverse
from levymax.rng import RngStream
from levymax.stats import TestReport
from levymax.transforms import moments_inspected
from levymax.verify import (
    ACCEPTANCE,
    Scenario,
    bankruptcy_times,
    calibration_report,
    cascade_samples,
    combine,
    expect_rejection,
    parisian_ruin_times,
    run_acceptance,
    run_scenarios,
    verify_cascade,
    verify_factorization,
    verify_fixed_point_scenario,
    verify_frullani,
    verify_geometric_pmf,
    verify_geometric_sum,
    verify_moments,
    verify_parisian,
    verify_pathwise,
    verify_sn_marginal,
    verify_theorem1,
    verify_theorem2,
)

SP_CL = PRESETS["sp_cl"]
SN_BM = PRESETS["sn_bm"]


def scn(name, model=SP_CL, beta=0.5, omega=1.0, n=20_000, seed=42, **extras):
    return Scenario(name, model, InspectionParams(beta, omega), n, seed, extras)


# ---------------------------------------------------------------- scenario plumbing


def test_scenario_validation():
    with pytest.raises(ValueError):
        scn("small", n=999)
    with pytest.raises(ConfigError):
        Scenario.from_dict({"name": "x", "model": "sp_cl", "beta": 1.0})
    with pytest.raises(ConfigError):
        Scenario.from_dict({"name": "x", "model": "sp_cl", "beta": -1.0, "omega": 1.0, "sample_size": 5000, "seed": 1})


def test_scenario_round_trip():
    s = scn("round", factor=3.0)
    assert Scenario.from_dict(s.to_dict()) == s
    assert Scenario.from_dict(s.to_dict(), seed=7).seed == 7


def test_scenario_streams_are_distinct():
    a, b = scn("a"), scn("b")
    draws = {
        (s.name, role): s.stream(role).generator().random()
        for s in (a, b)
        for role in range(3)
    }
    assert len(set(draws.values())) == 6
    assert a.stream(1).generator().random() == draws[("a", 1)]


def test_combine_and_expect_rejection():
    ok = TestReport("ok", 0.1, 0.5, 0.01)
    bad = TestReport("bad", 3.0, 0.001, 0.01)
    both = combine("both", [ok, bad], seed=3)
    assert not both.passed and both.statistic == 1 and both.p_value is None
    assert [p["test_name"] for p in both.details["parts"]] == ["ok", "bad"]
    assert combine("one", [ok]).passed
    assert expect_rejection(bad).passed
    assert not expect_rejection(ok).passed


# ---------------------------------------------------------------- theorems


def test_theorem1_passes():
    assert verify_theorem1(scn("t1")).passed


def test_theorem1_tiny_omega():
    assert verify_theorem1(scn("t1_tiny", omega=1e-6)).passed


def test_theorem1_negative_control_rejects():
    assert not verify_theorem1(scn("t1_ctrl"), negative_control=True).passed


def test_theorem1_brownian():
    assert verify_theorem1(scn("t1_bm", model=SN_BM, beta=1.0, omega=1.0, cells=64)).passed


def test_theorem2_passes_and_control_rejects():
    s = scn("t2", n=2000, permutations=200)
    assert verify_theorem2(s).passed
    assert not verify_theorem2(s, negative_control=True).passed


def test_theorem2_tiny_omega():
    assert verify_theorem2(scn("t2_tiny", omega=1e-6, n=2000)).passed


def test_theorem2_needs_exact_argmax():
    with pytest.raises(InvalidModel):
        verify_theorem2(scn("t2_bm", model=SN_BM))


def test_reports_are_reproducible():
    a = verify_theorem1(scn("rep", n=5000))
    b = verify_theorem1(scn("rep", n=5000))
    assert a.to_dict() == b.to_dict()
    assert a.seed == 42


# ---------------------------------------------------------------- cascade


def test_cascade_passes():
    assert verify_cascade(scn("cascade", n=20_000, factor=2.0, levels=20)).passed


def test_cascade_coarse_truncation_raises():
    with pytest.raises(TruncationTooCoarse):
        verify_cascade(scn("coarse", factor=2.0, levels=1))


def test_cascade_argument_checks():
    with pytest.raises(ValueError):
        cascade_samples(SP_CL, 0.5, 1.0, 5, 100, 0)
    with pytest.raises(ValueError):
        cascade_samples(SP_CL, 0.5, 2.0, 0, 100, 0)


def test_cascade_level_means_decay():
    _, means = cascade_samples(SP_CL, 0.5, 2.0, 12, 20_000, RngStream(1))
    assert means[0] > means[5] > means[-1] >= 0


# ---------------------------------------------------------------- geometric laws


def test_geometric_pmf_check():
    assert verify_geometric_pmf(InspectionParams(1.0, 3.0), 200_000, RngStream(2)).passed


def test_geometric_sum():
    assert verify_geometric_sum(0.5, 0.5, 1_000_000, RngStream(3)).passed
    assert verify_geometric_sum(1.0, 0.4, 100_000, RngStream(4)).passed
    assert verify_geometric_sum(0.5, 0.5, 100_000, RngStream(5), null_q=0.5).p_value < 1e-6
    with pytest.raises(InvalidProbability):
        verify_geometric_sum(0.0, 0.5, 10, 0)


def test_geometric_sum_fully_degenerate():
    assert verify_geometric_sum(1.0, 1.0, 1000, RngStream(6)).passed


# ---------------------------------------------------------------- spectrally negative marginal and moments


def test_sn_marginal():
    rep = verify_sn_marginal(scn("sn", model=SN_BM, beta=1.0, omega=1.0, n=200_000))
    assert rep.passed, rep.details


def test_sn_marginal_large_omega():
    s = scn("sn_big", model=SN_BM, beta=1.0, omega=1e3, n=20_000)
    rep = verify_sn_marginal(s)
    atom = right_inverse(SN_BM, Side.SN, 1.0) / right_inverse(SN_BM, Side.SN, 1001.0)
    assert atom < 0.07
    assert rep.details["parts"][0]["details"]["target"] == pytest.approx(atom, rel=1e-14)
    assert rep.passed


def test_sn_marginal_needs_sn_model():
    with pytest.raises(InvalidModel):
        verify_sn_marginal(scn("sp", model=SP_CL))


def test_moments_sp_and_sn():
    assert verify_moments(scn("m_sp", beta=1.0, omega=1.0, n=200_000)).passed
    assert verify_moments(scn("m_sn", model=SN_BM, beta=1.0, omega=1.0, n=200_000)).passed


def test_sn_covariance_is_positive():
    m = moments_inspected(SN_BM, Side.SN, 1.0, 1.0)
    assert m.covariance > 0
    assert m.covariance == pytest.approx(0.0346451709, rel=1e-8)


def test_moments_detect_wrong_model():
    # walks of a perturbed model against the sp_cl closed forms must be rejected
    from levymax.inspection import sample_inspected_walks
    from levymax.stats import z_check

    walks = sample_inspected_walks(LevyModel.cp_up(2.0, 1.2, 1.0), InspectionParams(1.0, 1.0), 200_000, RngStream(9))
    x = walks.max_value
    target = moments_inspected(SP_CL, Side.SP, 1.0, 1.0).mean_max
    assert not z_check(x.mean(), target, x.std() / math.sqrt(len(x))).passed


# ---------------------------------------------------------------- Parisian ruin


def test_parisian_matches_bankruptcy():
    rep = verify_parisian(scn("parisian", beta=1e-2, omega=1.0, n=20_000, horizon_rate=1e-2))
    assert rep.passed, rep.details


def test_parisian_drift_dominant():
    model = LevyModel.cp_up(50.0, 1.0, 1.0)
    rep = verify_parisian(scn("safe", model=model, beta=1e-2, omega=1.0, n=5000, horizon_rate=1e-2))
    assert rep.passed
    freq = rep.details["parts"][0]["details"]
    assert freq["parisian"] < 0.02 and freq["bankruptcy"] < 0.02


def test_parisian_fast_clock():
    # a short horizon keeps the rate-(lambda + omega) event stream affordable
    rep = verify_parisian(scn("fast_clock", beta=1.0, omega=1e3, n=10_000, horizon_rate=1.0))
    assert rep.passed, rep.details


def _classical_ruin_times(n, horizon_rate, seed):
    # event loop: premium rate 2, exp(1) claims at rate 1, capital 0
    gen = np.random.Generator(np.random.Philox(seed))
    out = np.full(n, np.inf)
    for i in range(n):
        horizon = gen.exponential(1 / horizon_rate)
        t, level = 0.0, 0.0
        while True:
            gap = gen.exponential(1.0)
            if t + gap > horizon:
                break
            t += gap
            level += 2.0 * gap - gen.exponential(1.0)
            if level < 0:
                out[i] = t
                break
    return out


def test_fast_clock_approaches_classical_ruin():
    from levymax.stats import ks_two_sample

    classical = _classical_ruin_times(10_000, 1.0, 10)
    inspected = bankruptcy_times(SP_CL, 1e3, 1.0, 10_000, RngStream(7))
    parisian = parisian_ruin_times(SP_CL, 1e3, 1.0, 10_000, RngStream(8))
    for times in (inspected, parisian):
        pa, pb = np.isfinite(classical).mean(), np.isfinite(times).mean()
        assert abs(pa - pb) <= 3 * math.sqrt((pa * (1 - pa) + pb * (1 - pb)) / 10_000)
        assert ks_two_sample(classical[np.isfinite(classical)], times[np.isfinite(times)]).passed


def test_parisian_needs_claims_model():
    with pytest.raises(InvalidModel):
        parisian_ruin_times(SN_BM, 1.0, 1e-2, 100, 0)
    with pytest.raises(ValueError):
        bankruptcy_times(SP_CL, 0.0, 1e-2, 100, 0)


# ---------------------------------------------------------------- fixed point and deterministic checks


def test_fixed_point_scenario():
    assert verify_fixed_point_scenario(scn("fp", n=50_000)).passed


def test_pathwise_report():
    rep = verify_pathwise(500, RngStream(8))
    assert rep.passed and rep.statistic == 0


def test_factorization_report():
    assert verify_factorization(SP_CL, Side.SP, 1.0, 1.0, "f").statistic <= 1e-10
    assert verify_factorization(SN_BM, Side.SN, 0.3, 2.0, "f").passed


def test_frullani_report():
    assert verify_frullani().passed


def test_calibration_subset():
    rep = calibration_report(1, 200, tests=["ks_two_sample", "z_check"])
    assert rep.passed
    for part in rep.details["parts"]:
        assert 0.01 <= part["statistic"] <= 0.12


# ---------------------------------------------------------------- runners


def test_run_scenarios_sorted_and_thread_invariant():
    items = [("theorem1", scn("b_t1", n=5000)), ("fixed_point", scn("a_fp", n=5000))]
    one = run_scenarios(items, threads=1)
    two = run_scenarios(items, threads=2)
    assert [r.test_name for r in one] == ["a_fp:fixed_point", "b_t1:theorem1"]
    assert [r.to_dict() for r in one] == [r.to_dict() for r in two]


def test_run_scenarios_rejects_bad_input():
    with pytest.raises(ConfigError):
        run_scenarios([("theorem1", scn("dup")), ("theorem1", scn("dup"))])
    with pytest.raises(ConfigError):
        run_scenarios([("nope", scn("x"))])


def test_run_acceptance_subset_and_unknown():
    reps = run_acceptance(42, 1, only=["c03_frullani", "c02_transform_factorization"])
    assert [r.test_name for r in reps] == ["c02_transform_factorization", "c03_frullani"]
    assert all(r.passed for r in reps)
    with pytest.raises(ConfigError):
        run_acceptance(42, 1, only=["c99"])
    assert len(ACCEPTANCE) == 12
