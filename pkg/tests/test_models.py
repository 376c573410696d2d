import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levymax.errors import ConfigError, DegenerateDerivative, InvalidModel, UnsupportedSidedness
from levymax.models import (
    PRESETS,
    Kind,
    LevyModel,
    Side,
    cumulant_sn,
    exponent,
    inverse_derivatives,
    laplace_exponent_sp,
    model_from_config,
    right_inverse,
)
from levymax.paths import sample_increments

SP_CL = LevyModel.cp_up(2.0, 1.0, 1.0)
SN_BM = LevyModel.brownian(-1.0, 1.0)

MODELS = [
    (SP_CL, Side.SP),
    (LevyModel.cp_up(1.5, 2.0, 3.0, shape=2), Side.SP),
    (LevyModel.cp_down(2.0, 1.0, 1.0), Side.SN),
    (LevyModel.cp_down(0.5, 1.0, 2.0, shape=3), Side.SN),
    (SN_BM, Side.SN),
    (SN_BM, Side.SP),
    (LevyModel.brownian(0.7, 0.5), Side.SP),
]


# ---------------------------------------------------------------- examples


def test_sp_exponent_brownian_square():
    assert laplace_exponent_sp(LevyModel.brownian(0.0, math.sqrt(2.0)), 3.0).value == pytest.approx(9.0, rel=1e-14)


@pytest.mark.parametrize("model", [SP_CL, SN_BM, LevyModel.brownian(0.0, math.sqrt(2.0))])
def test_exponents_vanish_at_origin(model):
    if model.spectrally_positive:
        assert laplace_exponent_sp(model, 0.0).value == 0.0
    if model.spectrally_negative:
        assert cumulant_sn(model, 0.0).value == 0.0


def test_sp_exponent_compound_poisson():
    assert laplace_exponent_sp(SP_CL, 1.0).value == pytest.approx(1.5, rel=1e-14)


def test_sn_cumulant_brownian():
    assert cumulant_sn(SN_BM, 2.0).value == pytest.approx(0.0, abs=1e-15)
    assert cumulant_sn(SN_BM, 1.0).value == pytest.approx(-0.5, rel=1e-14)


def test_sidedness_is_enforced():
    with pytest.raises(UnsupportedSidedness):
        laplace_exponent_sp(LevyModel.cp_down(2.0, 1.0, 1.0), 1.0)
    with pytest.raises(UnsupportedSidedness):
        cumulant_sn(SP_CL, 1.0)


def test_right_inverse_examples():
    assert right_inverse(SN_BM, Side.SN, 1.0) == pytest.approx(1 + math.sqrt(3), rel=1e-13)
    assert right_inverse(SN_BM, Side.SN, 0.0) == pytest.approx(2.0, rel=1e-13)
    assert right_inverse(SP_CL, Side.SP, 1.0) == pytest.approx(1 / math.sqrt(2), rel=1e-13)
    assert right_inverse(SP_CL, Side.SP, 2.0) == pytest.approx((1 + math.sqrt(17)) / 4, rel=1e-13)


def test_right_inverse_at_zero_with_positive_mean_is_zero():
    # phi'(0) > 0 for sp_cl, so 0 is the only root at beta = 0
    assert right_inverse(SP_CL, Side.SP, 0.0) == 0.0


def test_inverse_derivative_examples():
    ev = inverse_derivatives(SN_BM, Side.SN, 1.0)
    assert ev.first_derivative == pytest.approx(1 / math.sqrt(3), rel=1e-12)
    ev = inverse_derivatives(LevyModel.brownian(0.0, math.sqrt(2.0)), Side.SP, 4.0)
    assert ev.value == pytest.approx(2.0, rel=1e-13)
    assert ev.first_derivative == pytest.approx(0.25, rel=1e-12)
    # psi = sqrt(beta): psi'' = -beta^{-3/2} / 4
    assert ev.second_derivative == pytest.approx(-1 / 32, rel=1e-12)


def test_degenerate_derivative():
    # zero-drift Brownian: the root at beta = 0 sits where the exponent is flat
    model = LevyModel.brownian(0.0, 1.0)
    with pytest.raises(ValueError):
        inverse_derivatives(model, Side.SN, 0.0)
    with pytest.raises(DegenerateDerivative):
        inverse_derivatives(model, Side.SN, 1e-30)


def _central(f, x, h):
    up, mid, down = f(x + h), f(x), f(x - h)
    return (up - down) / (2 * h), (up - 2 * mid + down) / h**2


@pytest.mark.parametrize("model,side", MODELS)
def test_inverse_derivatives_match_finite_differences(model, side):
    f = lambda b: right_inverse(model, side, b)  # noqa: E731
    for beta in np.linspace(0.2, 5.0, 10):
        ev = inverse_derivatives(model, side, beta)
        h = 1e-3 * beta
        (c1, c2), (f1, f2) = _central(f, beta, h), _central(f, beta, h / 2)
        # one Richardson step on the central differences
        d1, d2 = (4 * f1 - c1) / 3, (4 * f2 - c2) / 3
        assert d1 == pytest.approx(ev.first_derivative, rel=1e-6)
        assert d2 == pytest.approx(ev.second_derivative, rel=1e-6)


@pytest.mark.parametrize("model,side", MODELS)
def test_exponent_derivatives_match_finite_differences(model, side):
    for a in np.linspace(0.1, 4.0, 8):
        ev = exponent(model, side, a)
        h = 1e-4
        up, down = exponent(model, side, a + h).value, exponent(model, side, a - h).value
        assert (up - down) / (2 * h) == pytest.approx(ev.first_derivative, rel=1e-6, abs=1e-9)
        assert (up - 2 * ev.value + down) / h**2 == pytest.approx(ev.second_derivative, rel=1e-5, abs=1e-6)


# ---------------------------------------------------------------- invariants


@settings(max_examples=200, deadline=None)
@given(beta=st.floats(0.0, 1e6), which=st.integers(0, len(MODELS) - 1))
def test_round_trip(beta, which):
    model, side = MODELS[which]
    root = right_inverse(model, side, beta)
    assert root >= 0
    assert exponent(model, side, root).value == pytest.approx(beta, rel=1e-10, abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(b1=st.floats(0.0, 100.0), gap=st.floats(1e-3, 100.0), which=st.integers(0, len(MODELS) - 1))
def test_right_inverse_is_increasing(b1, gap, which):
    model, side = MODELS[which]
    assert right_inverse(model, side, b1) < right_inverse(model, side, b1 + gap)


@settings(max_examples=100, deadline=None)
@given(a=st.floats(0.0, 20.0), b=st.floats(0.0, 20.0), which=st.integers(0, len(MODELS) - 1))
def test_midpoint_convexity(a, b, which):
    model, side = MODELS[which]
    f = lambda x: exponent(model, side, x).value  # noqa: E731
    mid = f(0.5 * (a + b))
    assert mid <= 0.5 * (f(a) + f(b)) + 1e-9 * (1 + abs(mid))


def test_right_inverse_large_beta():
    root = right_inverse(SP_CL, Side.SP, 1e9)
    assert exponent(SP_CL, Side.SP, root).value == pytest.approx(1e9, rel=1e-12)


def test_slope_at_origin_matches_monte_carlo_mean():
    gen = np.random.Generator(np.random.Philox(7))
    y = sample_increments(SP_CL, gen, np.ones(400_000))
    slope = laplace_exponent_sp(SP_CL, 0.0).first_derivative
    assert slope == pytest.approx(2.0 - 1.0, rel=1e-14)
    se = y.std() / math.sqrt(len(y))
    assert abs(-y.mean() - slope) <= 4 * se


def test_model_variance_matches_second_derivative():
    for model, side in MODELS:
        assert exponent(model, side, 0.0).second_derivative == pytest.approx(model.variance(), rel=1e-12)


# ---------------------------------------------------------------- model construction


def test_model_validation():
    with pytest.raises(InvalidModel):
        LevyModel(Kind.CP_UP, drift=1.0, volatility=0.0, jump_rate=1.0, jump_mu=1.0)
    with pytest.raises(InvalidModel):
        LevyModel(Kind.BROWNIAN, drift=0.0, volatility=-1.0)
    with pytest.raises(InvalidModel):
        LevyModel(Kind.CP_DOWN, drift=1.0, volatility=0.0, jump_rate=1.0, jump_mu=0.0)


def test_sidedness_flags():
    assert SN_BM.spectrally_positive and SN_BM.spectrally_negative
    assert SP_CL.spectrally_positive and not SP_CL.spectrally_negative
    assert PRESETS["sn_cl"].spectrally_negative and not PRESETS["sn_cl"].spectrally_positive


def test_config_round_trip():
    for model in PRESETS.values():
        assert LevyModel.from_dict(model.to_dict()) == model
    assert model_from_config("sp_cl") == SP_CL
    with pytest.raises(ConfigError):
        model_from_config("nonexistent")
    with pytest.raises(ConfigError):
        model_from_config({"kind": "Stable", "drift": 0.0})
