"""Levy model parameterizations and their exponents.

Three families are supported, all with closed-form exponents:

* ``BrownianDrift``: ``Y(t) = drift * t + volatility * B(t)``. It has no jumps,
  so it is both spectrally positive and spectrally negative.
* ``CompoundPoissonDriftUp``: ``Y(t) = drift * t + sum of upward jumps`` with
  ``drift < 0``. No downward jumps (spectrally positive).
* ``CompoundPoissonDriftDown``: ``Y(t) = drift * t - sum of jumps`` with
  ``drift > 0``. No upward jumps (spectrally negative).

Jump sizes are Erlang(``jump_shape``, ``jump_mu``), i.e. sums of ``jump_shape``
exponentials with rate ``jump_mu``.

For a spectrally positive model the Laplace exponent is
``phi(a) = log E exp(-a Y(1))``; for a spectrally negative model the cumulant is
``Phi(a) = log E exp(a Y(1))``. Both have the common shape::

    f(a) = s * a + sigma**2 * a**2 / 2 + lam * ((mu / (mu + a))**k - 1)

with ``s = -drift`` (SP) or ``s = +drift`` (SN). The right-inverse of ``f`` is
its largest nonnegative root of ``f(a) = beta``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, Mapping

from .errors import (
    ConfigError,
    DegenerateDerivative,
    InvalidModel,
    NoRoot,
    NonConvergence,
    UnsupportedSidedness,
)

__all__ = [
    "Kind",
    "Side",
    "LevyModel",
    "ExponentEval",
    "laplace_exponent_sp",
    "cumulant_sn",
    "exponent",
    "right_inverse",
    "inverse_derivatives",
    "PRESETS",
    "model_from_config",
]

ROOT_TOL = 1e-12
MAX_ITER = 500


class Kind(str, enum.Enum):
    BROWNIAN = "BrownianDrift"
    CP_UP = "CompoundPoissonDriftUp"
    CP_DOWN = "CompoundPoissonDriftDown"


class Side(str, enum.Enum):
    SP = "SP"
    SN = "SN"


@dataclass(frozen=True)
class LevyModel:
    """Parametric Levy process.

    ``drift`` is the signed slope of the path between jumps.
    """

    kind: Kind
    drift: float = 0.0
    volatility: float = 0.0
    jump_rate: float = 0.0
    jump_mu: float = 1.0
    jump_shape: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.volatility < 0:
            raise InvalidModel("volatility must be nonnegative")
        if self.jump_rate < 0:
            raise InvalidModel("jump_rate must be nonnegative")
        if not self.jump_mu > 0:
            raise InvalidModel("jump_mu must be positive")
        if int(self.jump_shape) != self.jump_shape or self.jump_shape < 1:
            raise InvalidModel("jump_shape must be a positive integer")
        if self.kind is Kind.BROWNIAN:
            if self.jump_rate != 0:
                raise InvalidModel("BrownianDrift has no jumps")
        else:
            if self.volatility != 0:
                raise InvalidModel("compound Poisson models have zero volatility")
            if self.kind is Kind.CP_UP and not self.drift < 0:
                raise InvalidModel("CompoundPoissonDriftUp needs drift -c with c > 0")
            if self.kind is Kind.CP_DOWN and not self.drift > 0:
                raise InvalidModel("CompoundPoissonDriftDown needs drift c > 0")

    @classmethod
    def brownian(cls, drift: float, volatility: float) -> "LevyModel":
        return cls(Kind.BROWNIAN, drift=drift, volatility=volatility)

    @classmethod
    def cp_up(cls, c: float, rate: float, mu: float, shape: int = 1) -> "LevyModel":
        """``Y(t) = -c t + upward Erlang jumps`` (claims minus premium)."""
        return cls(Kind.CP_UP, drift=-c, jump_rate=rate, jump_mu=mu, jump_shape=shape)

    @classmethod
    def cp_down(cls, c: float, rate: float, mu: float, shape: int = 1) -> "LevyModel":
        """``Y(t) = c t - Erlang jumps`` (Cramer-Lundberg surplus)."""
        return cls(Kind.CP_DOWN, drift=c, jump_rate=rate, jump_mu=mu, jump_shape=shape)

    @property
    def spectrally_positive(self) -> bool:
        return self.kind in (Kind.BROWNIAN, Kind.CP_UP)

    @property
    def spectrally_negative(self) -> bool:
        return self.kind in (Kind.BROWNIAN, Kind.CP_DOWN)

    @property
    def piecewise_linear(self) -> bool:
        return self.volatility == 0

    @property
    def jump_sign(self) -> float:
        return -1.0 if self.kind is Kind.CP_DOWN else 1.0

    @property
    def mean_jump(self) -> float:
        return self.jump_shape / self.jump_mu

    def mean(self) -> float:
        """``E Y(1)``."""
        return self.drift + self.jump_sign * self.jump_rate * self.mean_jump

    def variance(self) -> float:
        """``Var Y(1)``."""
        k, mu = self.jump_shape, self.jump_mu
        return self.volatility**2 + self.jump_rate * k * (k + 1) / mu**2

    def supports(self, side: Side) -> bool:
        return self.spectrally_positive if Side(side) is Side.SP else self.spectrally_negative

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "drift": self.drift,
            "volatility": self.volatility,
            "jump_rate": self.jump_rate,
            "jump_mu": self.jump_mu,
            "jump_shape": self.jump_shape,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "LevyModel":
        allowed = {"kind", "drift", "volatility", "jump_rate", "jump_mu", "jump_shape"}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown model fields: {sorted(unknown)}")
        if "kind" not in data:
            raise ConfigError("model needs a 'kind'")
        try:
            kind = Kind(data["kind"])
        except ValueError as exc:
            raise ConfigError(f"unknown model kind {data['kind']!r}") from exc
        try:
            return cls(
                kind,
                drift=float(data.get("drift", 0.0)),
                volatility=float(data.get("volatility", 0.0)),
                jump_rate=float(data.get("jump_rate", 0.0)),
                jump_mu=float(data.get("jump_mu", 1.0)),
                jump_shape=int(data.get("jump_shape", 1)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


PRESETS: dict[str, LevyModel] = {
    "sp_cl": LevyModel.cp_up(2.0, 1.0, 1.0),
    "sn_cl": LevyModel.cp_down(2.0, 1.0, 1.0),
    "sn_bm": LevyModel.brownian(-1.0, 1.0),
    "bm0": LevyModel.brownian(0.0, 1.0),
}


def model_from_config(spec: str | Mapping[str, Any]) -> LevyModel:
    """Resolve a preset name or a model mapping."""
    if isinstance(spec, str):
        try:
            return PRESETS[spec]
        except KeyError:
            raise ConfigError(f"unknown model preset {spec!r}; known: {sorted(PRESETS)}") from None
    if isinstance(spec, Mapping):
        return LevyModel.from_dict(spec)
    raise ConfigError(f"cannot build a model from {spec!r}")


@dataclass(frozen=True)
class ExponentEval:
    value: float
    first_derivative: float
    second_derivative: float


def _slope(model: LevyModel, side: Side) -> float:
    side = Side(side)
    if not model.supports(side):
        raise UnsupportedSidedness(f"{model.kind.value} is not spectrally {'positive' if side is Side.SP else 'negative'}")
    return -model.drift if side is Side.SP else model.drift


def _eval(model: LevyModel, s: float, a: float) -> ExponentEval:
    sig2 = model.volatility**2
    lam, mu, k = model.jump_rate, model.jump_mu, model.jump_shape
    value = s * a + 0.5 * sig2 * a * a
    d1 = s + sig2 * a
    d2 = sig2
    if lam > 0:
        r = mu / (mu + a)
        rk = r**k
        value += lam * (rk - 1.0)
        d1 -= lam * k * rk / (mu + a)
        d2 += lam * k * (k + 1) * rk / (mu + a) ** 2
    return ExponentEval(value, d1, d2)


def exponent(model: LevyModel, side: Side, alpha: float) -> ExponentEval:
    """Evaluate ``phi`` (SP) or ``Phi`` (SN) at ``alpha``.

    ``alpha`` may be slightly negative (down to ``-jump_mu``), which the
    finite-difference oracles rely on.
    """
    return _eval(model, _slope(model, side), float(alpha))


def laplace_exponent_sp(model: LevyModel, alpha: float) -> ExponentEval:
    """``phi(alpha) = log E exp(-alpha Y(1))`` with exact derivatives."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    return exponent(model, Side.SP, alpha)


def cumulant_sn(model: LevyModel, alpha: float) -> ExponentEval:
    """``Phi(alpha) = log E exp(alpha Y(1))`` with exact derivatives."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    return exponent(model, Side.SN, alpha)


def _argmin(model: LevyModel, s: float) -> float:
    # f is convex; locate the zero of f' on [0, inf) when f'(0) < 0.
    if _eval(model, s, 0.0).first_derivative >= 0:
        return 0.0
    lo, hi = 0.0, 1.0
    for _ in range(MAX_ITER):
        if _eval(model, s, hi).first_derivative > 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise NoRoot("exponent is nonincreasing on [0, inf)")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _eval(model, s, mid).first_derivative > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def _largest_root(model: LevyModel, s: float, beta: float) -> float:
    lo = _argmin(model, s)
    f_lo = _eval(model, s, lo).value
    if beta == 0.0 and lo == 0.0:
        return 0.0
    if f_lo > beta:
        raise NoRoot(f"exponent stays above {beta}")
    tol = ROOT_TOL * max(1.0, abs(beta))
    hi = max(1.0, 2.0 * lo)
    for _ in range(MAX_ITER):
        if _eval(model, s, hi).value > beta:
            break
        lo, hi = hi, 2.0 * hi
        if not math.isfinite(hi):
            break
    else:
        raise NoRoot(f"exponent is bounded above below {beta}")
    if not math.isfinite(hi):
        raise NoRoot(f"exponent is bounded above below {beta}")

    # Newton from the right end: f is convex and increasing on [lo, hi], so
    # iterates stay in the bracket; bisection kicks in on any excursion.
    # Iterate until the Newton step is at rounding level, which gives full
    # relative precision even where f is flat near a tiny root.
    x = hi
    resid = math.inf
    for _ in range(MAX_ITER):
        ev = _eval(model, s, x)
        resid = ev.value - beta
        if resid == 0.0:
            return x
        if resid > 0:
            hi = x
        else:
            lo = x
        step_ok = ev.first_derivative > 0
        if step_ok and abs(resid) <= tol and abs(resid / ev.first_derivative) <= 4 * math.ulp(x):
            return x - resid / ev.first_derivative
        x_new = x - resid / ev.first_derivative if step_ok else 0.5 * (lo + hi)
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if hi - lo <= 4 * math.ulp(hi):
            return x_new
        x = x_new
    if abs(resid) <= tol:
        return x
    raise NonConvergence(f"right-inverse did not converge for beta={beta}")


def right_inverse(model: LevyModel, side: Side, beta: float) -> float:
    """Largest ``alpha >= 0`` with ``exponent(alpha) == beta``.

    At ``beta = 0`` with a negative-drift exponent this is the positive root,
    not zero.
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    return _largest_root(model, _slope(model, side), float(beta))


def inverse_derivatives(model: LevyModel, side: Side, beta: float) -> ExponentEval:
    """Right-inverse and its first two derivatives by implicit differentiation."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    root = right_inverse(model, side, beta)
    ev = exponent(model, side, root)
    if ev.first_derivative <= 1e-14:
        raise DegenerateDerivative(f"exponent derivative vanishes at the root {root}")
    d1 = 1.0 / ev.first_derivative
    d2 = -ev.second_derivative / ev.first_derivative**3
    return ExponentEval(root, d1, d2)
