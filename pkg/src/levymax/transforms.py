"""Closed-form joint transforms and moments for spectrally one-sided models.

For a spectrally positive process the transforms are written in terms of the
Laplace exponent ``phi(a) = log E exp(-a Y(1))`` and its right-inverse
``psi``; for a spectrally negative process in terms of the cumulant
``Phi(a) = log E exp(a Y(1))`` and its right-inverse ``Psi``.

All transforms are of the pair ``(max, last argmax time)``, either of the
continuously observed path up to ``T_beta`` or of the walk observed at
Poisson(omega) inspections before ``T_beta``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import NamedTuple

from scipy import integrate

from .errors import (
    InfiniteSecondMoment,
    InvalidRate,
    QuadratureFailure,
    SingularDenominator,
    UnsupportedSidedness,
)
from .models import LevyModel, Side, exponent, inverse_derivatives, right_inverse

__all__ = [
    "MomentReport",
    "FrullaniResult",
    "joint_lst_inspected_sp",
    "joint_lst_inspected_sn",
    "joint_lst_inspected",
    "joint_lst_continuous",
    "moments_inspected",
    "moments_continuous",
    "printed_cross_moment_sp",
    "moments_from_lst",
    "frullani_check",
]

# relative size of psi(x) - alpha below which the ratio is taken as its limit
REMOVABLE_TOL = 1e-7
SINGULAR_TOL = 1e-13


@dataclass(frozen=True)
class MomentReport:
    mean_max: float
    mean_argmax: float
    cross_moment: float
    covariance: float
    var_max: float
    var_argmax: float

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


def _check_side(model: LevyModel, side: Side) -> Side:
    side = Side(side)
    if not model.supports(side):
        raise UnsupportedSidedness(f"{model.kind.value} is not spectrally {'positive' if side is Side.SP else 'negative'}")
    return side


def _check_rates(beta: float, omega: float | None = None) -> None:
    if not (beta > 0 and math.isfinite(beta)):
        raise InvalidRate(f"beta must be positive and finite, got {beta}")
    if omega is not None and not (omega > 0 and math.isfinite(omega)):
        raise InvalidRate(f"omega must be positive and finite, got {omega}")


def _check_args(alpha: float, gamma: float) -> None:
    if alpha < 0 or gamma < 0:
        raise ValueError("transform arguments must be nonnegative")


def _sp_ratio(model: LevyModel, x: float, alpha: float) -> float:
    """``(psi(x) - alpha) / (x - phi(alpha))`` with its removable point filled in.

    At ``alpha = psi(x)`` both numerator and denominator vanish; expanding
    ``phi`` around the root gives ``1 / (phi'(r) - phi''(r) d / 2)`` with
    ``d = psi(x) - alpha``.
    """
    root = right_inverse(model, Side.SP, x)
    num = root - alpha
    if abs(num) <= REMOVABLE_TOL * max(1.0, abs(root)):
        ev = exponent(model, Side.SP, root)
        return 1.0 / (ev.first_derivative - 0.5 * ev.second_derivative * num)
    den = x - exponent(model, Side.SP, alpha).value
    if abs(den) < SINGULAR_TOL:
        raise SingularDenominator(f"x - phi(alpha) vanishes at alpha={alpha}, x={x}")
    return num / den


def _sp_continuous(model: LevyModel, beta: float, alpha: float, gamma: float) -> float:
    return beta / right_inverse(model, Side.SP, beta) * _sp_ratio(model, beta + gamma, alpha)


def _sp_inspected(model: LevyModel, beta: float, omega: float, alpha: float, gamma: float) -> float:
    head = _sp_continuous(model, beta, alpha, gamma)
    far = beta + omega
    tail = right_inverse(model, Side.SP, far) / far / _sp_ratio(model, far + gamma, alpha)
    return head * tail


def _sn_continuous(model: LevyModel, beta: float, alpha: float, gamma: float) -> float:
    return right_inverse(model, Side.SN, beta) / (right_inverse(model, Side.SN, beta + gamma) + alpha)


def _sn_inspected(model: LevyModel, beta: float, omega: float, alpha: float, gamma: float) -> float:
    inv = lambda b: right_inverse(model, Side.SN, b)  # noqa: E731
    return inv(beta) / inv(beta + omega) * (inv(beta + omega + gamma) + alpha) / (inv(beta + gamma) + alpha)


def joint_lst_inspected_sp(model: LevyModel, beta: float, omega: float, alpha: float, gamma: float) -> float:
    """``E exp(-alpha max - gamma argmax)`` of the inspected walk, spectrally positive."""
    _check_side(model, Side.SP)
    _check_rates(beta, omega)
    _check_args(alpha, gamma)
    return _sp_inspected(model, beta, omega, alpha, gamma)


def joint_lst_inspected_sn(model: LevyModel, beta: float, omega: float, alpha: float, gamma: float) -> float:
    """``E exp(-alpha max - gamma argmax)`` of the inspected walk, spectrally negative."""
    _check_side(model, Side.SN)
    _check_rates(beta, omega)
    _check_args(alpha, gamma)
    return _sn_inspected(model, beta, omega, alpha, gamma)


def joint_lst_inspected(model: LevyModel, side: Side, beta: float, omega: float, alpha: float, gamma: float) -> float:
    side = Side(side)
    if side is Side.SP:
        return joint_lst_inspected_sp(model, beta, omega, alpha, gamma)
    return joint_lst_inspected_sn(model, beta, omega, alpha, gamma)


def joint_lst_continuous(model: LevyModel, side: Side, beta: float, alpha: float, gamma: float) -> float:
    """Joint transform of ``(max, last argmax)`` of the path on ``[0, T_beta]``."""
    side = _check_side(model, side)
    _check_rates(beta)
    _check_args(alpha, gamma)
    if side is Side.SP:
        return _sp_continuous(model, beta, alpha, gamma)
    return _sn_continuous(model, beta, alpha, gamma)


def _origin_derivatives(model: LevyModel) -> tuple[float, float]:
    ev = exponent(model, Side.SP, 0.0)
    if not math.isfinite(ev.second_derivative):
        raise InfiniteSecondMoment("phi''(0) is infinite")
    return ev.first_derivative, ev.second_derivative


def printed_cross_moment_sp(model: LevyModel, beta: float, omega: float) -> float:
    """The spectrally positive ``E[max * argmax]`` display taken term by term.

    Its ``(1/beta - 1/(beta+omega)) (1/psi(beta+omega) - 1/psi(beta))`` term
    carries the opposite sign to the one implied by the transform, so this
    value differs from :func:`moments_inspected` by
    ``2 (1/beta - 1/(beta+omega)) (1/psi(beta) - 1/psi(beta+omega))``.
    Kept for side-by-side reporting.
    """
    _check_side(model, Side.SP)
    _check_rates(beta, omega)
    return _sp_cross(model, beta, omega, printed=True)


def _sp_cross(model: LevyModel, beta: float, omega: float, printed: bool) -> float:
    d1, _ = _origin_derivatives(model)
    a = inverse_derivatives(model, Side.SP, beta)
    b = inverse_derivatives(model, Side.SP, beta + omega)
    p, p1, q, q1 = a.value, a.first_derivative, b.value, b.first_derivative
    u = 1.0 / beta - 1.0 / (beta + omega)
    gap = (1.0 / q - 1.0 / p) if printed else (1.0 / p - 1.0 / q)
    return (
        p1 / (p * q)
        + q1 / (p * q)
        - 2.0 * q1 / q**2
        + d1 * u * (p1 / p - q1 / q)
        + u * gap
        - 2.0 * d1 / beta * u
    )


def moments_inspected(model: LevyModel, side: Side, beta: float, omega: float) -> MomentReport:
    """First and second moments of ``(max, last argmax epoch)`` of the inspected walk."""
    side = _check_side(model, side)
    _check_rates(beta, omega)
    far = beta + omega
    if side is Side.SP:
        d1, d2 = _origin_derivatives(model)
        a = inverse_derivatives(model, Side.SP, beta)
        b = inverse_derivatives(model, Side.SP, far)
        p, p1, p2 = a.value, a.first_derivative, a.second_derivative
        q, q1, q2 = b.value, b.first_derivative, b.second_derivative
        u = 1.0 / beta - 1.0 / far
        u2 = 1.0 / beta**2 - 1.0 / far**2
        return MomentReport(
            mean_max=1.0 / p - 1.0 / q - d1 / beta + d1 / far,
            mean_argmax=-p1 / p + q1 / q + u,
            cross_moment=_sp_cross(model, beta, omega, printed=False),
            covariance=-d1 * u2 + p1 / p**2 - q1 / q**2,
            var_max=d2 * u + d1**2 * u2 - 1.0 / p**2 + 1.0 / q**2,
            var_argmax=u2 + p2 / p - q2 / q - (p1 / p) ** 2 + (q1 / q) ** 2,
        )
    a = inverse_derivatives(model, Side.SN, beta)
    b = inverse_derivatives(model, Side.SN, far)
    p, p1, p2 = a.value, a.first_derivative, a.second_derivative
    q, q1, q2 = b.value, b.first_derivative, b.second_derivative
    return MomentReport(
        mean_max=1.0 / p - 1.0 / q,
        mean_argmax=p1 / p - q1 / q,
        cross_moment=p1 / p * (1.0 / p - 1.0 / q) + 1.0 / p * (p1 / p - q1 / q),
        covariance=p1 / p**2 - q1 / q**2,
        var_max=1.0 / p**2 - 1.0 / q**2,
        var_argmax=q2 / q - p2 / p + (p1 / p) ** 2 - (q1 / q) ** 2,
    )


def moments_continuous(model: LevyModel, side: Side, beta: float) -> MomentReport:
    """Moments of ``(max, last argmax)`` of the continuously observed path up to ``T_beta``."""
    side = _check_side(model, side)
    _check_rates(beta)
    if side is Side.SP:
        d1, d2 = _origin_derivatives(model)
        a = inverse_derivatives(model, Side.SP, beta)
        p, p1, p2 = a.value, a.first_derivative, a.second_derivative
        mean_max = 1.0 / p - d1 / beta
        mean_argmax = 1.0 / beta - p1 / p
        cov = p1 / p**2 - d1 / beta**2
        var_max = d2 / beta + d1**2 / beta**2 - 1.0 / p**2
        var_argmax = 1.0 / beta**2 + p2 / p - (p1 / p) ** 2
    else:
        a = inverse_derivatives(model, Side.SN, beta)
        p, p1, p2 = a.value, a.first_derivative, a.second_derivative
        mean_max = 1.0 / p
        mean_argmax = p1 / p
        cov = p1 / p**2
        var_max = 1.0 / p**2
        var_argmax = (p1 / p) ** 2 - p2 / p
    return MomentReport(
        mean_max=mean_max,
        mean_argmax=mean_argmax,
        cross_moment=cov + mean_max * mean_argmax,
        covariance=cov,
        var_max=var_max,
        var_argmax=var_argmax,
    )


def _raw_derivatives(lst, h: float) -> tuple[float, float, float, float, float]:
    f0 = lst(0.0, 0.0)
    fa_p, fa_m = lst(h, 0.0), lst(-h, 0.0)
    fg_p, fg_m = lst(0.0, h), lst(0.0, -h)
    cross = (lst(h, h) - lst(h, -h) - lst(-h, h) + lst(-h, -h)) / (4 * h**2)
    return (
        -(fa_p - fa_m) / (2 * h),
        -(fg_p - fg_m) / (2 * h),
        cross,
        (fa_p - 2 * f0 + fa_m) / h**2,
        (fg_p - 2 * f0 + fg_m) / h**2,
    )


def moments_from_lst(model: LevyModel, side: Side, beta: float, omega: float, step: float = 1e-3) -> MomentReport:
    """Moments by central finite differences of the inspected transform at the origin.

    An independent route to the closed-form moments: it only evaluates the
    joint transform slightly to either side of ``(0, 0)``. One Richardson
    step (``h`` and ``h/2``) removes the leading ``h**2`` error term.
    """
    side = _check_side(model, side)
    _check_rates(beta, omega)
    if step >= beta:
        raise ValueError("step must be smaller than beta")
    f = _sp_inspected if side is Side.SP else _sn_inspected

    def lst(a: float, g: float) -> float:
        return f(model, beta, omega, a, g)

    coarse = _raw_derivatives(lst, step)
    fine = _raw_derivatives(lst, step / 2)
    e_max, e_arg, cross, e_max2, e_arg2 = ((4 * b - a) / 3 for a, b in zip(coarse, fine))
    return MomentReport(
        mean_max=e_max,
        mean_argmax=e_arg,
        cross_moment=cross,
        covariance=cross - e_max * e_arg,
        var_max=e_max2 - e_max**2,
        var_argmax=e_arg2 - e_arg**2,
    )


class FrullaniResult(NamedTuple):
    quadrature: float
    closed_form: float

    @property
    def difference(self) -> float:
        return abs(self.quadrature - self.closed_form)


def _quad(f, lo: float, hi: float, points=None) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, lo, hi, points=points, limit=500, epsabs=1e-13, epsrel=1e-12)
        except integrate.IntegrationWarning as exc:
            raise QuadratureFailure(str(exc)) from exc
    if not math.isfinite(val) or err > 1e-9:
        raise QuadratureFailure(f"quadrature error estimate {err} too large")
    return val


def frullani_check(beta: float, omega: float) -> FrullaniResult:
    """``int_0^inf t^-1 exp(-beta t) (1 - exp(-omega t)) dt`` two ways.

    ``quadrature`` integrates the original integrand adaptively on
    ``[0, 50/beta]``; the neglected tail is below ``exp(-50) / 50``.
    ``closed_form`` is ``log((beta + omega) / beta)``, reached through the
    inner representation ``int_beta^{beta+omega} y^-1 dy``, which is also
    integrated numerically and must agree with the logarithm.
    """
    if not (beta > 0 and math.isfinite(beta)):
        raise InvalidRate(f"beta must be positive, got {beta}")
    if not (omega >= 0 and math.isfinite(omega)):
        raise InvalidRate(f"omega must be nonnegative, got {omega}")
    if omega == 0:
        return FrullaniResult(0.0, 0.0)

    def integrand(t: float) -> float:
        if t == 0.0:
            return omega
        return math.exp(-beta * t) * -math.expm1(-omega * t) / t

    upper = 50.0 / beta
    points = sorted({p for p in (1.0 / (beta + omega), 1.0 / beta, 10.0 / beta) if 0 < p < upper})
    direct = _quad(integrand, 0.0, upper, points=points)
    closed = math.log1p(omega / beta)
    inner = _quad(lambda y: 1.0 / y, beta, beta + omega)
    if abs(inner - closed) > 1e-10 * max(1.0, closed):
        raise QuadratureFailure("inner representation disagrees with its closed form")
    return FrullaniResult(direct, closed)
