"""Closed-form quantities for a single waiting-list lottery.

All probabilities and shares are returned as :class:`fractions.Fraction`
(aliased ``ExactRational``); floats appear only in :func:`variance_ratio`,
whose inputs are population shares rather than counts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError, InvalidT, ParamsViolateTheorem

ExactRational = Fraction

DEFAULT_ALPHA = 0.05


@dataclass(frozen=True)
class LotteryParams:
    """Applicants ``n``, seats ``s`` and (when known) accepters ``a1``."""

    n: int
    s: int
    a1: int | None = None

    def __post_init__(self):
        if not 1 <= self.s < self.n:
            raise ValueError(f"need 1 <= s < n, got s={self.s}, n={self.n}")
        if self.a1 is not None and not 0 <= self.a1 <= self.n:
            raise ValueError(f"need 0 <= a1 <= n, got a1={self.a1}, n={self.n}")

    @property
    def a0(self) -> int:
        if self.a1 is None:
            raise ValueError("a1 is unknown, so a0 is too")
        return self.n - self.a1

    def require_theorem(self) -> None:
        """Raise unless 2 <= s < a1 <= n."""
        if self.a1 is None:
            raise ParamsViolateTheorem("a1 must be known")
        if self.s < 2 or self.s >= self.a1:
            raise ParamsViolateTheorem(
                f"need 2 <= s < a1 <= n, got n={self.n}, s={self.s}, a1={self.a1}"
            )


def binom(i: int, j: int) -> int:
    """Binomial coefficient with ``binom(i, j) == 0`` for ``j > i``.

    Multiplicative formula; each partial product is divided by the gcd with
    the next denominator term so intermediates stay small.
    """
    if i < 0 or j < 0:
        raise ValueError("binom is defined for nonnegative integers only")
    if j > i:
        return 0
    j = min(j, i - j)
    num, den = 1, 1
    for k in range(1, j + 1):
        num *= i - j + k
        den *= k
        g = math.gcd(num, den)
        num //= g
        den //= g
    return num // den


def prob_T(params: LotteryParams, t: int) -> Fraction:
    """Probability that the last offer goes to rank ``t``.

    Nonzero only on ``s <= t <= s + a0``: the s-th accepter sits at rank t,
    with s-1 accepters before it and a1-s after.
    """
    params.require_theorem()
    n, s, a1 = params.n, params.s, params.a1
    if t < s or t > s + params.a0:
        return Fraction(0)
    return Fraction(binom(t - 1, s - 1) * binom(n - t, a1 - s), binom(n, a1))


def t_distribution(params: LotteryParams) -> dict[int, Fraction]:
    params.require_theorem()
    return {t: prob_T(params, t) for t in range(params.s, params.s + params.a0 + 1)}


def conditional_w0(params: LotteryParams, t: int) -> Fraction:
    """Accepter share among ranks after ``t`` given the last offer is at ``t``."""
    params.require_theorem()
    return Fraction(params.a1 - params.s, params.n - t)


def conditional_w1(params: LotteryParams, t: int) -> Fraction:
    """Accepter share among ranks before ``t`` given the last offer is at ``t``."""
    params.require_theorem()
    return Fraction(params.s - 1, t - 1)


def expected_share(params: LotteryParams) -> Fraction:
    """Common expectation of the W=1 and W=0 accepter shares: ``a1 / n``."""
    params.require_theorem()
    return Fraction(params.a1, params.n)


def expected_share_by_conditioning(params: LotteryParams) -> tuple[Fraction, Fraction]:
    """(E[w1], E[w0]) summed over the distribution of the last-offer rank.

    Independent of :func:`expected_share`; the two must agree.
    """
    e1 = e0 = Fraction(0)
    for t, p in t_distribution(params).items():
        e1 += p * conditional_w1(params, t)
        e0 += p * conditional_w0(params, t)
    return e1, e0


def _check_test_args(n: int, s: int, t: int) -> None:
    if not 2 <= s < n:
        raise ParamsViolateTheorem(f"need 2 <= s < n, got n={n}, s={s}")
    if not s <= t <= n:
        raise InvalidT(f"t={t} outside [{s}, {n}]")


def exact_test_pvalue(n: int, s: int, t: int) -> Fraction:
    """Point probability of observing last-offer rank ``t`` when ``a1 == s``.

    This point probability is the p-value of the oversubscription test.
    """
    _check_test_args(n, s, t)
    return Fraction(binom(t - 1, t - s), binom(n, n - s))


def exact_test_tail_pvalue(n: int, s: int, t: int) -> Fraction:
    """``P(T >= t)`` under ``a1 == s``.

    Extension; not the default test statistic.
    """
    _check_test_args(n, s, t)
    return sum((exact_test_pvalue(n, s, u) for u in range(t, n + 1)), Fraction(0))


def exact_test_decision(pvalue: Fraction, alpha: float = DEFAULT_ALPHA) -> bool:
    """True when the null ``a1 == s`` is rejected."""
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return pvalue < Fraction(alpha)


def variance_ratio(p_c: float, p_d: float) -> float:
    """Asymptotic variance of the W-instrument 2SLS over that of the Z one.

    ``p_c`` is the accepter share, ``p_d`` the treated share.
    """
    if not (0 < p_c < 1 and 0 <= p_d < 1):
        raise DomainError(f"shares must lie in (0, 1), got p_c={p_c}, p_d={p_d}")
    if p_d >= p_c:
        raise DomainError(f"need p_d < p_c, got p_c={p_c}, p_d={p_d}")
    return (p_c - p_d) / (1 - p_d)
