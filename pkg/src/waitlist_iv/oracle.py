"""Exhaustive enumeration over accepter/refuser patterns.

Brute-force ground truth for the closed forms in :mod:`combinatorics`.
Only type patterns are enumerated (``binom(n, a1)`` of them) because the
last-offer rank and both shares depend on nothing else.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np

from . import kernels
from .combinatorics import LotteryParams, binom, exact_test_pvalue, expected_share, prob_T
from .errors import CapExceeded, ParamsViolateTheorem
from .waitlist import OrderingPattern

DEFAULT_CAP = 20
PER_PATTERN_MAX_N = 10


@dataclass
class EnumerationSummary:
    n: int
    s: int
    a1: int
    n_patterns: int
    mean_w1: Fraction
    mean_w0: Fraction
    t_distribution: dict[int, Fraction]
    per_pattern: list[tuple[OrderingPattern, int, Fraction, Fraction]] | None = field(
        default=None, repr=False
    )


def _check_cap(n: int, cap: int) -> None:
    if n > cap:
        raise CapExceeded(n, cap)


def pattern_matrix(n: int, a1: int, cap: int = DEFAULT_CAP) -> np.ndarray:
    """All patterns as a (binom(n, a1), n) 0/1 array, lexicographic in accepter ranks."""
    if not 0 <= a1 <= n:
        raise ValueError(f"need 0 <= a1 <= n, got a1={a1}, n={n}")
    _check_cap(n, cap)
    return kernels.combination_patterns(n, a1)


def enumerate_patterns(n: int, a1: int, cap: int = DEFAULT_CAP) -> Iterator[OrderingPattern]:
    for row in pattern_matrix(n, a1, cap):
        yield OrderingPattern.from_indicator(row)


def count_outcomes(stats: np.ndarray) -> Counter:
    """Multiplicity of each (T, acc_w1, n_w1, acc_w0, n_w0) outcome."""
    cols = stats[:, [kernels.T_COL, kernels.ACC_W1, kernels.N_W1, kernels.ACC_W0, kernels.N_W0]]
    keys, counts = np.unique(cols, axis=0, return_counts=True)
    return Counter({tuple(int(x) for x in k): int(c) for k, c in zip(keys, counts)})


def summarize_counts(n: int, s: int, a1: int, counts: Counter) -> EnumerationSummary:
    total = sum(counts.values())
    sum_w1 = sum_w0 = Fraction(0)
    t_hits: Counter = Counter()
    for (t, acc1, n1, acc0, n0), c in counts.items():
        sum_w1 += c * Fraction(acc1, n1)
        sum_w0 += c * Fraction(acc0, n0)
        t_hits[t] += c
    return EnumerationSummary(
        n=n,
        s=s,
        a1=a1,
        n_patterns=total,
        mean_w1=sum_w1 / total,
        mean_w0=sum_w0 / total,
        t_distribution={t: Fraction(c, total) for t, c in sorted(t_hits.items())},
    )


def oracle_summary(
    n: int, s: int, a1: int, cap: int = DEFAULT_CAP, chunks: int = 1
) -> EnumerationSummary:
    """Exact means of w1, w0 and the law of T over every pattern.

    ``chunks`` splits the pattern stream; partial counts merge exactly so
    the result cannot depend on it.
    """
    LotteryParams(n, s, a1).require_theorem()
    mat = pattern_matrix(n, a1, cap)
    counts: Counter = Counter()
    for part in np.array_split(mat, max(1, chunks)):
        if len(part):
            counts.update(count_outcomes(kernels.waitlist_batch(part, s)))
    summary = summarize_counts(n, s, a1, counts)
    if n <= PER_PATTERN_MAX_N:
        stats = kernels.waitlist_batch(mat, s)
        summary.per_pattern = [
            (
                OrderingPattern.from_indicator(row),
                int(st[kernels.T_COL]),
                Fraction(int(st[kernels.ACC_W1]), int(st[kernels.N_W1])),
                Fraction(int(st[kernels.ACC_W0]), int(st[kernels.N_W0])),
            )
            for row, st in zip(mat, stats)
        ]
    return summary


def oracle_null_t_distribution(n: int, s: int, cap: int = DEFAULT_CAP) -> dict[int, Fraction]:
    """Law of the last-offer rank over all patterns with exactly ``s`` accepters."""
    if not 2 <= s < n:
        raise ParamsViolateTheorem(f"need 2 <= s < n, got n={n}, s={s}")
    mat = pattern_matrix(n, s, cap)
    ts = kernels.waitlist_batch(mat, s)[:, kernels.T_COL]
    total = binom(n, s)
    hits = Counter(int(t) for t in ts)
    return {t: Fraction(hits.get(t, 0), total) for t in range(s, n + 1)}


@dataclass
class VerificationCase:
    kind: str  # "shares" or "null"
    n: int
    s: int
    a1: int | None
    expected: Fraction | None
    mean_w1: Fraction | None
    mean_w0: Fraction | None
    t_law_matches: bool
    passed: bool

    def to_dict(self) -> dict:
        def q(x):
            return None if x is None else str(x)

        return {
            "kind": self.kind,
            "n": self.n,
            "s": self.s,
            "a1": self.a1,
            "expected_share": q(self.expected),
            "mean_w1": q(self.mean_w1),
            "mean_w0": q(self.mean_w0),
            "t_law_matches": self.t_law_matches,
            "passed": self.passed,
        }


def verify_theorems(max_n: int, cap: int = DEFAULT_CAP) -> list[VerificationCase]:
    """Compare enumeration with the closed forms for every valid triple up to ``max_n``.

    Covers the share identity and law of T for 2 <= s < a1 <= n, and the
    null law of T for 2 <= s < n.
    """
    _check_cap(max_n, cap)
    cases = []
    for n in range(3, max_n + 1):
        for s in range(2, n):
            for a1 in range(s + 1, n + 1):
                params = LotteryParams(n, s, a1)
                summ = oracle_summary(n, s, a1, cap)
                exp = expected_share(params)
                law_ok = all(
                    summ.t_distribution.get(t, Fraction(0)) == prob_T(params, t) for t in range(1, n + 2)
                ) and sum(summ.t_distribution.values()) == 1
                ok = summ.mean_w1 == exp and summ.mean_w0 == exp and law_ok
                cases.append(VerificationCase("shares", n, s, a1, exp, summ.mean_w1, summ.mean_w0, law_ok, ok))
            null = oracle_null_t_distribution(n, s, cap)
            law_ok = all(null[t] == exact_test_pvalue(n, s, t) for t in range(s, n + 1))
            cases.append(VerificationCase("null", n, s, None, None, None, None, law_ok, law_ok))
    return cases
