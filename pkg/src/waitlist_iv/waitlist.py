"""Mechanics of one waiting-list lottery.

Ranks are 1-based throughout. A pattern lists student types by rank; the
offer process walks down the list until ``s`` accepters have said yes.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from .combinatorics import LotteryParams
from .errors import MismatchedInputs

PRNG_NAME = "numpy.PCG64"


class StudentType(str, Enum):
    ACCEPTER = "A"
    REFUSER = "R"


A = StudentType.ACCEPTER
R = StudentType.REFUSER


@dataclass(frozen=True)
class OrderingPattern:
    """Student types indexed by rank (``types[0]`` is rank 1)."""

    types: tuple[StudentType, ...]

    @classmethod
    def from_string(cls, text: str) -> "OrderingPattern":
        """``"RAARAR"`` or ``"R,A,A,R,A,R"``."""
        return cls(tuple(StudentType(c) for c in text.replace(",", "").replace(" ", "").upper()))

    @classmethod
    def from_indicator(cls, accepter: Sequence[int]) -> "OrderingPattern":
        return cls(tuple(A if a else R for a in accepter))

    @classmethod
    def from_accepter_ranks(cls, n: int, ranks) -> "OrderingPattern":
        ranks = set(ranks)
        return cls(tuple(A if r in ranks else R for r in range(1, n + 1)))

    @property
    def n(self) -> int:
        return len(self.types)

    @property
    def a1(self) -> int:
        return sum(t is A for t in self.types)

    def accepter_ranks(self) -> tuple[int, ...]:
        return tuple(r for r, t in enumerate(self.types, 1) if t is A)

    def indicator(self) -> np.ndarray:
        return np.fromiter((t is A for t in self.types), dtype=np.uint8, count=self.n)

    def __str__(self) -> str:
        return "".join(t.value for t in self.types)


@dataclass(frozen=True)
class AssignmentResult:
    s: int
    t_last_offer: int
    offered: tuple[bool, ...]
    treated: tuple[bool, ...]
    z: tuple[int, ...]
    v: tuple[int, ...]
    w: tuple[int, ...]
    seats_filled: int

    @property
    def undersubscribed(self) -> bool:
        return self.seats_filled < self.s

    @property
    def n(self) -> int:
        return len(self.offered)


@dataclass(frozen=True)
class ShareReport:
    """Accepter shares in the W=1 and W=0 groups (None when a group is empty)."""

    w1: Fraction | None
    w0: Fraction | None
    n_w1: int
    n_w0: int
    n_excluded: int


def run_waitlist(pattern: OrderingPattern, s: int) -> AssignmentResult:
    """Offer seats in rank order until ``s`` accepters have enrolled.

    If fewer than ``s`` accepters exist every student is offered, the last
    offer rank is set to ``n`` and nobody is marked W=-1; check
    ``result.undersubscribed`` before relying on W.
    """
    n = pattern.n
    if not 1 <= s < n:
        raise ValueError(f"need 1 <= s < n, got s={s}, n={n}")
    offered, treated = [], []
    accepted = 0
    t_last = 0
    for rank, kind in enumerate(pattern.types, 1):
        is_offered = accepted < s
        offered.append(is_offered)
        takes = is_offered and kind is A
        treated.append(takes)
        if takes:
            accepted += 1
            if accepted == s:
                t_last = rank
    filled = accepted == s
    if not filled:
        t_last = n
    z = tuple(int(r <= s) for r in range(1, n + 1))
    v = tuple(int(r <= t_last) for r in range(1, n + 1))
    if filled:
        w = tuple(1 if r < t_last else (-1 if r == t_last else 0) for r in range(1, n + 1))
    else:
        w = (1,) * n
    return AssignmentResult(
        s=s,
        t_last_offer=t_last,
        offered=tuple(offered),
        treated=tuple(treated),
        z=z,
        v=v,
        w=w,
        seats_filled=accepted,
    )


def shares(result: AssignmentResult, pattern: OrderingPattern) -> ShareReport:
    if result.n != pattern.n:
        raise MismatchedInputs(f"result covers {result.n} ranks, pattern {pattern.n}")
    acc1 = n1 = acc0 = n0 = excl = 0
    for w, kind in zip(result.w, pattern.types):
        if w == 1:
            n1 += 1
            acc1 += kind is A
        elif w == 0:
            n0 += 1
            acc0 += kind is A
        else:
            excl += 1
    return ShareReport(
        w1=Fraction(acc1, n1) if n1 else None,
        w0=Fraction(acc0, n0) if n0 else None,
        n_w1=n1,
        n_w0=n0,
        n_excluded=excl,
    )


def make_rng(seed: int | None = None) -> np.random.Generator:
    """Seeded generator using the algorithm named by ``PRNG_NAME``."""
    return np.random.Generator(np.random.PCG64(seed))


def draw_ordering(params: LotteryParams, rng: np.random.Generator) -> OrderingPattern:
    """Uniform type pattern: shuffle a1 accepter and n-a1 refuser labels."""
    if params.a1 is None:
        raise ValueError("draw_ordering needs a known a1")
    labels = np.zeros(params.n, dtype=np.uint8)
    labels[: params.a1] = 1
    rng.shuffle(labels)
    return OrderingPattern.from_indicator(labels)
