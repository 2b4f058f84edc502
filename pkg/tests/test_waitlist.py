from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from waitlist_iv.combinatorics import LotteryParams
from waitlist_iv.errors import MismatchedInputs
from waitlist_iv.oracle import enumerate_patterns
from waitlist_iv.waitlist import A, R, OrderingPattern, draw_ordering, make_rng, run_waitlist, shares


def P(text):
    return OrderingPattern.from_string(text)


class TestRunWaitlist:
    def test_worked_example_ordering(self):
        # students (2;3;5;4;1;6) with accepters {1,3,5}: types by rank R A A R A R
        pat = P("R,A,A,R,A,R")
        res = run_waitlist(pat, 2)
        assert res.t_last_offer == 3
        assert res.w == (1, 1, -1, 0, 0, 0)
        assert [r for r, t in enumerate(res.treated, 1) if t] == [2, 3]
        rep = shares(res, pat)
        assert (rep.w1, rep.w0) == (Fraction(1, 2), Fraction(1, 3))

    def test_first_two_accept(self):
        res = run_waitlist(P("AAARRA"), 2)
        assert res.t_last_offer == 2
        assert res.offered == (True, True, False, False, False, False)
        assert res.z == (1, 1, 0, 0, 0, 0)
        assert res.v == (1, 1, 0, 0, 0, 0)

    def test_last_rank_fills(self):
        pat = P("RRRRAA")
        res = run_waitlist(pat, 2)
        assert res.t_last_offer == 6
        assert all(res.offered)
        rep = shares(res, pat)
        # ranks 1..5 hold one accepter
        assert rep.w1 == Fraction(1, 5)
        assert rep.w0 is None
        assert rep.n_w0 == 0

    def test_undersubscribed_flag(self):
        pat = P("RRARRR")
        res = run_waitlist(pat, 2)
        assert res.undersubscribed
        assert res.t_last_offer == 6
        assert all(res.offered)
        assert -1 not in res.w
        assert res.seats_filled == 1

    def test_boundary_a1_equals_s(self):
        res = run_waitlist(P("RARARR"), 2)
        assert not res.undersubscribed
        assert res.t_last_offer == 4

    @pytest.mark.parametrize("n, a1, s", [(6, 4, 2), (8, 5, 3), (9, 9, 2), (7, 3, 3), (7, 2, 3)])
    def test_invariants_all_patterns(self, n, a1, s):
        for pat in enumerate_patterns(n, a1):
            res = run_waitlist(pat, s)
            assert sum(res.z) == s
            assert sum(res.treated) == res.seats_filled == min(s, a1)
            for i, kind in enumerate(pat.types):
                assert res.treated[i] == (res.offered[i] and kind is A)
            if a1 >= s:
                t = res.t_last_offer
                assert s <= t <= s + (n - a1)
                assert pat.types[t - 1] is A
                assert sum(res.v) == t
                assert res.w.count(-1) == 1
                acc_w1 = sum(1 for w, k in zip(res.w, pat.types) if w == 1 and k is A)
                acc_w0 = sum(1 for w, k in zip(res.w, pat.types) if w == 0 and k is A)
                assert acc_w1 == s - 1
                assert acc_w0 == a1 - s
                assert res.w.count(0) == n - t >= a1 - s
            else:
                assert res.w.count(-1) == 0

    def test_bad_seats(self):
        with pytest.raises(ValueError):
            run_waitlist(P("AAR"), 3)


class TestShares:
    def test_table_column_one(self):
        pat = P("AAAARR")
        rep = shares(run_waitlist(pat, 2), pat)
        assert (rep.w1, rep.w0) == (Fraction(1), Fraction(1, 2))
        assert (rep.n_w1, rep.n_w0, rep.n_excluded) == (1, 4, 1)

    def test_all_accepters(self):
        pat = P("AAAAAA")
        rep = shares(run_waitlist(pat, 2), pat)
        assert (rep.w1, rep.w0) == (1, 1)

    def test_mismatch(self):
        res = run_waitlist(P("AAAR"), 2)
        with pytest.raises(MismatchedInputs):
            shares(res, P("AAARR"))


def _student_level(order, accepters, s):
    """Offer process over named students; returns (T, w1, w0)."""
    accepted = 0
    for pos, student in enumerate(order, 1):
        if student in accepters:
            accepted += 1
            if accepted == s:
                t = pos
                break
    before, after = order[: t - 1], order[t:]
    return (
        t,
        Fraction(sum(x in accepters for x in before), len(before)),
        Fraction(sum(x in accepters for x in after), len(after)) if after else None,
    )


def test_type_pattern_sufficiency():
    rng = np.random.default_rng(12345)
    for _ in range(1000):
        n = int(rng.integers(4, 15))
        s = int(rng.integers(2, n - 1))
        a1 = int(rng.integers(s + 1, n + 1))
        students = list(range(100, 100 + n))
        accepters = set(rng.choice(students, size=a1, replace=False).tolist())
        order = list(rng.permutation(students))
        pat = OrderingPattern(tuple(A if x in accepters else R for x in order))
        res = run_waitlist(pat, s)
        rep = shares(res, pat)
        assert _student_level(order, accepters, s) == (res.t_last_offer, rep.w1, rep.w0)


class TestDrawOrdering:
    def test_all_accepters(self):
        pat = draw_ordering(LotteryParams(6, 2, 6), make_rng(1))
        assert str(pat) == "AAAAAA"

    def test_determinism(self):
        p = LotteryParams(12, 3, 7)
        assert draw_ordering(p, make_rng(99)) == draw_ordering(p, make_rng(99))

    def test_uniform_over_patterns(self):
        rng = make_rng(2024)
        p = LotteryParams(6, 2, 4)
        counts = Counter(str(draw_ordering(p, rng)) for _ in range(15000))
        assert len(counts) == 15
        # 4-sigma multinomial band: sqrt(15000 * 1/15 * 14/15) ~ 30.5
        for c in counts.values():
            assert abs(c - 1000) <= 120

    def test_counts(self):
        pat = draw_ordering(LotteryParams(20, 10, 15), make_rng(5))
        assert pat.a1 == 15 and pat.n == 20
