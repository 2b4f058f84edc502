from fractions import Fraction
from itertools import combinations

import pytest

_acceptance = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))
    elif report.when == "setup" and report.failed and "test_acceptance.py" in report.nodeid:
        _acceptance.append((report.nodeid.split("::")[-1], "error"))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")


def brute_force_lottery(accepter_ranks, n, s):
    """Walk the list one student at a time; returns (T, w1, w0) or None if unfilled."""
    accepted = 0
    last = None
    for rank in range(1, n + 1):
        if rank in accepter_ranks:
            accepted += 1
            if accepted == s:
                last = rank
                break
    if last is None:
        return None
    before = [r for r in range(1, last)]
    after = [r for r in range(last + 1, n + 1)]
    w1 = Fraction(sum(r in accepter_ranks for r in before), len(before)) if before else None
    w0 = Fraction(sum(r in accepter_ranks for r in after), len(after)) if after else None
    return last, w1, w0


def brute_force_T_law(n, s, a1):
    """Exact law of T from itertools enumeration, no package code involved."""
    hits = {}
    total = 0
    for pos in combinations(range(1, n + 1), a1):
        out = brute_force_lottery(set(pos), n, s)
        total += 1
        if out is not None:
            hits[out[0]] = hits.get(out[0], 0) + 1
    return {t: Fraction(c, total) for t, c in hits.items()}


@pytest.fixture
def pattern_columns():
    """Accepter ranks of each column of the 15-ordering table (n=6, a1=4)."""
    cols = [
        "AAAARR", "AAARAR", "AAARRA", "AARAAR", "AARARA", "AARRAA", "ARAAAR", "ARAARA",
        "ARARAA", "ARRAAA", "RAAAAR", "RAAARA", "RAARAA", "RARAAA", "RRAAAA",
    ]
    return cols


PATTERN_COLUMNS = [
    "AAAARR", "AAARAR", "AAARRA", "AARAAR", "AARARA", "AARRAA", "ARAAAR", "ARAARA",
    "ARARAA", "ARRAAA", "RAAAAR", "RAAARA", "RAARAA", "RARAAA", "RRAAAA",
]


def enumeration_strata_records(outcomes=None):
    """One stratum per ordering of the table: 6 students, 2 seats, 4 accepters."""
    from waitlist_iv.estimation import StudentRecord

    records = []
    for k, col in enumerate(PATTERN_COLUMNS):
        accepted = 0
        t = None
        for rank, c in enumerate(col, 1):
            if c == "A":
                accepted += 1
                if accepted == 2 and t is None:
                    t = rank
        for rank, c in enumerate(col, 1):
            y = 0.0 if outcomes is None else float(outcomes[k * 6 + rank - 1])
            records.append(
                StudentRecord(
                    student_id=f"k{k}-{rank}",
                    stratum_id=f"col{k + 1:02d}",
                    rank=rank,
                    offered=rank <= t,
                    enrolled=rank <= t and c == "A",
                    outcome=y,
                    accepter=c == "A",
                )
            )
    return records


@pytest.fixture(scope="session")
def default_table():
    from waitlist_iv.montecarlo import McConfig, run_mc

    return run_mc(McConfig())
