"""Instruments from observed offers, IPW pooling, and Wald/2SLS estimators."""
from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .combinatorics import DEFAULT_ALPHA, exact_test_decision, exact_test_pvalue
from .errors import (
    AmbiguousSeats,
    DataError,
    DegenerateStratum,
    IngestionError,
    MissingTypes,
    NonPrefixOffers,
    ZeroFirstStage,
)

FIRST_STAGE_TOL = 1e-12


class PoolingMode(str, Enum):
    FIXED_EFFECTS = "fe"
    REWEIGHTING = "ipw"


class Instrument(str, Enum):
    Z = "Z"
    V = "V"
    W = "W"


@dataclass(frozen=True)
class StudentRecord:
    student_id: Hashable
    stratum_id: Hashable
    rank: int
    offered: bool
    enrolled: bool
    outcome: float
    accepter: bool | None = None


@dataclass
class StratumInstruments:
    """Instruments for one lottery, rows sorted by rank."""

    stratum_id: Hashable
    seats: int
    t_last_offer: int
    records: list[StudentRecord]
    z: np.ndarray
    v: np.ndarray
    w: np.ndarray
    seats_filled: int
    warnings: list[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.records)

    @property
    def undersubscribed(self) -> bool:
        return self.seats_filled < self.seats

    def values(self, instrument: Instrument | str) -> np.ndarray:
        return getattr(self, Instrument(instrument).value.lower())


@dataclass
class WeightedInstrumentSample:
    strata: list
    instrument: list[int]
    weights: list
    excluded: list = field(default_factory=list)
    pooling_mode: PoolingMode = PoolingMode.REWEIGHTING


@dataclass
class EstimateReport:
    estimator: str
    instrument: str
    pooling_mode: str
    point_estimate: float
    std_error: float | None
    n_used: int
    n_excluded: int
    se_type: str = "homoskedastic"
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "estimator": self.estimator,
            "instrument": self.instrument,
            "pooling_mode": self.pooling_mode,
            "point_estimate": self.point_estimate,
            "std_error": self.std_error,
            "se_type": self.se_type,
            "n_used": self.n_used,
            "n_excluded": self.n_excluded,
            "warnings": list(self.warnings),
        }


def _seats_for(stratum, seats, inferred: int | None) -> int:
    if isinstance(seats, Mapping):
        if stratum in seats:
            return int(seats[stratum])
        if str(stratum) in seats:
            return int(seats[str(stratum)])
    elif seats is not None:
        return int(seats)
    if not inferred:
        raise AmbiguousSeats(f"stratum {stratum!r}: seat count neither supplied nor inferable")
    return inferred


def group_records(records: Iterable[StudentRecord]) -> dict:
    by_stratum: dict = defaultdict(list)
    for rec in records:
        by_stratum[rec.stratum_id].append(rec)
    return dict(by_stratum)


def derive_instruments(
    records: Iterable[StudentRecord], seats: int | Mapping | None = None
) -> list[StratumInstruments]:
    """Recover the last-offer rank per stratum and build Z, V and W.

    The last-offer rank is the highest offered rank; offers must cover
    exactly ranks 1..T. Without ``seats``, the seat count is the largest
    enrolled count over all strata.
    """
    by_stratum = group_records(records)
    inferred = max((sum(r.enrolled for r in recs) for recs in by_stratum.values()), default=0)
    out = []
    for sid, recs in by_stratum.items():
        recs = sorted(recs, key=lambda r: r.rank)
        n = len(recs)
        ranks = [r.rank for r in recs]
        dupes = [k for k, c in Counter(ranks).items() if c > 1]
        if dupes:
            ids = [r.student_id for r in recs if r.rank in dupes]
            raise IngestionError(f"stratum {sid!r}: duplicate ranks {dupes} for students {ids}")
        if ranks != list(range(1, n + 1)):
            raise IngestionError(f"stratum {sid!r}: ranks are not a permutation of 1..{n}")
        bad = [r.student_id for r in recs if r.enrolled and not r.offered]
        if bad:
            raise IngestionError(f"stratum {sid!r}: enrolled without an offer: {bad}")
        offered = [r.rank for r in recs if r.offered]
        if not offered:
            raise NonPrefixOffers(f"stratum {sid!r}: nobody received an offer")
        t = max(offered)
        if len(offered) != t:
            raise NonPrefixOffers(f"stratum {sid!r}: offers are not the rank prefix 1..{t}")
        s = _seats_for(sid, seats, inferred)
        enrolled = sum(r.enrolled for r in recs)
        if enrolled > s:
            raise DataError(f"stratum {sid!r}: {enrolled} enrolled but only {s} seats")
        warnings = []
        rank_arr = np.arange(1, n + 1)
        z = (rank_arr <= s).astype(np.int64)
        v = (rank_arr <= t).astype(np.int64)
        if enrolled == s:
            w = np.where(rank_arr < t, 1, np.where(rank_arr == t, -1, 0))
            if not recs[t - 1].enrolled:
                warnings.append(
                    f"AccepterViolation: stratum {sid!r}: student at last-offer rank {t} did not enroll"
                )
        else:
            w = np.ones(n, dtype=np.int64)
            warnings.append(f"Undersubscribed: stratum {sid!r}: {enrolled} of {s} seats filled")
            if t < n:
                warnings.append(
                    f"stratum {sid!r}: offers stopped at rank {t} with seats left unfilled"
                )
        out.append(StratumInstruments(sid, s, t, recs, z, v, w, enrolled, warnings))
    return out


def ipw_weights(
    strata: Sequence, instrument: Sequence[int], exact: bool = False, excluded: Sequence = ()
) -> WeightedInstrumentSample:
    """Weights equalizing each stratum's instrument=1 share to the pooled share.

    Rows with instrument=1 in stratum k get (pooled share of 1s) / (share
    of 1s in k); rows with instrument=0 get the analogous ratio for 0s.
    Excluded rows must already be removed. ``exact`` returns Fractions.
    """
    if len(strata) != len(instrument):
        raise ValueError("strata and instrument lengths differ")
    n_k: Counter = Counter(strata)
    ones_k: Counter = Counter(k for k, z in zip(strata, instrument) if z == 1)
    for k in n_k:
        if ones_k[k] == 0 or ones_k[k] == n_k[k]:
            raise DegenerateStratum(k)
    total = len(strata)
    ones = sum(ones_k.values())
    w1 = {k: Fraction(ones, total) / Fraction(ones_k[k], n_k[k]) for k in n_k}
    w0 = {
        k: Fraction(total - ones, total) / Fraction(n_k[k] - ones_k[k], n_k[k]) for k in n_k
    }
    weights = [w1[k] if z == 1 else w0[k] for k, z in zip(strata, instrument)]
    if not exact:
        weights = [float(x) for x in weights]
    return WeightedInstrumentSample(
        strata=list(strata),
        instrument=[int(z) for z in instrument],
        weights=weights,
        excluded=list(excluded),
    )


def _arr(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def wald(y, d, z, weights=None) -> float:
    """Ratio of (weighted) outcome and take-up differences between instrument arms."""
    y, d, z = _arr(y), _arr(d), np.asarray(z)
    w = np.ones_like(y) if weights is None else _arr(weights)
    on = z == 1
    off = ~on
    if not on.any() or not off.any():
        raise ZeroFirstStage("instrument is constant")

    def mean(x, m):
        return np.sum(w[m] * x[m]) / np.sum(w[m])

    first = mean(d, on) - mean(d, off)
    if abs(first) <= FIRST_STAGE_TOL:
        raise ZeroFirstStage(f"first-stage difference {first!r} is zero")
    return float((mean(y, on) - mean(y, off)) / first)


def _codes(strata_ids) -> tuple[np.ndarray, int]:
    _, codes = np.unique(np.asarray(strata_ids, dtype=object).astype(str), return_inverse=True)
    return codes.astype(np.intp), int(codes.max()) + 1 if len(codes) else 0


def _iv_fit(y, d, z, w, codes, n_groups, fixed_effects: bool):
    if fixed_effects:
        yt = kernels.group_demean(y, codes, n_groups, w)
        dt = kernels.group_demean(d, codes, n_groups, w)
        zt = kernels.group_demean(z, codes, n_groups, w)
        k = n_groups + 1
    else:
        sw = w.sum()
        yt = y - np.dot(w, y) / sw
        dt = d - np.dot(w, d) / sw
        zt = z - np.dot(w, z) / sw
        k = 2
    szd = np.dot(w * zt, dt)
    if abs(szd) <= FIRST_STAGE_TOL * max(1.0, np.dot(w, np.abs(zt))):
        raise ZeroFirstStage("instrument is uncorrelated with treatment after pooling")
    beta = np.dot(w * zt, yt) / szd
    dof = len(y) - k
    if dof <= 0:
        return float(beta), None
    u = yt - beta * dt
    sigma2 = np.dot(w, u * u) / dof
    se = np.sqrt(sigma2 * np.dot(w * zt, zt)) / abs(szd)
    return float(beta), float(se)


def tsls(
    y,
    d,
    instrument,
    strata_ids=None,
    mode: PoolingMode | str = PoolingMode.FIXED_EFFECTS,
    weights=None,
    instrument_name: str = "W",
    n_excluded: int = 0,
) -> EstimateReport:
    """Just-identified 2SLS of ``y`` on ``d`` with a binary instrument.

    Fixed effects are absorbed by demeaning within stratum; reweighting
    runs a weighted IV with a common intercept. The standard error is the
    conventional homoskedastic one.
    """
    mode = PoolingMode(mode)
    y, d, z = _arr(y), _arr(d), _arr(instrument)
    if not (len(y) == len(d) == len(z)):
        raise ValueError("y, d and instrument lengths differ")
    warnings = []
    if strata_ids is None:
        strata_ids = np.zeros(len(y), dtype=np.intp)
    codes, n_groups = _codes(strata_ids)
    if mode is PoolingMode.REWEIGHTING:
        if weights is None:
            raise ValueError("reweighting mode requires weights")
        w = _arr(weights)
        if np.any(w <= 0):
            raise ValueError("weights must be strictly positive")
        beta, se = _iv_fit(y, d, z, w, codes, n_groups, fixed_effects=False)
    else:
        if weights is not None:
            warnings.append("Unvalidated: weighted fixed-effects 2SLS")
            w = _arr(weights)
        else:
            w = np.ones_like(y)
        if n_groups == 1:
            warnings.append("SingleStratumFE: one stratum, fixed effects reduce to plain IV")
        beta, se = _iv_fit(y, d, z, w, codes, n_groups, fixed_effects=True)
    return EstimateReport(
        estimator="TSLS",
        instrument=str(instrument_name),
        pooling_mode=mode.value,
        point_estimate=beta,
        std_error=se,
        n_used=len(y),
        n_excluded=n_excluded,
        warnings=warnings,
    )


def balance_diagnostic(accepter: Sequence, instrument: Sequence[int], weights=None):
    """(Weighted) accepter shares in the instrument=1 and instrument=0 arms.

    Plain Python arithmetic, so Fraction weights give exact shares.
    """
    if any(a is None for a in accepter):
        raise MissingTypes("accepter status is unknown for some students")
    if weights is None:
        weights = [1] * len(accepter)
    num = {0: 0, 1: 0}
    den = {0: 0, 1: 0}
    for a, z, w in zip(accepter, instrument, weights):
        num[z] += w * int(bool(a))
        den[z] += w
    if not den[0] or not den[1]:
        raise DegenerateStratum("<pooled>", "an instrument arm is empty")
    share = (lambda a, b: Fraction(a, b)) if all(
        isinstance(x, (int, Fraction)) for x in (num[0], num[1], den[0], den[1])
    ) else (lambda a, b: a / b)
    return share(num[1], den[1]), share(num[0], den[0])


@dataclass
class StratumTest:
    stratum_id: Hashable
    n: int
    seats: int
    t_last_offer: int
    pvalue: Fraction | None
    reject: bool | None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "stratum_id": str(self.stratum_id),
            "n": self.n,
            "seats": self.seats,
            "t_last_offer": self.t_last_offer,
            "pvalue": None if self.pvalue is None else str(self.pvalue),
            "pvalue_float": None if self.pvalue is None else float(self.pvalue),
            "reject_a1_equals_s": self.reject,
            "note": self.note,
        }


@dataclass
class AnalysisResult:
    report: EstimateReport
    excluded_ids: list
    dropped_strata: list
    stratum_tests: list[StratumTest]
    balance: tuple[float, float] | None
    warnings: list[str]

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "estimate": self.report.to_dict(),
            "excluded_student_ids": [str(x) for x in self.excluded_ids],
            "dropped_strata": [str(x) for x in self.dropped_strata],
            "stratum_tests": [t.to_dict() for t in self.stratum_tests],
            "balance": None
            if self.balance is None
            else {"share_instrument_1": float(self.balance[0]), "share_instrument_0": float(self.balance[1])},
            "warnings": list(self.warnings),
        }


def stratum_exact_test(si: StratumInstruments, alpha: float = DEFAULT_ALPHA) -> StratumTest:
    if si.undersubscribed:
        return StratumTest(si.stratum_id, si.n, si.seats, si.t_last_offer, None, None, "undersubscribed")
    if not 2 <= si.seats < si.n:
        return StratumTest(si.stratum_id, si.n, si.seats, si.t_last_offer, None, None, "needs 2 <= s < n")
    p = exact_test_pvalue(si.n, si.seats, si.t_last_offer)
    reject = exact_test_decision(p, alpha)
    note = "" if reject else "cannot reject a1 = s"
    return StratumTest(si.stratum_id, si.n, si.seats, si.t_last_offer, p, reject, note)


def analyze(
    records: Iterable[StudentRecord],
    instrument: Instrument | str = Instrument.W,
    pooling: PoolingMode | str = PoolingMode.REWEIGHTING,
    seats: int | Mapping | None = None,
    alpha: float = DEFAULT_ALPHA,
) -> AnalysisResult:
    """Full pipeline for observed lottery data."""
    instrument = Instrument(str(instrument).upper())
    pooling = PoolingMode(pooling)
    strata = derive_instruments(records, seats)
    warnings = [msg for si in strata for msg in si.warnings]
    tests = [stratum_exact_test(si, alpha) for si in strata]
    warnings += [
        f"stratum {t.stratum_id!r}: exact test cannot reject a1 = s (p = {t.pvalue})"
        for t in tests
        if t.reject is False
    ]
    rows, excluded, dropped = [], [], []
    for si in strata:
        if instrument is not Instrument.Z and (si.undersubscribed or si.t_last_offer == si.n):
            dropped.append(si.stratum_id)
            reason = "Undersubscribed" if si.undersubscribed else "every student offered"
            warnings.append(
                f"Undersubscribed: stratum {si.stratum_id!r} refused for {instrument.value} analysis ({reason})"
            )
            excluded += [r.student_id for r, w in zip(si.records, si.w) if w == -1] if instrument is Instrument.W else []
            continue
        vals = si.values(instrument)
        for rec, val in zip(si.records, vals):
            if val == -1:
                excluded.append(rec.student_id)
            else:
                rows.append((rec, int(val)))
    if not rows:
        raise DegenerateStratum("<all>", "no usable strata")
    sids = [r.stratum_id for r, _ in rows]
    inst = [v for _, v in rows]
    y = [r.outcome for r, _ in rows]
    d = [float(r.enrolled) for r, _ in rows]
    weights = ipw_weights(sids, inst).weights if pooling is PoolingMode.REWEIGHTING else None
    report = tsls(
        y, d, inst, sids, pooling, weights, instrument_name=instrument.value, n_excluded=len(excluded)
    )
    report.warnings = warnings + report.warnings
    balance = None
    if all(r.accepter is not None for r, _ in rows):
        balance = balance_diagnostic([r.accepter for r, _ in rows], inst, weights)
    return AnalysisResult(report, excluded, dropped, tests, balance, report.warnings)
