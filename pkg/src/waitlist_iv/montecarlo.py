"""Simulation study: pooled lotteries, five 2SLS variants, many replications.

Replication ``i`` draws from its own PCG64 stream seeded by
``SeedSequence(seed, spawn_key=(i,))``, so results do not depend on how
replications are split across worker processes.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import kernels
from .combinatorics import variance_ratio
from .errors import ConfigError, DomainError, WaitlistError
from .estimation import StudentRecord, _iv_fit
from .waitlist import PRNG_NAME

DEFAULT_SEED = 20160101
Z_CRIT = 1.96

ESTIMATORS = (
    "Instrument V, fixed effects",
    "Instrument V, reweighting",
    "Instrument W, fixed effects",
    "Instrument W, reweighting",
    "Instrument Z",
)
V_FE, V_IPW, W_FE, W_IPW, Z_ROW = range(5)


@dataclass(frozen=True)
class McConfig:
    n_strata: int = 20
    students_per_stratum: int = 20
    accepters_per_stratum: int = 15
    seats: int = 10
    y0_refuser_mean: float = 0.0
    y0_accepter_mean: float = 1.0
    y0_sd: float = 1.0
    treatment_effect: float = 0.2
    replications: int = 2000
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            if f.type == "int" and (isinstance(val, bool) or not isinstance(val, int)):
                raise ConfigError(f.name, f"expected an integer, got {val!r}")
            if f.type == "float" and (isinstance(val, bool) or not isinstance(val, (int, float))):
                raise ConfigError(f.name, f"expected a number, got {val!r}")
        if self.n_strata < 1:
            raise ConfigError("n_strata", "must be at least 1")
        if not 1 <= self.seats < self.accepters_per_stratum:
            raise ConfigError("seats", "need 1 <= seats < accepters_per_stratum")
        if self.accepters_per_stratum > self.students_per_stratum:
            raise ConfigError("accepters_per_stratum", "cannot exceed students_per_stratum")
        if self.y0_sd < 0:
            raise ConfigError("y0_sd", "must be nonnegative")
        if self.replications < 1:
            raise ConfigError("replications", "must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "must be a 64-bit unsigned integer")

    @classmethod
    def from_dict(cls, data: dict) -> "McConfig":
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(unknown[0], "unknown config field")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "McConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError("<root>", f"invalid JSON: {exc}") from None
        return cls.from_dict(data)

    def replace(self, **changes) -> "McConfig":
        return McConfig(**{**asdict(self), **changes})


def replication_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def simulate_arrays(config: McConfig, rng: np.random.Generator) -> dict:
    """One draw of every stratum as (n_strata, students) arrays."""
    g, n = config.n_strata, config.students_per_stratum
    base = np.zeros((g, n), dtype=np.uint8)
    base[:, : config.accepters_per_stratum] = 1
    accepter = rng.permuted(base, axis=1)
    y0 = rng.standard_normal((g, n)) * config.y0_sd + np.where(
        accepter == 1, config.y0_accepter_mean, config.y0_refuser_mean
    )
    stats = kernels.waitlist_batch(accepter, config.seats)
    t_last = stats[:, kernels.T_COL]
    rank = np.broadcast_to(np.arange(1, n + 1), (g, n))
    offered = rank <= t_last[:, None]
    treated = offered & (accepter == 1)
    y = y0 + config.treatment_effect * treated
    return {
        "accepter": accepter.astype(bool),
        "rank": rank,
        "t_last": t_last,
        "offered": offered,
        "treated": treated,
        "y": y,
    }


def arrays_to_records(arrays: dict, stratum_offset: int = 0) -> list[StudentRecord]:
    g, n = arrays["y"].shape
    out = []
    for k in range(g):
        sid = f"s{k + stratum_offset:03d}"
        for i in range(n):
            out.append(
                StudentRecord(
                    student_id=f"{sid}-{i + 1:03d}",
                    stratum_id=sid,
                    rank=i + 1,
                    offered=bool(arrays["offered"][k, i]),
                    enrolled=bool(arrays["treated"][k, i]),
                    outcome=float(arrays["y"][k, i]),
                    accepter=bool(arrays["accepter"][k, i]),
                )
            )
    return out


def simulate_stratum(config: McConfig, rng: np.random.Generator, stratum_id: int = 0) -> list[StudentRecord]:
    """One lottery of the simulation design, with accepter flags."""
    return arrays_to_records(simulate_arrays(config.replace(n_strata=1), rng), stratum_id)


def simulate_dataset(config: McConfig, rng: np.random.Generator) -> list[StudentRecord]:
    return arrays_to_records(simulate_arrays(config, rng))


def _ipw_array(codes: np.ndarray, z: np.ndarray, g: int) -> np.ndarray:
    n_k = np.bincount(codes, minlength=g)
    ones_k = np.bincount(codes, weights=z, minlength=g)
    pooled = z.mean()
    p_k = ones_k / n_k
    if np.any(p_k <= 0) or np.any(p_k >= 1):
        from .errors import DegenerateStratum

        raise DegenerateStratum(int(np.flatnonzero((p_k <= 0) | (p_k >= 1))[0]))
    return np.where(z == 1, pooled / p_k[codes], (1 - pooled) / (1 - p_k[codes]))


def replication_estimates(config: McConfig, index: int) -> np.ndarray:
    """The five point estimates for replication ``index``."""
    sim = simulate_arrays(config, replication_rng(config.seed, index))
    g, n = sim["y"].shape
    codes = np.repeat(np.arange(g, dtype=np.intp), n)
    y = sim["y"].ravel()
    d = sim["treated"].ravel().astype(np.float64)
    rank = sim["rank"].ravel()
    t_rep = np.repeat(sim["t_last"], n)
    v = (rank <= t_rep).astype(np.float64)
    keep = rank != t_rep
    w = (rank < t_rep).astype(np.float64)
    z = (rank <= config.seats).astype(np.float64)
    ones = np.ones_like(y)
    out = np.empty(5)
    try:
        out[V_FE] = _iv_fit(y, d, v, ones, codes, g, True)[0]
        out[V_IPW] = _iv_fit(y, d, v, _ipw_array(codes, v, g), codes, g, False)[0]
        yk, dk, wk, ck = y[keep], d[keep], w[keep], codes[keep]
        out[W_FE] = _iv_fit(yk, dk, wk, np.ones_like(yk), ck, g, True)[0]
        out[W_IPW] = _iv_fit(yk, dk, wk, _ipw_array(ck, wk, g), ck, g, False)[0]
        # equal Z shares across strata make reweighting and fixed effects coincide
        out[Z_ROW] = _iv_fit(y, d, z, ones, codes, g, True)[0]
    except WaitlistError as exc:
        exc.replication = index
        exc.args = (f"replication {index}: {exc}",)
        raise
    return out


def _run_chunk(args) -> np.ndarray:
    config, start, stop = args
    return np.array([replication_estimates(config, i) for i in range(start, stop)]).reshape(-1, 5)


def run_estimates(config: McConfig, workers: int = 1) -> np.ndarray:
    """(replications, 5) estimates, identical for every ``workers`` value."""
    reps = config.replications
    if workers <= 1 or reps == 1:
        return _run_chunk((config, 0, reps))
    bounds = np.linspace(0, reps, min(workers, reps) + 1).astype(int)
    jobs = [(config, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_chunk, jobs))
    return np.vstack(parts)


@dataclass
class McRow:
    estimator: str
    average: float
    se: float | None
    ci_low: float | None
    ci_high: float | None


@dataclass
class McResultTable:
    rows: list[McRow]
    replications: int
    seed: int
    config: McConfig
    warnings: list[str] = field(default_factory=list)

    def row(self, index: int) -> McRow:
        return self.rows[index]

    @property
    def se_ratio(self) -> float | None:
        """Across-replication SD of W+reweighting over that of Z."""
        a, b = self.rows[W_IPW].se, self.rows[Z_ROW].se
        return None if a is None or not b else a / b

    def to_dict(self) -> dict:
        try:
            predicted = precision_prediction(self.config)
        except DomainError:
            predicted = None
        return {
            "schema_version": 1,
            "prng": PRNG_NAME,
            "seed": self.seed,
            "replications": self.replications,
            "config": asdict(self.config),
            "rows": [
                {**asdict(r), "replications": self.replications, "seed": self.seed} for r in self.rows
            ],
            "se_ratio_w_reweighting_over_z": self.se_ratio,
            "predicted_se_ratio": predicted,
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_text(self) -> str:
        def fmt(x):
            return "     n/a" if x is None else f"{x:8.4f}"

        lines = [f"{'':<30}| {'Average':>8} | {'SE':>8} | 95% CI"]
        lines.append("-" * 66)
        for r in self.rows:
            ci = "n/a" if r.ci_low is None else f"[{r.ci_low:.4f},{r.ci_high:.4f}]"
            lines.append(f"{r.estimator:<30}| {fmt(r.average)} | {fmt(r.se)} | {ci}")
        lines.append("")
        lines.append(f"replications={self.replications} seed={self.seed} prng={PRNG_NAME}")
        if self.se_ratio is not None:
            lines.append(f"SE ratio (W reweighting / Z) = {self.se_ratio:.4f}")
        try:
            lines.append(f"predicted SE ratio = {precision_prediction(self.config):.4f}")
        except DomainError:
            pass
        lines += [f"warning: {w}" for w in self.warnings]
        return "\n".join(lines) + "\n"


def summarize(estimates: np.ndarray, config: McConfig) -> McResultTable:
    reps = estimates.shape[0]
    rows = []
    warnings = []
    if reps == 1:
        warnings.append("one replication: SE and confidence intervals are undefined")
    for j, name in enumerate(ESTIMATORS):
        col = estimates[:, j]
        avg = float(col.mean())
        if reps > 1:
            se = float(col.std(ddof=1))
            half = Z_CRIT * se / math.sqrt(reps)
            rows.append(McRow(name, avg, se, avg - half, avg + half))
        else:
            rows.append(McRow(name, avg, None, None, None))
    return McResultTable(rows, reps, config.seed, config, warnings)


def run_mc(config: McConfig, workers: int = 1) -> McResultTable:
    """Replicate the simulation design and tabulate the five estimators."""
    return summarize(run_estimates(config, workers), config)


def precision_prediction(config: McConfig) -> float:
    """Predicted SE ratio of the W and Z estimators from population shares."""
    p_c = config.accepters_per_stratum / config.students_per_stratum
    p_d = config.seats / config.students_per_stratum
    return math.sqrt(variance_ratio(p_c, p_d))
