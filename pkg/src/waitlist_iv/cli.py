"""Command-line entry point: ``waitlist-iv {verify,test,mc,analyze,simulate}``.

Exit codes: 0 success, 1 usage/config error, 2 data validation error,
3 verification failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time

from . import __version__, kernels
from .combinatorics import DEFAULT_ALPHA, exact_test_decision, exact_test_pvalue, exact_test_tail_pvalue
from .dataio import read_records, write_records
from .errors import ConfigError, WaitlistError
from .estimation import analyze
from .montecarlo import DEFAULT_SEED, McConfig, run_mc, simulate_dataset, replication_rng
from .oracle import DEFAULT_CAP, verify_theorems

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VERIFY = 0, 1, 2, 3
SEED_ENV = "WAITLIST_IV_SEED"


def _dump(payload: dict) -> str:
    return json.dumps(payload, indent=2) + "\n"


def _alpha(text: str) -> float:
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return value


def resolve_seed(flag: int | None, config_seed: int | None) -> int:
    """flag > environment > config file > built-in default."""
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError:
            raise ConfigError(SEED_ENV, f"not an integer: {env!r}") from None
    if config_seed is not None:
        return config_seed
    return DEFAULT_SEED


def load_config(path: str | None, seed_flag: int | None, replications: int | None = None) -> McConfig:
    data: dict = {}
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError("--config", str(exc)) from None
        except json.JSONDecodeError as exc:
            raise ConfigError("--config", f"invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a JSON object")
    data = dict(data)
    data["seed"] = resolve_seed(seed_flag, data.get("seed"))
    if replications is not None:
        data["replications"] = replications
    return McConfig.from_dict(data)


def cmd_verify(args) -> int:
    start = time.perf_counter()
    cases = verify_theorems(args.max_n, args.cap)
    elapsed = time.perf_counter() - start
    failed = [c for c in cases if not c.passed]
    if args.format == "json":
        sys.stdout.write(
            _dump(
                {
                    "schema_version": 1,
                    "max_n": args.max_n,
                    "n_cases": len(cases),
                    "n_failed": len(failed),
                    "seconds": round(elapsed, 3),
                    "backend": kernels.BACKEND,
                    "cases": [c.to_dict() for c in cases],
                }
            )
        )
    else:
        if not cases:
            print(f"no valid (n, s, a1) with n <= {args.max_n}; nothing to check")
        for c in cases:
            status = "PASS" if c.passed else "FAIL"
            if c.kind == "shares":
                print(
                    f"n={c.n:<3} s={c.s:<3} a1={c.a1:<3} E(w1)={str(c.mean_w1):<7} "
                    f"E(w0)={str(c.mean_w0):<7} a1/n={str(c.expected):<7} T-law={'ok' if c.t_law_matches else 'BAD'}  {status}"
                )
            else:
                print(f"n={c.n:<3} s={c.s:<3} null T-law vs exact test {'ok' if c.t_law_matches else 'BAD'}  {status}")
        print(f"{len(cases) - len(failed)}/{len(cases)} checks passed in {elapsed:.2f}s")
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_test(args) -> int:
    p = exact_test_pvalue(args.n, args.s, args.t)
    reject = exact_test_decision(p, args.alpha)
    tail = exact_test_tail_pvalue(args.n, args.s, args.t) if args.tail else None
    decision = "REJECT" if reject else "FAIL-TO-REJECT"
    if args.format == "json":
        payload = {
            "schema_version": 1,
            "n": args.n,
            "s": args.s,
            "t": args.t,
            "alpha": args.alpha,
            "pvalue": str(p),
            "pvalue_float": float(p),
            "decision": decision,
        }
        if tail is not None:
            payload["tail_pvalue"] = str(tail)
            payload["tail_pvalue_float"] = float(tail)
        sys.stdout.write(_dump(payload))
    else:
        print(f"H0: a1 = s   (n={args.n}, s={args.s}, observed T={args.t})")
        print(f"p = {p} = {float(p):.4f}")
        if tail is not None:
            print(f"tail P(T >= {args.t}) = {tail} = {float(tail):.4f}")
        print(f"{decision} at alpha={args.alpha}")
    return EXIT_OK


def cmd_mc(args) -> int:
    config = load_config(args.config, args.seed, args.replications)
    table = run_mc(config, workers=args.workers)
    for w in table.warnings:
        print(f"warning: {w}", file=sys.stderr)
    sys.stdout.write(table.to_json() if args.format == "json" else table.to_text())
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = load_config(args.config, args.seed)
    records = simulate_dataset(config, replication_rng(config.seed, args.replication))
    write_records(records, args.out)
    print(f"wrote {len(records)} records to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_analyze(args) -> int:
    records = read_records(args.input)
    result = analyze(records, args.instrument, args.pooling, args.seats, args.alpha)
    if args.format == "json":
        sys.stdout.write(_dump(result.to_dict()))
        return EXIT_OK
    rep = result.report
    se = "n/a" if rep.std_error is None else f"{rep.std_error:.4f}"
    print(f"2SLS, instrument {rep.instrument}, pooling {rep.pooling_mode}")
    print(f"estimate = {rep.point_estimate:.4f}   se ({rep.se_type}) = {se}")
    if rep.std_error is not None:
        lo, hi = rep.point_estimate - 1.96 * rep.std_error, rep.point_estimate + 1.96 * rep.std_error
        print(f"95% CI = [{lo:.4f}, {hi:.4f}]")
    print(f"n_used = {rep.n_used}   n_excluded = {rep.n_excluded}")
    if result.excluded_ids:
        print("excluded (last-offer rank): " + ", ".join(map(str, result.excluded_ids)))
    if result.dropped_strata:
        print("dropped strata: " + ", ".join(map(str, result.dropped_strata)))
    if result.balance is not None:
        print(f"accepter share: instrument=1 {float(result.balance[0]):.4f}, instrument=0 {float(result.balance[1]):.4f}")
    print("per-stratum exact test of a1 = s:")
    for t in result.stratum_tests:
        p = "n/a" if t.pvalue is None else f"{t.pvalue} ({float(t.pvalue):.4g})"
        print(f"  {t.stratum_id}: n={t.n} s={t.seats} T={t.t_last_offer} p={p} {t.note}")
    for w in rep.warnings:
        print(f"warning: {w}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="waitlist-iv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check closed forms against exhaustive enumeration")
    p.add_argument("--max-n", type=int, default=12)
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("test", help="exact test of a1 = s from the observed last-offer rank")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--alpha", type=_alpha, default=DEFAULT_ALPHA)
    p.add_argument("--tail", action="store_true", help="also report P(T >= t)")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("mc", help="run the pooled-lottery Monte Carlo study")
    p.add_argument("--config", help="JSON config; missing fields take defaults")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--replications", type=int)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("simulate", help="export one simulated pooled dataset as CSV")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--replication", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="estimate from lottery data in CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--instrument", type=str.upper, choices=("Z", "V", "W"), default="W")
    p.add_argument("--pooling", choices=("fe", "ipw"), default="ipw")
    p.add_argument("--seats", type=int)
    p.add_argument("--alpha", type=_alpha, default=DEFAULT_ALPHA)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except WaitlistError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
