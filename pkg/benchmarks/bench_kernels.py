"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Kernel timings run both backends in-process; the end-to-end timings
spawn a subprocess per backend (selection happens at import).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from waitlist_iv import kernels

E2E = {
    "verify --max-n 12": "from waitlist_iv.oracle import verify_theorems; verify_theorems(12)",
    "oracle n=20,s=10,a1=15": "from waitlist_iv.oracle import oracle_summary; oracle_summary(20, 10, 15)",
    "mc 500 replications": "from waitlist_iv.montecarlo import McConfig, run_mc; run_mc(McConfig(replications=500))",
}


def kernel_cases():
    rng = np.random.default_rng(0)
    mat = kernels._pykernels.combination_patterns(20, 10)
    sim = rng.permuted(np.tile(np.r_[np.ones(15), np.zeros(5)].astype(np.uint8), (20, 1)), axis=1)
    x = rng.normal(size=400)
    g = np.repeat(np.arange(20), 20)
    return {
        "combination_patterns(20, 10)": lambda m: m.combination_patterns(20, 10),
        "waitlist_batch 184756 x 20": lambda m: m.waitlist_batch(mat, 5),
        "waitlist_batch 20 x 20": lambda m: m.waitlist_batch(sim, 10),
        "group_demean 400 rows": lambda m: m.group_demean(x, g, 20),
    }


def best_of(fn, repeat):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled extension not built; only the fallback is available")
    names = sorted(backends)
    print(f"{'kernel':<32}" + "".join(f"{n:>14}" for n in names) + "   speedup")
    for label, fn in kernel_cases().items():
        times = {n: best_of(lambda: fn(backends[n]), args.repeat) for n in names}
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:<32}" + "".join(f"{times[n] * 1e3:>12.3f}ms" for n in names) + f"   {speed:6.1f}x")

    print()
    print(f"{'end to end':<32}{'cython':>14}{'python':>14}   speedup")
    for label, stmt in E2E.items():
        times = {}
        for name, env in (("cython", {}), ("python", {"WAITLIST_IV_PURE_PYTHON": "1"})):
            code = (
                "import timeit\n"
                f"print(min(timeit.repeat({stmt!r}, number=1, repeat={args.repeat})))"
            )
            out = subprocess.run(
                [sys.executable, "-c", code], env={**os.environ, **env}, capture_output=True, text=True, check=True
            )
            times[name] = float(out.stdout.strip())
        print(
            f"{label:<32}{times['cython'] * 1e3:>12.1f}ms{times['python'] * 1e3:>12.1f}ms"
            f"   {times['python'] / times['cython']:6.1f}x"
        )


if __name__ == "__main__":
    main()
