"""Benchmark the numba kernels against the pure-numpy fallback.

The two backends are selected by the FINMARKOV_NO_NUMBA environment flag at
import time, so this script re-executes itself once per backend and prints a
combined table.  Workloads mirror the hot paths of the verification suite:
grouped weight sums, union-find over gluing pairs, joint relabeling, and an
end-to-end de Finetti suite on a four-state chain.

Usage:  python benchmarks/bench_kernels.py [--size N] [--repeat R]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def workloads(size, repeat):
    import numpy as np

    import finmarkov._kernels as kern

    rng = np.random.default_rng(12345)
    keys = rng.integers(0, size // 16, size=size).astype(np.int64)
    vals = rng.integers(0, 10**9, size=size).astype(np.int64)
    eu = rng.integers(0, size, size=size).astype(np.int64)
    ev = rng.integers(0, size, size=size).astype(np.int64)
    half = rng.integers(0, 1000, size=size).astype(np.int64)

    def bench(fn):
        fn()  # warm-up (jit compile / cache touch)
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        return best

    out = {}
    out["group_sum"] = bench(lambda: kern.group_sum(keys, vals, size // 16))
    out["union_components"] = bench(lambda: kern.union_components(size, eu, ev))
    out["pair_canon"] = bench(lambda: kern.pair_canon(keys, half))
    out["masked_weight_sum"] = bench(lambda: kern.masked_weight_sum(vals, keys, keys))

    from fractions import Fraction as F

    from finmarkov import checks, dilation

    spec = dilation.ChainSpec.from_rows(
        [
            [F(1, 6), F(1, 3), F(1, 3), F(1, 6)],
            [F(1, 2), F(0), F(1, 4), F(1, 4)],
            [F(1, 4), F(1, 4), F(1, 4), F(1, 4)],
            [F(0), F(1, 2), F(1, 6), F(1, 3)],
        ]
    )
    out["definetti_suite_d4"] = bench(
        lambda: checks.definetti_suite(spec, 4).passed
    )
    return kern.backend(), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--single", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.single:
        backend, res = workloads(args.size, args.repeat)
        print(json.dumps({"backend": backend, "results": res}))
        return

    rows = {}
    for flag in ("0", "1"):
        env = dict(os.environ, FINMARKOV_NO_NUMBA=flag)
        cmd = [
            sys.executable,
            os.path.abspath(__file__),
            "--single",
            "--size",
            str(args.size),
            "--repeat",
            str(args.repeat),
        ]
        proc = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
        data = json.loads(proc.stdout.strip().splitlines()[-1])
        rows[data["backend"]] = data["results"]

    names = list(next(iter(rows.values())))
    print(f"{'kernel':<24}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name in names:
        nb = rows["numba"][name] * 1e3
        np_ = rows["numpy"][name] * 1e3
        print(f"{name:<24}{nb:>12.2f}{np_:>12.2f}{np_ / nb:>10.2f}x")


if __name__ == "__main__":
    main()
