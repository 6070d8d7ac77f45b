"""Time the numba kernels against the pure-numpy fallback.

Each backend runs in its own interpreter because the choice is made at
import time from ``PGW_DISABLE_NUMBA``.  The numba side is warmed up once so
compilation is not counted.

    python benchmarks/bench_backends.py --sizes 20 50 100 --repeats 3
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
import pgw
from pgw.experiments import bench_problem

sizes, repeats = json.loads(sys.argv[1]), int(sys.argv[2])
rng = np.random.default_rng(0)

def lp_case(n):
    a = rng.random(n); b = rng.random(n + 5); b *= a.sum() / b.sum()
    return pgw.LpInstance(rng.normal(size=(n, n + 5)), a, b)

pgw.solve_ot(lp_case(5))
pgw.solve_v1(bench_problem(5, 1.0, 0))
rows = []
for n in sizes:
    inst = lp_case(n)
    prob = bench_problem(n, 1.0, 0)
    lp_t, fw_t = [], []
    for _ in range(repeats):
        t0 = time.perf_counter(); pgw.solve_ot(inst); lp_t.append(time.perf_counter() - t0)
        t0 = time.perf_counter(); rep = pgw.solve_v1(prob); fw_t.append(time.perf_counter() - t0)
    rows.append({"n": n, "lp": min(lp_t), "fw": min(fw_t), "iters": rep.iterations, "value": rep.pgw_value})
print(json.dumps({"backend": pgw.BACKEND, "rows": rows}))
"""


def run_backend(disable, sizes, repeats):
    env = dict(os.environ, PGW_DISABLE_NUMBA="1" if disable else "0")
    res = subprocess.run(
        [sys.executable, "-c", WORKER, json.dumps(sizes), str(repeats)],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(res.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[20, 50, 100])
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)

    fast = run_backend(False, args.sizes, args.repeats)
    slow = run_backend(True, args.sizes, args.repeats)
    print("n,lp_numba_s,lp_numpy_s,lp_speedup,fw_numba_s,fw_numpy_s,fw_speedup,same_value")
    for a, b in zip(fast["rows"], slow["rows"]):
        same = abs(a["value"] - b["value"]) <= 1e-12 and a["iters"] == b["iters"]
        print(
            f"{a['n']},{a['lp']:.4g},{b['lp']:.4g},{b['lp'] / a['lp']:.1f},"
            f"{a['fw']:.4g},{b['fw']:.4g},{b['fw'] / a['fw']:.1f},{same}"
        )


if __name__ == "__main__":
    main()
