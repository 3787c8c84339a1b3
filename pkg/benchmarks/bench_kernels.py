#!/usr/bin/env python3
"""Compiled kernels vs the numpy fallback.

Times synthesis, analysis, level norms and a full continuation solve on
seeded inputs and writes one CSV row per (case, backend). The continuation
case compares the compiled step loop with the generic Python loop; the
fully pure run is done in a subprocess with NME_PURE_PYTHON=1.

    python3 benchmarks/bench_kernels.py --out bench.csv
"""
import argparse
import csv
import os
import subprocess
import sys
import time

import numpy as np

from nme import _kernels_py
from nme.kernels import tables

try:
    from nme import _kernels
except ImportError:
    _kernels = None


def timeit(fn, repeats, inner):
    # mean time per call for each repeat, in microseconds
    per = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        per.append((time.perf_counter() - t0) / inner * 1e6)
    return np.array(per)


def kernel_cases(K, N, seed):
    M = 4 * (2 * K + 1)
    ct, st = tables(K, M)
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal(2 * K + 1)
    vals = rng.standard_normal(M)
    batch = np.ascontiguousarray(rng.standard_normal((64, 2 * K + 1)))
    return {
        "synthesize": lambda m: m.synthesize(coeffs, ct, st),
        "analyze": lambda m: m.analyze(vals, ct, st),
        f"level_norms_N{N}": lambda m: m.level_norms(coeffs, ct, st, N),
        f"level_norms_batch64_N{N}": lambda m: m.level_norms_batch(batch, ct, st, N),
    }


SOLVE_SNIPPET = """
import time, numpy as np
from nme import GradingSpec, GradedElement, quadratic_problem, solve, ContinuationConfig
spec = GradingSpec({K}, {N})
p = quadratic_problem(spec, 1.0, seed={seed})
y = GradedElement.mode(spec, 'sin', 1, 0.1)
cfg = ContinuationConfig(eps={eps}, monitored_levels=0)
t0 = time.perf_counter(); out = solve(p, y, cfg, engine='{engine}')
print(time.perf_counter() - t0, len(out.trace))
"""


def solve_case(K, N, seed, eps, engine, pure):
    env = dict(os.environ)
    if pure:
        env["NME_PURE_PYTHON"] = "1"
    code = SOLVE_SNIPPET.format(K=K, N=N, seed=seed, eps=eps, engine=engine)
    out = subprocess.run([sys.executable, "-c", code], env=env, check=True,
                         capture_output=True, text=True).stdout.split()
    return float(out[0]) * 1e6, int(out[1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--K", type=int, default=16)
    ap.add_argument("--N", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--inner", type=int, default=200)
    ap.add_argument("--eps", type=float, default=1e-4)
    ap.add_argument("--out", default="bench_kernels.csv")
    args = ap.parse_args(argv)

    backends = [("python", _kernels_py)]
    if _kernels is not None:
        backends.insert(0, ("cython", _kernels))
    rows = []
    for case, fn in kernel_cases(args.K, args.N, args.seed).items():
        for name, mod in backends:
            t = timeit(lambda: fn(mod), args.repeats, args.inner)
            rows.append([case, name, t.mean(), t.std(), t.min(), t.max(), ""])
            print(f"{case:28s} {name:7s} {t.min():10.2f} us")

    # continuation: compiled loop, Python loop on compiled norms, fully pure
    runs = [("solve_quadratic", "compiled", "auto", False),
            ("solve_quadratic", "python_loop", "python", False),
            ("solve_quadratic", "pure_python", "python", True)]
    for case, label, engine, pure in runs:
        if engine == "auto" and _kernels is None:
            continue
        res = [solve_case(args.K, args.N, args.seed, args.eps, engine, pure)
               for _ in range(min(args.repeats, 3))]
        t = np.array([r[0] for r in res])
        steps = res[0][1]
        rows.append([case, label, t.mean(), t.std(), t.min(), t.max(), steps])
        print(f"{case:28s} {label:11s} {t.min() / 1e3:10.1f} ms  ({steps} attempts)")

    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["case", "backend", "mean_us", "sd_us", "min_us", "max_us", "attempts"])
        w.writerows(rows)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
