"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 3] [--trials 1000000]

Times exhaustive enumeration over GF(2), GF(3), GF(4) and Monte Carlo runs on
the butterfly network for every available backend, and checks that the
backends return identical results.
"""

from __future__ import annotations

import argparse
import time
from fractions import Fraction

from rlnclab import kernels
from rlnclab.field import field_create
from rlnclab.network import build_butterfly
from rlnclab.probability import ErasureModel, enumerate_exact, monte_carlo


def best_of(repeat, fn):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--trials", type=int, default=1_000_000)
    ap.add_argument("--skip-gf4-python", action="store_true", help="skip the slow numpy GF(4) enumeration")
    args = ap.parse_args(argv)

    spec = build_butterfly()
    backends = sorted(kernels.available_backends())
    fields = {2: field_create(2), 3: field_create(3), 4: field_create(2, 2)}
    print(f"backends: {', '.join(backends)}; workers: {kernels.worker_count()}")
    print(f"{'task':<34}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")

    def row(label, make):
        cells, results = [], []
        for b in backends:
            if args.skip_gf4_python and b == "python" and "GF(4)" in label and "enumerate" in label:
                cells.append(None)
                continue
            t, out = best_of(args.repeat if "enumerate GF(4)" not in label else 1, make(b))
            cells.append(t)
            results.append(out)
        same = all(r == results[0] for r in results)
        timed = dict(zip(backends, cells))
        speed = ""
        if timed.get("cython") and timed.get("python"):
            speed = f"{timed['python'] / timed['cython']:.1f}x"
        text = "".join(f"{'-':>12}" if c is None else f"{c:>11.3f}s" for c in cells)
        print(f"{label:<34}{text}{speed:>10}" + ("" if same else "  MISMATCH"))

    for q, f in fields.items():
        row(f"enumerate GF({q}) q^12 codes", lambda b, f=f: lambda: enumerate_exact(spec, f, backend=b))
    for q, f in fields.items():
        for p in (Fraction(0), Fraction(1, 10)):
            row(
                f"simulate GF({q}) p={p} {args.trials:.0e} trials",
                lambda b, f=f, p=p: lambda: monte_carlo(spec, f, ErasureModel(p), args.trials, 1, backend=b),
            )


if __name__ == "__main__":
    main()
