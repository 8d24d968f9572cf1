"""Compare the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel with the best-of-N wall time for each backend
and the speedup. Both backends are checked to agree before timing.
"""
import argparse
import time

import numpy as np

from kportfolio import _kernels_py
from kportfolio.kernels import load_backend
from kportfolio.suite import SuiteSpec, generate_suite


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    f = generate_suite(SuiteSpec(dimension=10, n_functions=2, master_seed=3)).functions[0]
    xs = rng.uniform(-5, 5, size=(2000, 10))

    def combo(k):
        return lambda: [k.combo_eval(x, f.x_opt, f._ids, f._w, f._rot) for x in xs]

    finals = np.minimum.accumulate(rng.exponential(size=(10, 4000)) * 100, axis=1)[:, 79::80].copy()
    targets = np.logspace(2, -8, 51)

    def counts(k):
        return lambda: [k.eaf_counts(finals, targets) for _ in range(200)]

    af = np.sort(rng.random((10, 4, 50, 51)), axis=2)
    comp = np.ascontiguousarray(1.0 - af)
    miss = rng.random((10, 51))
    w = np.full(10, 0.1)

    def cand(k):
        return lambda: [k.candidate_perf(miss, comp, w, 50) for _ in range(200)]

    return [("combo_eval x2000 (d=10)", combo), ("eaf_counts x200", counts),
            ("candidate_perf x200 (k=10)", cand)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    try:
        fast = load_backend("cython")
    except ImportError:
        print("compiled extension not built; only the fallback is available")
        return
    slow = _kernels_py
    rng = np.random.default_rng(0)
    print(f"{'kernel':<28} {'cython':>10} {'python':>10} {'speedup':>8}")
    for name, make in cases(rng):
        a, b = make(fast)(), make(slow)()
        np.testing.assert_allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), rtol=1e-12, atol=1e-12)
        tc, tp = best_of(make(fast), args.repeat), best_of(make(slow), args.repeat)
        print(f"{name:<28} {tc * 1e3:>8.1f}ms {tp * 1e3:>8.1f}ms {tp / tc:>7.1f}x")


if __name__ == "__main__":
    main()
