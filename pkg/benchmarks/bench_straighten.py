"""Compare the compiled and pure-Python PBW straightening kernels.

    python benchmarks/bench_straighten.py [--words 400] [--length 8] [--repeat 3]

Each repeat starts from an empty memo so the timings measure straightening,
not cache lookups.  The two kernels must agree term by term.
"""
import argparse
import statistics
import time

import numpy as np

from rockland._kernels import BACKEND, PyStraightener
from rockland.lie import builtin


def random_words(alg, n, length, rng):
    return [tuple(int(x) for x in rng.integers(0, alg.dim, size=length)) for _ in range(n)]


def run(kernel_cls, alg, words):
    k = kernel_cls(alg.bracket_table(), alg.dim)
    t0 = time.perf_counter()
    out = [k.normal_form(w) for w in words]
    return time.perf_counter() - t0, out


def agree(a, b, tol=1e-12):
    for x, y in zip(a, b):
        for m in set(x) | set(y):
            if abs(x.get(m, 0) - y.get(m, 0)) > tol:
                return False
    return True


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--words", type=int, default=400)
    ap.add_argument("--length", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    try:
        from rockland._cstraighten import Straightener as CStraightener
    except ImportError:
        CStraightener = None
        print("compiled kernel not available; timing the Python kernel only")
    print(f"active backend: {BACKEND}")

    rng = np.random.default_rng(args.seed)
    print(f"{'algebra':<12} {'python [s]':>11} {'cython [s]':>11} {'speedup':>8}")
    for name in ("heisenberg1", "engel"):
        alg = builtin(name)
        words = random_words(alg, args.words, args.length, rng)
        py = [run(PyStraightener, alg, words) for _ in range(args.repeat)]
        t_py = statistics.median(t for t, _ in py)
        if CStraightener is None:
            print(f"{name:<12} {t_py:>11.4f} {'-':>11} {'-':>8}")
            continue
        cy = [run(CStraightener, alg, words) for _ in range(args.repeat)]
        t_cy = statistics.median(t for t, _ in cy)
        if not agree(py[0][1], cy[0][1]):
            raise SystemExit(f"kernels disagree on {name}")
        print(f"{name:<12} {t_py:>11.4f} {t_cy:>11.4f} {t_py / t_cy:>7.1f}x")


if __name__ == "__main__":
    main()
