#!/usr/bin/env python3
"""Compare the numba kernels against the pure-numpy fallback.

Times the pairwise similarity matrix and single-query scoring at a few
corpus sizes. Kernels are warmed first so JIT compilation never lands
inside a timed region.

    python3 benchmarks/bench_kernels.py
"""

import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from devinv import kernels  # noqa: E402

SHAPES = [(64, 64), (512, 256), (2000, 1536)]
REPEATS = 5


def best_of(fn, repeats=REPEATS):
    timings = []
    for _ in range(repeats):
        started = time.perf_counter()
        fn()
        timings.append(time.perf_counter() - started)
    return min(timings)


def main() -> None:
    backends = ["numpy"] + (["numba"] if kernels.HAVE_NUMBA else [])
    if not kernels.HAVE_NUMBA:
        print("numba not importable; timing the numpy fallback only")
    kernels.warmup()

    rng = np.random.default_rng(0)
    print(f"{'shape':>14}  {'op':<16}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for n, dim in SHAPES:
        vectors = rng.standard_normal((n, dim))
        norms = np.linalg.norm(vectors, axis=1)
        query = rng.standard_normal(dim)
        qnorm = float(np.linalg.norm(query))

        ops = {
            "pairwise_cosine": lambda b: kernels.pairwise_cosine(vectors, norms, backend=b),
            "cosine_scores": lambda b: kernels.cosine_scores(vectors, norms, query, qnorm, backend=b),
            "l2_distances": lambda b: kernels.l2_distances(vectors, query, backend=b),
        }
        for name, op in ops.items():
            times = {b: best_of(lambda: op(b)) for b in backends}
            row = f"{f'{n}x{dim}':>14}  {name:<16}"
            for b in backends:
                row += f"{times[b] * 1e3:>10.2f}ms"
            if len(backends) == 2:
                row += f"{times['numpy'] / times['numba']:>9.2f}x"
            print(row)

        # both backends agree to rounding
        if len(backends) == 2:
            reference = kernels.pairwise_cosine(vectors, norms, backend="numpy")
            jitted = kernels.pairwise_cosine(vectors, norms, backend="numba")
            assert np.allclose(reference, jitted, atol=1e-12, rtol=0)


if __name__ == "__main__":
    main()
