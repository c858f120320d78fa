"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Both backends produce identical output; this checks that as well.
"""
import argparse
import timeit

import numpy as np

from sketchspec import rng


def cases():
    key = rng.derive_key(12345, rng.SIGN)
    cdf = np.cumsum(np.full(4096, 1 / 4096))
    cdf[-1] = 1.0
    return {
        "fill_words 1e6": lambda k: k.fill_words(key, 0, np.empty(1_000_000, dtype=np.uint64)),
        "fill_uniform 1e6": lambda k: k.fill_uniform(key, 0, np.empty(1_000_000)),
        "fill_signs 400x8192": lambda k: k.fill_signs(key, 0.05, np.empty((400, 8192))),
        "sample_indices 1e5 of 4096": lambda k: k.sample_indices(key, cdf, np.empty(100_000, dtype=np.int64)),
    }


def outputs_match(a, b):
    key = rng.derive_key(7, rng.GAUSS)
    for shape in ((3, 5), (64,), (1000, 7)):
        x, y = np.empty(shape), np.empty(shape)
        a.fill_signs(key, 0.5, x)
        b.fill_signs(key, 0.5, y)
        if not np.array_equal(x, y):
            return False
    u, v = np.empty(1001), np.empty(1001)
    a.fill_uniform(key, 3, u)
    b.fill_uniform(key, 3, v)
    cdf = np.cumsum(np.arange(1.0, 101.0))
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    i, j = np.empty(5000, dtype=np.int64), np.empty(5000, dtype=np.int64)
    a.sample_indices(key, cdf, i)
    b.sample_indices(key, cdf, j)
    return bool(np.array_equal(u, v) and np.array_equal(i, j))


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    py = rng.get_backend("python")
    try:
        cy = rng.get_backend("cython")
    except ImportError:
        print("compiled kernels not built; nothing to compare")
        return
    print(f"identical output: {outputs_match(py, cy)}")
    print(f"{'kernel':30s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn in cases().items():
        tp = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat))
        tc = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat))
        print(f"{name:30s} {tp * 1e3:10.2f} {tc * 1e3:10.2f} {tp / tc:8.1f}")


if __name__ == "__main__":
    main()
