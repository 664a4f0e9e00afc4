"""Benchmark the hot normal-variate kernel: numba JIT vs pure-numpy fallback.

Run:  python3 benchmarks/bench_kernels.py [--count 2000000] [--repeats 5]

The same counter-based generator backs both paths, so the uniform stage is
bit-identical; this script reports wall time and the max absolute deviation
after the inverse-CDF transform (expected ~1e-15, libm vs vectorized ulp).
"""

import argparse
import time

import numpy as np

from wobble import _accel


def bench(fn, seed, stream, count, repeats):
    fn(seed, stream, count)  # warm-up (JIT compile / cache touch)
    times = []
    for r in range(repeats):
        t0 = time.perf_counter()
        out = fn(seed, stream + r + 1, count)
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--count", type=int, default=2_000_000)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    t_np, out_np = bench(_accel.standard_normals_numpy, args.seed, 0,
                         args.count, args.repeats)
    rate_np = args.count / t_np / 1e6
    print(f"numpy fallback : {t_np * 1e3:8.2f} ms  ({rate_np:7.1f} M variates/s)")

    if not _accel.HAVE_NUMBA:
        print("numba backend  : unavailable (numba not importable or disabled"
              " via WOBBLE_NO_NUMBA)")
        return

    t_nb, out_nb = bench(_accel.standard_normals_numba, args.seed, 0,
                         args.count, args.repeats)
    rate_nb = args.count / t_nb / 1e6
    print(f"numba kernel   : {t_nb * 1e3:8.2f} ms  ({rate_nb:7.1f} M variates/s)")
    print(f"speedup        : {t_np / t_nb:8.2f}x")
    print(f"max |delta|    : {np.abs(out_np - out_nb).max():.3e}")


if __name__ == "__main__":
    main()
