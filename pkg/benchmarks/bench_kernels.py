"""Compare the compiled sieve/box kernels against the pure-Python fallback.

Run from the repository root:

    python3 benchmarks/bench_kernels.py [--quick]

Both backends are imported side by side, so the numbers come from one
process regardless of the MASSCERT_PURE setting.
"""

import argparse
import time

import numpy as np

from masscert._kernels import pykernels

try:
    from masscert._kernels import ckernels
except ImportError:
    ckernels = None


def best_of(fn, repeats=3):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--quick", action="store_true", help="smaller workloads")
    args = ap.parse_args()

    n_sieve = 200_000 if args.quick else 1_000_000
    q_mask = 30_030 if args.quick else 510_510
    box = (16, 512, 3, 27) if args.quick else (16, 2048, 3, 33)

    cases = [
        (f"totient_sieve({n_sieve:_})", lambda k: k.totient_sieve(n_sieve)),
        (f"smallest_prime_factors({n_sieve:_})", lambda k: k.smallest_prime_factors(n_sieve)),
        (f"coprime_mask({q_mask:_})", lambda k: k.coprime_mask(q_mask)),
        (f"dyadic_box_ranges{box}", lambda k: k.dyadic_box_ranges(*box)),
    ]

    if ckernels is None:
        print("compiled backend unavailable; timing the pure backend only")

    width = max(len(name) for name, _ in cases)
    header = f"{'kernel':<{width}}  {'python':>10}  {'compiled':>10}  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, call in cases:
        t_py, r_py = best_of(lambda: call(pykernels))
        if ckernels is None:
            print(f"{name:<{width}}  {t_py * 1e3:9.1f}ms  {'-':>10}  {'-':>8}")
            continue
        t_c, r_c = best_of(lambda: call(ckernels))
        assert same(r_py, r_c), f"backend mismatch in {name}"
        print(
            f"{name:<{width}}  {t_py * 1e3:9.1f}ms  {t_c * 1e3:9.1f}ms  "
            f"{t_py / t_c:7.1f}x"
        )


if __name__ == "__main__":
    main()
