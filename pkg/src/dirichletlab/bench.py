"""Benchmark the compiled distance-covariance kernel against the numpy
fallback: observed statistics and permutation sweeps at a few sizes.

Run with: python -m dirichletlab.bench [--sizes 500,2000,5000] [--perms 100]
"""

import argparse
import time

import numpy as np

from . import _dcov
from . import _dcov_py


def _available_backends():
    backends = {"python": _dcov_py.pair_sum}
    try:
        from . import _fastdcov

        backends["compiled"] = _fastdcov.pair_sum
    except ImportError:
        pass
    return backends


def _run_sweep(pair_sum, n, n_perm, rng):
    x = rng.normal(size=(n, 1))
    y = rng.normal(size=(n, 2))
    a = _dcov.BlockPre(x)
    b = _dcov.BlockPre(y)
    perms = np.stack([rng.permutation(n) for _ in range(n_perm)]).astype(np.int64)
    original = _dcov._pair_sum
    _dcov._pair_sum = pair_sum
    try:
        start = time.perf_counter()
        stat = _dcov.dcov_sq(a, b)
        mid = time.perf_counter()
        stats = _dcov.perm_stats(a, b, perms)
        end = time.perf_counter()
    finally:
        _dcov._pair_sum = original
    return stat, float(stats.sum()), mid - start, end - mid


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="500,2000,5000")
    parser.add_argument("--perms", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",")]
    backends = _available_backends()
    if "compiled" not in backends:
        print("note: compiled kernel unavailable; timing the fallback only")
    print(f"{'n':>6} {'backend':>9} {'stat (s)':>10} {'sweep (s)':>10} "
          f"{'per-perm (ms)':>14}")
    reference = {}
    for n in sizes:
        for name, fn in backends.items():
            rng = np.random.default_rng(args.seed)
            stat, checksum, t_stat, t_sweep = _run_sweep(fn, n, args.perms, rng)
            reference.setdefault(n, (stat, checksum))
            ref_stat, ref_sum = reference[n]
            drift = max(abs(stat - ref_stat), abs(checksum - ref_sum))
            note = "" if drift < 1e-9 * max(1.0, abs(ref_sum)) else "  MISMATCH"
            print(f"{n:>6} {name:>9} {t_stat:>10.4f} {t_sweep:>10.4f} "
                  f"{1000.0 * t_sweep / args.perms:>14.3f}{note}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
