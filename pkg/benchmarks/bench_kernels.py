"""Timing comparison of the two kernel lanes.

Every kernel in iifs.kernels.IMPLEMENTATIONS ships a compiled (njit) and a
pure-numpy implementation with identical enumeration order.  This script
builds one representative workload per kernel, times both lanes, and checks
that their outputs agree bitwise.

    python3 benchmarks/bench_kernels.py [--depth D] [--width W] [--repeats R]

The njit lane is warmed up (compiled) before timing.  Without numba installed
the njit column falls back to plain Python and will be slow; the table still
prints so the comparison stays honest.
"""

import argparse
import time

import numpy as np

from iifs.kernels import HAVE_NUMBA, IMPLEMENTATIONS


def grid_inputs(depth: int, width: int):
    """The same alphabet 1..width at every position."""
    alphabets = np.tile(np.arange(1, width + 1, dtype=np.int64), (depth, 1))
    widths = np.full(depth, width, np.int64)
    return alphabets, widths


def build_args(name: str, depth: int, width: int):
    alphabets, widths = grid_inputs(depth, width)
    if name == "mobius_log_lengths":
        return (alphabets, widths)
    if name == "quadratic_log_lengths":
        return (1.0, 1.0, alphabets, widths)
    if name == "chain_scan":
        # cap the last two positions and bound two digit products so both
        # rejection paths run
        bounds = np.full(depth, -1, np.int64)
        bounds[-1] = width - 1
        bounds[-2] = width - 1
        prod_pos = np.array([[0, 1], [1, 2]], np.int64)
        prod_exp = np.array([1, 2], np.int64)
        prod_rhs = np.array([width * width, width ** 3 // 2], np.int64)
        return (alphabets, widths, bounds, prod_pos, prod_exp, prod_rhs)
    raise KeyError(f"no benchmark workload for kernel {name!r}")


def time_lane(fn, args, repeats: int) -> tuple[float, object]:
    result = fn(*args)  # warmup; compiles the njit lane
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def agrees(a, b) -> bool:
    """Integer results must match exactly; float lanes to 1e-12, the same
    tolerance the test suite pins (enumeration order is shared, but the
    arithmetic orders differ by a last-place rounding)."""
    if isinstance(a, tuple):
        return tuple(a) == tuple(b)
    a, b = np.asarray(a), np.asarray(b)
    if a.dtype.kind == "f":
        return bool(np.allclose(a, b, rtol=0, atol=1e-12))
    return np.array_equal(a, b)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--depth", type=int, default=7,
                        help="string length (default 7)")
    parser.add_argument("--width", type=int, default=6,
                        help="alphabet size per position (default 6)")
    parser.add_argument("--repeats", type=int, default=3,
                        help="timed repetitions, best-of (default 3)")
    args = parser.parse_args()

    total = args.width ** args.depth
    print(f"workload: depth={args.depth} width={args.width} "
          f"({total} strings per kernel), best of {args.repeats}")
    print(f"numba available: {HAVE_NUMBA}")
    print()
    header = (f"{'kernel':<24} {'strings':>10} {'njit':>10} {'numpy':>10} "
              f"{'speedup':>8}  match")
    print(header)
    print("-" * len(header))
    for name, lanes in sorted(IMPLEMENTATIONS.items()):
        call_args = build_args(name, args.depth, args.width)
        t_jit, out_jit = time_lane(lanes["njit"], call_args, args.repeats)
        t_np, out_np = time_lane(lanes["numpy"], call_args, args.repeats)
        match = "yes" if agrees(out_jit, out_np) else "NO"
        speedup = t_np / t_jit if t_jit > 0 else float("inf")
        print(f"{name:<24} {total:>10} {t_jit:>9.4f}s {t_np:>9.4f}s "
              f"{speedup:>7.1f}x  {match}")


if __name__ == "__main__":
    main()
