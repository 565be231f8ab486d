"""Float enumeration kernels with two interchangeable lanes.

The hot loops (cover-sum string enumeration) are compiled with numba when
available; a pure-numpy chunked fallback implements the identical odometer
order.  Set IIFS_NUMBA=0 to force the numpy lane.  Both lanes are importable
directly so benchmarks can compare them.

Within one lane, results are bit-reproducible: enumeration order is the fixed
mixed-radix odometer over per-position alphabets.
"""

from __future__ import annotations

import os

import numpy as np

_ENV_FLAG = os.environ.get("IIFS_NUMBA", "1")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAVE_NUMBA = False

    def njit(*args, **kwargs):  # type: ignore
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


def numba_enabled() -> bool:
    return HAVE_NUMBA and _ENV_FLAG != "0"


_CHUNK = 1 << 18


def _total_strings(widths: np.ndarray) -> int:
    total = 1
    for w in widths:
        total *= int(w)
    return total


# ---------------------------------------------------------------------------
# Mobius systems: the composed map is a 2x2 matrix; appending digit x
# right-multiplies by [[0,1],[1,x]], and the fundamental interval length is
# 1/(d(c+d)) for matrix [[a,b],[c,d]] (determinant is +-1 throughout).


@njit(cache=True)
def _mobius_odometer_njit(alphabets, widths, out):  # pragma: no cover - jit
    depth = widths.shape[0]
    idx = np.zeros(depth, np.int64)
    mats = np.empty((depth + 1, 4), np.float64)
    mats[0, 0] = 1.0
    mats[0, 1] = 0.0
    mats[0, 2] = 0.0
    mats[0, 3] = 1.0
    pos = 0
    count = 0
    while pos >= 0:
        if idx[pos] >= widths[pos]:
            idx[pos] = 0
            pos -= 1
            if pos >= 0:
                idx[pos] += 1
            continue
        x = float(alphabets[pos, idx[pos]])
        a = mats[pos, 0]
        b = mats[pos, 1]
        c = mats[pos, 2]
        d = mats[pos, 3]
        mats[pos + 1, 0] = b
        mats[pos + 1, 1] = a + b * x
        mats[pos + 1, 2] = d
        mats[pos + 1, 3] = c + d * x
        if pos == depth - 1:
            dd = mats[pos + 1, 3]
            cc = mats[pos + 1, 2]
            out[count] = -np.log(dd * (cc + dd))
            count += 1
            idx[pos] += 1
        else:
            pos += 1
    return count


def mobius_log_lengths_njit(alphabets: np.ndarray, widths: np.ndarray) -> np.ndarray:
    out = np.empty(_total_strings(widths), np.float64)
    _mobius_odometer_njit(np.ascontiguousarray(alphabets, np.int64),
                          np.ascontiguousarray(widths, np.int64), out)
    return out


def mobius_log_lengths_numpy(alphabets: np.ndarray, widths: np.ndarray) -> np.ndarray:
    depth = len(widths)
    total = _total_strings(widths)
    strides = np.ones(depth, np.int64)
    for j in range(depth - 2, -1, -1):
        strides[j] = strides[j + 1] * int(widths[j + 1])
    out = np.empty(total, np.float64)
    for start in range(0, total, _CHUNK):
        stop = min(start + _CHUNK, total)
        idx = np.arange(start, stop, dtype=np.int64)
        a = np.ones(stop - start)
        b = np.zeros(stop - start)
        c = np.zeros(stop - start)
        d = np.ones(stop - start)
        for j in range(depth):
            x = alphabets[j, (idx // strides[j]) % widths[j]].astype(np.float64)
            a, b = b, a + b * x
            c, d = d, c + d * x
        out[start:stop] = -np.log(d * (c + d))
    return out


def mobius_log_lengths(alphabets: np.ndarray, widths: np.ndarray) -> np.ndarray:
    if numba_enabled():
        return mobius_log_lengths_njit(alphabets, widths)
    return mobius_log_lengths_numpy(alphabets, widths)


def mobius_log_lengths_explicit(digits: np.ndarray) -> np.ndarray:
    """Log lengths for an explicit (n_strings, depth) digit matrix."""
    digits = np.asarray(digits, np.float64)
    n = digits.shape[0]
    a, b = np.ones(n), np.zeros(n)
    c, d = np.zeros(n), np.ones(n)
    for j in range(digits.shape[1]):
        x = digits[:, j]
        a, b = b, a + b * x
        c, d = d, c + d * x
    return -np.log(d * (c + d))


# ---------------------------------------------------------------------------
# Quadratic systems F(t) = q/(t^2 + (p+1)t + q), branch n is F(x + n - 1).
# The composed interval is tracked by its two endpoints; the kernel consumes
# positions deepest-first, so callers pass alphabets in reversed order.


@njit(cache=True)
def _quadratic_odometer_njit(pf, qf, alphabets, widths, out):  # pragma: no cover
    depth = widths.shape[0]
    idx = np.zeros(depth, np.int64)
    los = np.empty(depth + 1, np.float64)
    his = np.empty(depth + 1, np.float64)
    los[0] = 0.0
    his[0] = 1.0
    pos = 0
    count = 0
    while pos >= 0:
        if idx[pos] >= widths[pos]:
            idx[pos] = 0
            pos -= 1
            if pos >= 0:
                idx[pos] += 1
            continue
        x = float(alphabets[pos, idx[pos]])
        t1 = los[pos] + x - 1.0
        t2 = his[pos] + x - 1.0
        e1 = qf / (t1 * t1 + (pf + 1.0) * t1 + qf)
        e2 = qf / (t2 * t2 + (pf + 1.0) * t2 + qf)
        if e1 < e2:
            los[pos + 1] = e1
            his[pos + 1] = e2
        else:
            los[pos + 1] = e2
            his[pos + 1] = e1
        if pos == depth - 1:
            out[count] = np.log(his[pos + 1] - los[pos + 1])
            count += 1
            idx[pos] += 1
        else:
            pos += 1
    return count


def quadratic_log_lengths_njit(pf: float, qf: float, alphabets: np.ndarray,
                               widths: np.ndarray) -> np.ndarray:
    out = np.empty(_total_strings(widths), np.float64)
    _quadratic_odometer_njit(float(pf), float(qf),
                             np.ascontiguousarray(alphabets, np.int64),
                             np.ascontiguousarray(widths, np.int64), out)
    return out


def quadratic_log_lengths_numpy(pf: float, qf: float, alphabets: np.ndarray,
                                widths: np.ndarray) -> np.ndarray:
    depth = len(widths)
    total = _total_strings(widths)
    strides = np.ones(depth, np.int64)
    for j in range(depth - 2, -1, -1):
        strides[j] = strides[j + 1] * int(widths[j + 1])
    out = np.empty(total, np.float64)
    for start in range(0, total, _CHUNK):
        stop = min(start + _CHUNK, total)
        idx = np.arange(start, stop, dtype=np.int64)
        lo = np.zeros(stop - start)
        hi = np.ones(stop - start)
        for j in range(depth):
            x = alphabets[j, (idx // strides[j]) % widths[j]].astype(np.float64)
            t1 = lo + x - 1.0
            t2 = hi + x - 1.0
            e1 = qf / (t1 * t1 + (pf + 1.0) * t1 + qf)
            e2 = qf / (t2 * t2 + (pf + 1.0) * t2 + qf)
            lo = np.minimum(e1, e2)
            hi = np.maximum(e1, e2)
        out[start:stop] = np.log(hi - lo)
    return out


def quadratic_log_lengths(pf: float, qf: float, alphabets: np.ndarray,
                          widths: np.ndarray) -> np.ndarray:
    if numba_enabled():
        return quadratic_log_lengths_njit(pf, qf, alphabets, widths)
    return quadratic_log_lengths_numpy(pf, qf, alphabets, widths)


# ---------------------------------------------------------------------------
# Digit-chain scanning: enumerate every stream over per-position alphabets in
# odometer order (last position fastest) and count violations of per-position
# integer bounds (-1 marks an unconstrained position) or of integer product
# constraints prod stream[prod_pos[r, i]] ** prod_exp[i] <= prod_rhs[r].
# Callers guarantee every product stays below 2**62 so int64 suffices.


@njit(cache=True)
def _chain_scan_njit(alphabets, widths, bounds, prod_pos, prod_exp,
                     prod_rhs):  # pragma: no cover - jit
    depth = widths.shape[0]
    total = 1
    for j in range(depth):
        total *= widths[j]
    idx = np.zeros(depth, np.int64)
    stream = np.empty(depth, np.int64)
    for j in range(depth):
        stream[j] = alphabets[j, 0]
    count = 0
    first = np.int64(-1)
    for lin in range(total):
        bad = False
        for j in range(depth):
            if bounds[j] >= 0 and stream[j] > bounds[j]:
                bad = True
                break
        if not bad:
            for r in range(prod_pos.shape[0]):
                lhs = np.int64(1)
                for i in range(prod_pos.shape[1]):
                    base = stream[prod_pos[r, i]]
                    for _ in range(prod_exp[i]):
                        lhs *= base
                if lhs > prod_rhs[r]:
                    bad = True
                    break
        if bad:
            count += 1
            if first < 0:
                first = lin
        j = depth - 1
        while j >= 0:
            idx[j] += 1
            if idx[j] < widths[j]:
                stream[j] = alphabets[j, idx[j]]
                break
            idx[j] = 0
            stream[j] = alphabets[j, 0]
            j -= 1
    return count, first


def chain_scan_njit(alphabets: np.ndarray, widths: np.ndarray,
                    bounds: np.ndarray, prod_pos: np.ndarray,
                    prod_exp: np.ndarray,
                    prod_rhs: np.ndarray) -> tuple[int, int]:
    count, first = _chain_scan_njit(
        np.ascontiguousarray(alphabets, np.int64),
        np.ascontiguousarray(widths, np.int64),
        np.ascontiguousarray(bounds, np.int64),
        np.ascontiguousarray(prod_pos, np.int64),
        np.ascontiguousarray(prod_exp, np.int64),
        np.ascontiguousarray(prod_rhs, np.int64))
    return int(count), int(first)


def chain_scan_numpy(alphabets: np.ndarray, widths: np.ndarray,
                     bounds: np.ndarray, prod_pos: np.ndarray,
                     prod_exp: np.ndarray,
                     prod_rhs: np.ndarray) -> tuple[int, int]:
    depth = len(widths)
    total = _total_strings(widths)
    strides = np.ones(depth, np.int64)
    for j in range(depth - 2, -1, -1):
        strides[j] = strides[j + 1] * int(widths[j + 1])
    count = 0
    first = -1
    for start in range(0, total, _CHUNK):
        stop = min(start + _CHUNK, total)
        idx = np.arange(start, stop, dtype=np.int64)
        digits = np.empty((stop - start, depth), np.int64)
        for j in range(depth):
            digits[:, j] = alphabets[j, (idx // strides[j]) % widths[j]]
        bad = np.zeros(stop - start, dtype=bool)
        for j in range(depth):
            if bounds[j] >= 0:
                bad |= digits[:, j] > bounds[j]
        for r in range(prod_pos.shape[0]):
            lhs = np.ones(stop - start, np.int64)
            for i in range(prod_pos.shape[1]):
                lhs *= digits[:, prod_pos[r, i]] ** int(prod_exp[i])
            bad |= lhs > prod_rhs[r]
        c = int(bad.sum())
        if c and first < 0:
            first = start + int(np.argmax(bad))
        count += c
    return count, first


def chain_scan(alphabets: np.ndarray, widths: np.ndarray, bounds: np.ndarray,
               prod_pos: np.ndarray, prod_exp: np.ndarray,
               prod_rhs: np.ndarray) -> tuple[int, int]:
    if numba_enabled():
        return chain_scan_njit(alphabets, widths, bounds, prod_pos, prod_exp,
                               prod_rhs)
    return chain_scan_numpy(alphabets, widths, bounds, prod_pos, prod_exp,
                            prod_rhs)


IMPLEMENTATIONS = {
    "mobius_log_lengths": {
        "njit": mobius_log_lengths_njit,
        "numpy": mobius_log_lengths_numpy,
    },
    "quadratic_log_lengths": {
        "njit": quadratic_log_lengths_njit,
        "numpy": quadratic_log_lengths_numpy,
    },
    "chain_scan": {
        "njit": chain_scan_njit,
        "numpy": chain_scan_numpy,
    },
}
