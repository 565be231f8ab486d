"""Exponent of convergence for weighted digit series.

For an infinite digit set D = {d_1 < d_2 < ...} and a decay profile xi, the
convergence exponent is inf{s >= 0 : sum over D of xi_n^{-s} < infinity}.  It
equals limsup_k log k / log xi_{d_k}, which the estimator proxies by the sup
over the upper half-window k in [K/2, K]; small-k transients never enter.

Ratios whose value is an exact rational (k and xi_{d_k} powers of a common
base) are detected and returned exactly; otherwise the float sup is reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Callable

import numpy as np

from .core import XiSequence
from .errors import InvalidInputError, UndefinedRatioError
from .ratmath import exact_log_ratio

IDENTITY_XI = XiSequence(lambda n: n, "n", power_exponent=Fraction(1))

_CANDIDATE_CAP = 24


@dataclass(frozen=True)
class DigitSet:
    """Strictly increasing enumeration d_1 < d_2 < ... of positive integers.

    size is None for infinite sets; finite sets (from files) carry their
    cardinality and reject enumeration past it.  array_fn and log_fn are
    optional vectorized views used by window scans: array_fn(lo, hi) lists
    d_lo..d_hi, log_fn(ks) returns log d_k without materializing huge digits.
    """

    enumerate_fn: Callable[[int], int]
    contains_fn: Callable[[int], bool]
    description: str
    size: int | None = None
    array_fn: Callable[[int, int], np.ndarray] | None = None
    log_fn: Callable[[np.ndarray], np.ndarray] | None = None

    def digit(self, k: int) -> int:
        if k < 1:
            raise InvalidInputError(f"digit index must be >= 1, got {k}")
        if self.size is not None and k > self.size:
            raise InvalidInputError(
                f"digit set {self.description} has only {self.size} elements")
        return self.enumerate_fn(k)

    def contains(self, n: int) -> bool:
        return n >= 1 and self.contains_fn(n)

    def digit_logs(self, lo: int, hi: int) -> np.ndarray:
        """log d_k for k in [lo, hi], vectorized when possible."""
        ks = np.arange(lo, hi + 1)
        if self.log_fn is not None:
            return self.log_fn(ks)
        if self.array_fn is not None:
            return np.log(self.array_fn(lo, hi).astype(np.float64))
        return np.array([math.log(self.enumerate_fn(int(k))) for k in ks])


# ---------------------------------------------------------------------------
# Built-in digit sets.


def full_digits() -> DigitSet:
    return DigitSet(lambda k: k, lambda n: True, "all",
                    array_fn=lambda lo, hi: np.arange(lo, hi + 1, dtype=np.int64))


def square_digits() -> DigitSet:
    return DigitSet(lambda k: k * k, lambda n: isqrt(n) ** 2 == n, "squares",
                    array_fn=lambda lo, hi: np.arange(lo, hi + 1, dtype=np.int64) ** 2)


def _icbrt(n: int) -> int:
    r = round(n ** (1 / 3))
    while r ** 3 > n:
        r -= 1
    while (r + 1) ** 3 <= n:
        r += 1
    return r


def cube_digits() -> DigitSet:
    return DigitSet(lambda k: k ** 3, lambda n: _icbrt(n) ** 3 == n, "cubes",
                    array_fn=lambda lo, hi: np.arange(lo, hi + 1, dtype=np.int64) ** 3)


def power_digits(base: int) -> DigitSet:
    base = int(base)
    if base < 2:
        raise InvalidInputError(f"powers base must be >= 2, got {base}")

    def contains(n: int) -> bool:
        if n < base:
            return False
        while n % base == 0:
            n //= base
        return n == 1

    log_b = math.log(base)
    return DigitSet(lambda k: base ** k, contains, f"powers:{base}",
                    log_fn=lambda ks: ks * log_b)


def arithmetic_digits(a: int, q: int) -> DigitSet:
    a, q = int(a), int(q)
    if a < 1 or q < 1:
        raise InvalidInputError(f"arithmetic progression needs a,q >= 1")
    return DigitSet(
        lambda k: a + (k - 1) * q,
        lambda n: n >= a and (n - a) % q == 0,
        f"arithmetic:{a},{q}",
        array_fn=lambda lo, hi: a + (np.arange(lo, hi + 1, dtype=np.int64) - 1) * q)


_PRIMES = np.array([], dtype=np.int64)


def _sieve_up_to(limit: int) -> np.ndarray:
    mask = np.ones(limit + 1, dtype=bool)
    mask[:2] = False
    for p in range(2, isqrt(limit) + 1):
        if mask[p]:
            mask[p * p:: p] = False
    return np.nonzero(mask)[0].astype(np.int64)


def _ensure_primes(count: int) -> np.ndarray:
    global _PRIMES
    if len(_PRIMES) >= count:
        return _PRIMES
    # Upper bound p_k <= k (ln k + ln ln k) for k >= 6, padded.
    k = max(count, 6)
    bound = int(k * (math.log(k) + math.log(math.log(k))) * 1.2) + 100
    while True:
        _PRIMES = _sieve_up_to(bound)
        if len(_PRIMES) >= count:
            return _PRIMES
        bound *= 2


def prime_digits() -> DigitSet:
    def contains(n: int) -> bool:
        if n < 2:
            return False
        primes = _ensure_primes(16)
        if n <= int(primes[-1]):
            i = int(np.searchsorted(primes, n))
            return i < len(primes) and int(primes[i]) == n
        for p in range(2, isqrt(n) + 1):
            if n % p == 0:
                return False
        return True

    def array_fn(lo: int, hi: int) -> np.ndarray:
        return _ensure_primes(hi)[lo - 1: hi]

    return DigitSet(lambda k: int(_ensure_primes(k)[k - 1]), contains,
                    "primes", array_fn=array_fn)


def digits_from_file(path: str) -> DigitSet:
    values: list[int] = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            values.append(int(line))
    if not values:
        raise InvalidInputError(f"digit file {path} lists no digits")
    if any(v < 1 for v in values):
        raise InvalidInputError("digits must be positive integers")
    ordered = sorted(set(values))
    if len(ordered) != len(values):
        raise InvalidInputError("digit file repeats a digit")
    arr = np.array(ordered, dtype=np.int64)
    members = set(ordered)
    return DigitSet(
        lambda k: ordered[k - 1],
        lambda n: n in members,
        f"file:{path}",
        size=len(ordered),
        array_fn=lambda lo, hi: arr[lo - 1: hi])


def parse_digit_set(selector: str) -> DigitSet:
    sel = selector.strip()
    if sel == "all":
        return full_digits()
    if sel == "squares":
        return square_digits()
    if sel == "cubes":
        return cube_digits()
    if sel == "primes":
        return prime_digits()
    if sel.startswith("powers:"):
        return power_digits(int(sel.split(":", 1)[1]))
    if sel.startswith("arithmetic:"):
        parts = sel.split(":", 1)[1].split(",")
        if len(parts) != 2:
            raise InvalidInputError(
                f"arithmetic selector needs a,q; got {selector!r}")
        return arithmetic_digits(int(parts[0]), int(parts[1]))
    if sel.startswith("file="):
        return digits_from_file(sel.split("=", 1)[1])
    raise InvalidInputError(f"unknown digit-set selector {selector!r}")


# ---------------------------------------------------------------------------
# Estimators.


@dataclass(frozen=True)
class ExponentEstimate:
    value: float
    exact_value: Fraction | None
    horizon: int
    window: tuple[int, int]
    diagnostics: tuple[dict, ...]
    digit_set: str
    xi_label: str


def _flog(v) -> float:
    """log of a positive int or Fraction, safe for huge operands."""
    if isinstance(v, Fraction):
        return math.log(v.numerator) - math.log(v.denominator)
    return math.log(v)


def _window(K: int) -> tuple[int, int]:
    if K < 4:
        raise InvalidInputError(f"horizon K must be >= 4, got {K}")
    return max(2, -(-K // 2)), K


def _check_window_available(D: DigitSet, K: int) -> None:
    if D.size is not None and D.size < K:
        raise InvalidInputError(
            f"digit set {D.description} has {D.size} elements; horizon {K} "
            "needs at least that many")


def _exact_refine(D: DigitSet, xi: XiSequence, ks: np.ndarray,
                  ratios: np.ndarray, fmax: float) -> Fraction | None:
    """Exact value of the top ratios when k and xi_{d_k} share a power base."""
    order = np.argsort(ratios)[::-1][:_CANDIDATE_CAP]
    best: Fraction | None = None
    for i in order:
        if ratios[i] < fmax - 1e-9:
            break
        k = int(ks[i])
        xi_val = xi(D.digit(k))
        if isinstance(xi_val, Fraction):
            if xi_val.denominator != 1:
                continue
            xi_val = xi_val.numerator
        r = exact_log_ratio(k, xi_val)
        if r is not None and (best is None or r > best):
            best = r
    if best is not None and float(best) >= fmax - 1e-12:
        return best
    return None


def _sum_diagnostics(D: DigitSet, xi: XiSequence, value: float,
                     K: int) -> tuple[dict, ...]:
    """Partial-sum table at s around the estimate, with K/2 -> K growth."""
    out = []
    for factor in (Fraction(9, 10), Fraction(1), Fraction(11, 10)):
        s = float(factor) * value
        half = partial_sum(D, xi, s, K // 2)
        full = partial_sum(D, xi, s, K)
        out.append({
            "s": s,
            "sum_at_half_horizon": half,
            "sum_at_horizon": full,
            "growth_ratio": full / half if half > 0 else math.inf,
        })
    return tuple(out)


def _scan_estimate(D: DigitSet, xi: XiSequence, K: int) -> ExponentEstimate:
    lo, hi = _window(K)
    _check_window_available(D, K)
    ks = np.arange(lo, hi + 1)
    if xi is IDENTITY_XI:
        logxi = D.digit_logs(lo, hi)
    elif xi.power_exponent is not None:
        logxi = float(xi.power_exponent) * D.digit_logs(lo, hi)
    else:
        vals = [xi(D.digit(int(k))) for k in ks]
        if any((v if isinstance(v, Fraction) else Fraction(v)) <= 1 for v in vals):
            raise UndefinedRatioError(
                f"xi ({xi.label}) is <= 1 inside the window; the ratio "
                "log k / log xi is undefined there")
        logxi = np.array([_flog(v) for v in vals])
    if np.any(logxi <= 0):
        raise UndefinedRatioError(
            f"xi ({xi.label}) is <= 1 inside the window; the ratio "
            "log k / log xi is undefined there")
    ratios = np.log(ks) / logxi
    fmax = float(ratios.max())
    exact = _exact_refine(D, xi, ks, ratios, fmax)
    value = float(exact) if exact is not None else fmax
    diags = list(_sum_diagnostics(D, xi, value, K))
    if not xi.is_monotone:
        diags.append({"warning": "xi is not declared monotone; the window "
                                 "estimator assumes nondecreasing xi"})
    return ExponentEstimate(value=value, exact_value=exact, horizon=K,
                            window=(lo, hi), diagnostics=tuple(diags),
                            digit_set=D.description, xi_label=xi.label)


def tau_estimate(D: DigitSet, K: int) -> ExponentEstimate:
    """Exponent of convergence of sum over D of n^{-s}."""
    return _scan_estimate(D, IDENTITY_XI, K)


def s0_estimate(D: DigitSet, xi: XiSequence, K: int) -> ExponentEstimate:
    """Exponent of convergence of sum over D of xi_n^{-s}.

    For power-law profiles xi_n = n^d the estimator equals tau_estimate / d
    by algebra, and is computed that way so the identity holds exactly.
    """
    if xi.power_exponent is not None and xi is not IDENTITY_XI:
        d = xi.power_exponent
        if d <= 0:
            raise InvalidInputError(f"xi power exponent must be > 0, got {d}")
        base = tau_estimate(D, K)
        exact = base.exact_value / d if base.exact_value is not None else None
        value = float(exact) if exact is not None else base.value / float(d)
        return ExponentEstimate(
            value=value, exact_value=exact, horizon=K, window=base.window,
            diagnostics=_sum_diagnostics(D, xi, value, K),
            digit_set=D.description, xi_label=xi.label)
    return _scan_estimate(D, xi, K)


def partial_sum(D: DigitSet, xi: XiSequence, s, K: int) -> float:
    """Sum over k <= K of xi_{d_k}^{-s}, accumulated in log space so huge xi
    values cannot overflow."""
    s = float(s)
    if s < 0:
        raise InvalidInputError(f"s must be >= 0, got {s}")
    if K < 1:
        raise InvalidInputError(f"K must be >= 1, got {K}")
    _check_window_available(D, K)
    if s == 0:
        return float(K)
    if xi.power_exponent is not None:
        logxi = float(xi.power_exponent) * D.digit_logs(1, K)
    else:
        logxi = np.array([_flog(xi(D.digit(k))) for k in range(1, K + 1)])
    return float(np.exp(-s * logxi).sum())
