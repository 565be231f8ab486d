"""Exact rational arithmetic helpers: integer roots, dyadic enclosures of
rational powers, and comparisons against huge powers of two that must never be
materialized.

Every bound produced here is rigorous: lower bounds never exceed the true
value and upper bounds never undershoot it.  Callers that need a yes/no answer
from an enclosure straddling the threshold are expected to retry at a higher
precision and give up explicitly (see `PrecisionError`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import InvalidInputError, PrecisionError

DEFAULT_PRECISION = 64
MAX_PRECISION = 1 << 13


def iroot(n: int, k: int) -> int:
    """Floor of the k-th root of a nonnegative integer."""
    if n < 0 or k < 1:
        raise InvalidInputError(f"iroot needs n >= 0, k >= 1, got n={n}, k={k}")
    if n < 2 or k == 1:
        return n
    bl = n.bit_length()
    if k >= bl:
        return 1
    # Newton iteration on integers.  The seed comes from a float logarithm
    # (~2**-46 relative accuracy) nudged above the true root; a crude
    # power-of-two seed would need on the order of k steps for large k.
    top = min(bl, 64)
    lead = math.log2(n >> (bl - top))
    q, rem = divmod(bl - top, k)
    delta = (rem + lead) / k
    ip = q + int(delta)
    mant = int(math.ldexp(2.0 ** (delta - int(delta)), 52))
    mant += (mant >> 40) + 2
    x = (mant << (ip - 52) if ip >= 52 else mant >> (52 - ip)) + 1
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            break
        x = y
    while x ** k > n:
        x -= 1
    while (x + 1) ** k <= n:
        x += 1
    return x


def primitive_power(n: int) -> tuple[int, int]:
    """Write n >= 2 as base**exp with the largest possible exp.

    The returned base is primitive: it is not itself a perfect power.
    """
    if n < 2:
        raise InvalidInputError(f"primitive_power needs n >= 2, got {n}")
    for e in range(n.bit_length() - 1, 1, -1):
        r = iroot(n, e)
        if r ** e == n:
            return r, e
    return n, 1


def exact_log_ratio(a: int, b) -> Fraction | None:
    """log(a)/log(b) as an exact Fraction when a and b are powers of a common
    integer base, else None.

    `b` may be an int or an integer-valued Fraction.
    """
    if isinstance(b, Fraction):
        if b.denominator != 1:
            return None
        b = b.numerator
    if a < 2 or b < 2:
        return None
    if a == b:
        return Fraction(1)
    base, ea = primitive_power(a)
    # b must be a perfect power of the same primitive base.
    eb = round((b.bit_length() - 1) / max(base.bit_length() - 1, 1))
    for cand in {eb - 1, eb, eb + 1}:
        if cand >= 1 and base ** cand == b:
            return Fraction(ea, cand)
    return None


def floor_log2(x: Fraction) -> int:
    """Largest e with 2**e <= x, for x > 0."""
    if x <= 0:
        raise InvalidInputError("floor_log2 needs x > 0")
    p, q = x.numerator, x.denominator
    e = p.bit_length() - q.bit_length()
    # p.bit_length() - q.bit_length() is off by at most one.
    if (p >> e if e >= 0 else p << -e) >= q:
        return e
    return e - 1


def cmp_times_pow2(left: Fraction, m: int, right: Fraction) -> int:
    """Sign of left*2**m - right, without materializing 2**m when |m| is huge.

    left and right must be positive.
    """
    if left <= 0 or right <= 0:
        raise InvalidInputError("cmp_times_pow2 needs positive operands")
    f = right / left
    p, q = f.numerator, f.denominator
    # Compare 2**m against p/q using bit lengths first.
    if m >= p.bit_length() - q.bit_length() + 1:
        return 1
    if m <= p.bit_length() - q.bit_length() - 2:
        return -1
    # Window case: the shift amounts are tiny relative to p and q.
    lhs = q << m if m >= 0 else q
    rhs = p if m >= 0 else p << -m
    return (lhs > rhs) - (lhs < rhs)


def dyadic_below(x: Fraction, prec: int) -> Fraction:
    """Largest multiple of 2**-prec that is <= x."""
    scaled = x * (1 << prec)
    return Fraction(scaled.numerator // scaled.denominator, 1 << prec)


def dyadic_above(x: Fraction, prec: int) -> Fraction:
    """Smallest multiple of 2**-prec that is >= x."""
    scaled = x * (1 << prec)
    return Fraction(-((-scaled.numerator) // scaled.denominator), 1 << prec)


@dataclass(frozen=True, slots=True)
class RatInterval:
    """Closed interval with exact rational endpoints (an outward enclosure)."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise InvalidInputError(f"empty interval [{self.lo}, {self.hi}]")

    @staticmethod
    def point(x) -> "RatInterval":
        x = Fraction(x)
        return RatInterval(x, x)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi

    def __add__(self, other: "RatInterval") -> "RatInterval":
        return RatInterval(self.lo + other.lo, self.hi + other.hi)

    def __sub__(self, other: "RatInterval") -> "RatInterval":
        return RatInterval(self.lo - other.hi, self.hi - other.lo)

    def __mul__(self, other: "RatInterval") -> "RatInterval":
        vals = (self.lo * other.lo, self.lo * other.hi,
                self.hi * other.lo, self.hi * other.hi)
        return RatInterval(min(vals), max(vals))

    def scale(self, c) -> "RatInterval":
        c = Fraction(c)
        if c >= 0:
            return RatInterval(self.lo * c, self.hi * c)
        return RatInterval(self.hi * c, self.lo * c)

    def shift(self, c) -> "RatInterval":
        c = Fraction(c)
        return RatInterval(self.lo + c, self.hi + c)

    def reciprocal(self) -> "RatInterval":
        if self.lo <= 0 <= self.hi:
            raise InvalidInputError("reciprocal of an interval containing 0")
        return RatInterval(1 / self.hi, 1 / self.lo)

    def round_outward(self, prec: int) -> "RatInterval":
        return RatInterval(dyadic_below(self.lo, prec), dyadic_above(self.hi, prec))


def _root_enclosure(x: Fraction, q: int, prec: int) -> RatInterval:
    """Enclosure of x**(1/q) for x >= 0, q >= 1, with ~prec bits of relative
    precision regardless of the magnitude of x."""
    if x == 0:
        return RatInterval.point(0)
    if q == 1:
        return RatInterval.point(x)
    a, b = x.numerator, x.denominator
    # Grid step 2**-p is chosen near 2**-prec * x**(1/q).
    p = prec - floor_log2(x) // q
    shift = q * p
    if shift >= 0:
        scaled, exact_div = divmod(a << shift, b)
    else:
        scaled, exact_div = divmod(a, b << -shift)
    lo = iroot(scaled, q)
    exact = exact_div == 0 and lo ** q == scaled
    hi = lo if exact else lo + 1
    step = Fraction(1, 1 << p) if p >= 0 else Fraction(1 << -p)
    return RatInterval(lo * step, hi * step)


def pow_enclosure(x, e, prec: int = DEFAULT_PRECISION) -> RatInterval:
    """Rigorous enclosure of x**e for rational x >= 0 and rational e.

    Exact (a point interval) whenever x**e is rational along the computed
    route, e.g. integer e, or x a perfect power matching e's denominator.
    """
    x = Fraction(x)
    e = Fraction(e)
    if x < 0:
        raise InvalidInputError("pow_enclosure needs x >= 0")
    if x == 0:
        if e <= 0:
            raise InvalidInputError("0**e undefined for e <= 0")
        return RatInterval.point(0)
    if e < 0:
        return pow_enclosure(x, -e, prec).reciprocal()
    if e == 0 or x == 1:
        return RatInterval.point(1)
    p, q = e.numerator, e.denominator
    xp = x ** p
    if q == 1:
        return RatInterval.point(xp)
    return _root_enclosure(xp, q, prec)


def pow_interval(iv: RatInterval, e, prec: int = DEFAULT_PRECISION) -> RatInterval:
    """Enclosure of {t**e : t in iv} for iv >= 0 and rational e."""
    e = Fraction(e)
    if iv.lo < 0:
        raise InvalidInputError("pow_interval needs a nonnegative interval")
    lo_pow = pow_enclosure(iv.lo, e, prec)
    hi_pow = pow_enclosure(iv.hi, e, prec)
    if e >= 0:
        return RatInterval(lo_pow.lo, hi_pow.hi)
    return RatInterval(hi_pow.lo, lo_pow.hi)


def floor_pow(x, e) -> int:
    """Exact floor of x**e for rational x > 0 and rational e >= 0."""
    x = Fraction(x)
    e = Fraction(e)
    if x <= 0 or e < 0:
        raise InvalidInputError("floor_pow needs x > 0, e >= 0")
    p, q = e.numerator, e.denominator
    xp = x ** p
    a, b = xp.numerator, xp.denominator
    t = iroot(a // b, q)
    # t = floor((a/b)**(1/q)); correct the floor division slack.
    while (t + 1) ** q * b <= a:
        t += 1
    while t > 0 and t ** q * b > a:
        t -= 1
    return t


def compare_enclosures(lhs: RatInterval, rhs: RatInterval) -> int | None:
    """1 if lhs > rhs surely, -1 if lhs < rhs surely, 0 if equal points,
    None if the enclosures overlap (indeterminate)."""
    if lhs.lo > rhs.hi:
        return 1
    if lhs.hi < rhs.lo:
        return -1
    if lhs.is_point() and rhs.is_point() and lhs.lo == rhs.lo:
        return 0
    return None


def decide_ge(make_lhs, make_rhs, start_prec: int = DEFAULT_PRECISION,
              max_prec: int = MAX_PRECISION, context: str = "") -> bool:
    """Decide lhs >= rhs where both sides are enclosure factories prec -> RatInterval.

    Raises PrecisionError if still indeterminate at max_prec.
    """
    prec = start_prec
    while True:
        lhs = make_lhs(prec)
        rhs = make_rhs(prec)
        if lhs.lo >= rhs.hi:
            return True
        if lhs.hi < rhs.lo:
            return False
        if lhs.is_point() and rhs.is_point():
            return lhs.lo >= rhs.lo
        if prec >= max_prec:
            raise PrecisionError(
                f"comparison indeterminate at precision {prec}"
                + (f" ({context})" if context else ""))
        prec *= 2
