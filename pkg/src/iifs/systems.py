"""Bundled digit systems: Gauss, Lueroth, quadratic Gauss, and
generalized-Lueroth (GLS) families, plus the CLI selector grammar.

Digit indexing convention: branches are numbered 1, 2, ... in the order the
inducing map visits them.  For the Lueroth system this index is one less than
the classical Lueroth digit floor(1/x)+1; the branch numbered n is the affine
map onto [1/(n+1), 1/n], so round-tripping digits through fundamental
intervals is the identity.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable

import numpy as np

from .core import Branch, IifsSystem, XiSequence
from .errors import AmbiguousPointError, HorizonError, InvalidInputError
from .ratmath import RatInterval

ZERO = Fraction(0)
ONE = Fraction(1)


# ---------------------------------------------------------------------------
# Gauss: f_n(x) = 1/(x+n), the continued-fraction system.


def _gauss_branch(n: int) -> Branch:
    return Branch("mobius", (0, 1, 1, n))


def _gauss_induce(x: Fraction) -> tuple[int, Fraction]:
    inv = 1 / x
    if inv.denominator == 1:
        raise AmbiguousPointError(f"{x} is a fundamental-interval endpoint")
    d = inv.numerator // inv.denominator
    return d, inv - d


def gauss_system() -> IifsSystem:
    """Continued fractions: digits floor(1/x), xi_n = n^2, m = 2."""
    return IifsSystem(
        name="gauss",
        branch_factory=_gauss_branch,
        xi=XiSequence(lambda n: n * n, "n^2", power_exponent=Fraction(2)),
        m=2,
        rho=Fraction(1, 2),
        kappa=Fraction(4),
        c1=Fraction(1, 4),
        c2=Fraction(1),
        induce_fn=_gauss_induce,
        kernel_spec=("mobius-unit",),
        vector_eval=lambda n, x: 1.0 / (x + n),
        vector_deriv=lambda n, x: -1.0 / (x + n) ** 2,
        description="continued-fraction digits",
    )


# ---------------------------------------------------------------------------
# Lueroth: f_n(x) = x/(n(n+1)) + 1/(n+1), affine onto [1/(n+1), 1/n].


def _luroth_branch(n: int) -> Branch:
    return Branch("affine", (Fraction(1, n * (n + 1)), Fraction(1, n + 1)))


def _luroth_induce(x: Fraction) -> tuple[int, Fraction]:
    inv = 1 / x
    if inv.denominator == 1:
        raise AmbiguousPointError(f"{x} is a fundamental-interval endpoint")
    d = inv.numerator // inv.denominator
    return d, (x - Fraction(1, d + 1)) * d * (d + 1)


def luroth_system() -> IifsSystem:
    """Lueroth series: branch n covers [1/(n+1), 1/n], xi_n = n(n+1), m = 1."""
    return IifsSystem(
        name="luroth",
        branch_factory=_luroth_branch,
        xi=XiSequence(lambda n: n * (n + 1), "n(n+1)"),
        m=1,
        rho=Fraction(1, 2),
        kappa=Fraction(1),
        c1=Fraction(1),
        c2=Fraction(1),
        induce_fn=_luroth_induce,
        kernel_spec=("affine",),
        vector_eval=lambda n, x: x / (n * (n + 1)) + 1.0 / (n + 1),
        vector_deriv=lambda n, x: 1.0 / (n * (n + 1)) + 0.0 * x,
        description="Lueroth series digits (branch index = floor(1/x))",
    )


# ---------------------------------------------------------------------------
# Quadratic Gauss: P(x) = x^2 + p x + q, F(t) = q/(P(t)+t), branch n is
# F(x + n - 1).  For p = q = 1 this is f_n(x) = 1/(x+n)^2.


def quadratic_gauss_system(p=1, q=1) -> IifsSystem:
    """Quadratic analogue of the Gauss system; inverse branches involve
    square roots, so digit extraction runs on outward interval enclosures."""
    p = Fraction(p)
    q = Fraction(q)
    if p < -1:
        raise InvalidInputError(f"quadratic spec needs p >= -1, got {p}")
    if q <= 0:
        raise InvalidInputError(f"quadratic spec needs q > 0, got {q}")

    def F(t: Fraction) -> Fraction:
        return q / (t * t + (p + 1) * t + q)

    def make_branch(n: int) -> Branch:
        shift = n - 1

        def f(x: Fraction) -> Fraction:
            return F(x + shift)

        def df(x: Fraction) -> Fraction:
            t = x + shift
            den = t * t + (p + 1) * t + q
            return -q * (2 * t + p + 1) / (den * den)

        return Branch("rational", (f, df))

    pf, qf = float(p), float(q)

    def vec_eval(n, x):
        t = x + n - 1.0
        return qf / (t * t + (pf + 1.0) * t + qf)

    def vec_deriv(n, x):
        t = x + n - 1.0
        den = t * t + (pf + 1.0) * t + qf
        return -qf * (2.0 * t + pf + 1.0) / (den * den)

    def digit_of_point(y: Fraction) -> int | None:
        """Branch index n with F(n) < y < F(n-1); None when y hits a boundary."""
        # Float guess for the inverse, then exact adjustment.
        yf = float(y)
        disc = (pf + 1.0) ** 2 - 4.0 * qf * (1.0 - 1.0 / max(yf, 1e-300))
        t = (-(pf + 1.0) + math.sqrt(max(disc, 0.0))) / 2.0
        n = max(1, int(t) + 1)
        while F(n) >= y:
            n += 1
        while n > 1 and F(n - 1) <= y:
            n -= 1
        if F(n) == y or F(n - 1) == y:
            return None
        return n

    def invert_branch(n: int, iv: RatInterval, prec: int) -> RatInterval:
        """Outward enclosure of f_n^{-1}(iv) within [0,1]; f_n is decreasing."""
        def preimage_low(value: Fraction) -> Fraction:
            # Largest dyadic t with f_n(t) >= value.
            lo, hi = ZERO, ONE
            br = make_branch(n)
            if br.eval(ZERO) < value:
                return ZERO
            for _ in range(prec):
                mid = (lo + hi) / 2
                if br.eval(mid) >= value:
                    lo = mid
                else:
                    hi = mid
            return lo

        def preimage_high(value: Fraction) -> Fraction:
            # Smallest dyadic t with f_n(t) <= value.
            lo, hi = ZERO, ONE
            br = make_branch(n)
            if br.eval(ONE) > value:
                return ONE
            for _ in range(prec):
                mid = (lo + hi) / 2
                if br.eval(mid) <= value:
                    hi = mid
                else:
                    lo = mid
            return hi

        return RatInterval(preimage_low(iv.hi), preimage_high(iv.lo))

    def induce_interval(iv: RatInterval, prec: int) -> tuple[int | None, RatInterval | None]:
        if iv.lo <= 0 or iv.hi >= 1:
            if iv.is_point():
                raise AmbiguousPointError(f"orbit left (0,1) at {iv.lo}")
            return None, None
        d_hi = digit_of_point(iv.lo)
        d_lo = digit_of_point(iv.hi)
        if d_hi is None or d_lo is None:
            if iv.is_point():
                raise AmbiguousPointError(
                    f"{iv.lo} is a fundamental-interval endpoint")
            return None, None
        if d_hi != d_lo:
            return None, None
        nxt = invert_branch(d_lo, iv, prec).round_outward(prec)
        return d_lo, RatInterval(max(nxt.lo, ZERO), min(nxt.hi, ONE))

    return IifsSystem(
        name=f"quadratic-gauss:{p},{q}",
        branch_factory=make_branch,
        xi=XiSequence(lambda n: n ** 3, "n^3", power_exponent=Fraction(3)),
        m=2,
        rho=Fraction(1, 2),
        kappa=Fraction(16),
        c1=Fraction(1, 4) if p == 1 and q == 1 else Fraction(1, 16),
        c2=Fraction(2) if p == 1 and q == 1 else Fraction(16),
        induce_interval_fn=induce_interval,
        kernel_spec=("quadratic", float(p), float(q)),
        vector_eval=vec_eval,
        vector_deriv=vec_deriv,
        description=f"quadratic Gauss maps, P(x) = x^2 + {p} x + {q}",
    )


# ---------------------------------------------------------------------------
# GLS: a right-to-left packing of [0,1) by intervals I_n = (l_n, r_n] of
# nonincreasing length; branch n is the affine surjection [0,1] -> [l_n, r_n],
# orientation-reversing when the n-th bit is 1.


class GlsSpec:
    """Interval lengths and orientation bits.  len_fn(n) must be positive,
    nonincreasing, and sum to 1 over all n >= 1."""

    def __init__(self, len_fn: Callable[[int], Fraction],
                 orient_fn: Callable[[int], int], label: str):
        self.len_fn = len_fn
        self.orient_fn = orient_fn
        self.label = label
        self._cum: list[Fraction] = [ZERO]

    def length(self, n: int) -> Fraction:
        val = Fraction(self.len_fn(n))
        if val <= 0:
            raise InvalidInputError(f"GLS length({n}) must be positive")
        return val

    def cumulative(self, n: int) -> Fraction:
        """Sum of the first n lengths."""
        while len(self._cum) <= n:
            k = len(self._cum)
            nxt = self._cum[-1] + self.length(k)
            if nxt > 1:
                raise InvalidInputError("GLS lengths sum past 1")
            self._cum.append(nxt)
        return self._cum[n]

    def endpoints(self, n: int) -> tuple[Fraction, Fraction]:
        """(l_n, r_n) with I_n = (l_n, r_n] laid right to left."""
        return ONE - self.cumulative(n), ONE - self.cumulative(n - 1)


def dyadic_gls_spec() -> GlsSpec:
    return GlsSpec(lambda n: Fraction(1, 2 ** n), lambda n: 0, "dyadic")


def gls_spec_from_file(path: str) -> GlsSpec:
    """Parse `length orientation_bit` lines (exact fractions).  The listed
    intervals must leave positive remainder mass, which is completed by a
    halving geometric tail with orientation 0 so the digit alphabet stays
    infinite."""
    lengths: list[Fraction] = []
    orients: list[int] = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise InvalidInputError(f"bad GLS line: {raw!r}")
            lengths.append(Fraction(parts[0]))
            orients.append(int(parts[1]))
    if not lengths:
        raise InvalidInputError(f"GLS file {path} lists no intervals")
    if any(b not in (0, 1) for b in orients):
        raise InvalidInputError("orientation bits must be 0 or 1")
    if any(lengths[i] < lengths[i + 1] for i in range(len(lengths) - 1)):
        raise InvalidInputError("GLS lengths must be nonincreasing")
    total = sum(lengths)
    if total >= 1:
        raise InvalidInputError(
            "listed GLS lengths must sum to less than 1; the geometric tail "
            "supplies the remaining mass")
    remainder = 1 - total
    if remainder / 2 > lengths[-1]:
        raise InvalidInputError(
            "remainder too large: tail would break monotonicity")
    k = len(lengths)

    def len_fn(n: int) -> Fraction:
        if n <= k:
            return lengths[n - 1]
        return remainder / (2 ** (n - k))

    def orient_fn(n: int) -> int:
        return orients[n - 1] if n <= k else 0

    return GlsSpec(len_fn, orient_fn, f"file:{path}")


_GLS_MAX_DIGIT = 10 ** 6


def gls_system(spec: GlsSpec, *, max_digit: int = _GLS_MAX_DIGIT) -> IifsSystem:
    def make_branch(n: int) -> Branch:
        l, r = spec.endpoints(n)
        if spec.orient_fn(n):
            return Branch("affine", (-(r - l), r))
        return Branch("affine", (r - l, l))

    def induce(x: Fraction) -> tuple[int, Fraction]:
        target = ONE - x
        n = 1
        while spec.cumulative(n) <= target:
            n += 1
            if n > max_digit:
                raise HorizonError(f"digit of {x} exceeds {max_digit}")
        l, r = spec.endpoints(n)
        if x == l or x == r:
            raise AmbiguousPointError(f"{x} is a fundamental-interval endpoint")
        if spec.orient_fn(n):
            return n, (r - x) / (r - l)
        return n, (x - l) / (r - l)

    def vec_eval(n, x):
        n_arr = np.atleast_1d(np.asarray(n))
        top = int(n_arr.max())
        spec.cumulative(top)
        cums = np.array([float(c) for c in spec._cum[: top + 1]])
        idx = n_arr.astype(int)
        l = 1.0 - cums[idx]
        r = 1.0 - cums[idx - 1]
        sign = np.array([1.0 - 2.0 * spec.orient_fn(int(k)) for k in idx.ravel()]).reshape(idx.shape)
        slope = (r - l) * sign
        inter = np.where(sign > 0, l, r)
        return slope * x + inter

    def vec_deriv(n, x):
        n_arr = np.atleast_1d(np.asarray(n))
        top = int(n_arr.max())
        spec.cumulative(top)
        cums = np.array([float(c) for c in spec._cum[: top + 1]])
        idx = n_arr.astype(int)
        l = 1.0 - cums[idx]
        r = 1.0 - cums[idx - 1]
        sign = np.array([1.0 - 2.0 * spec.orient_fn(int(k)) for k in idx.ravel()]).reshape(idx.shape)
        return (r - l) * sign + 0.0 * x

    first_len = spec.length(1)
    return IifsSystem(
        name=f"gls:{spec.label}",
        branch_factory=make_branch,
        xi=XiSequence(lambda n: 1 / spec.length(n), f"1/length ({spec.label})"),
        m=1,
        rho=first_len,
        kappa=Fraction(1),
        c1=Fraction(1),
        c2=Fraction(1),
        induce_fn=induce,
        kernel_spec=("affine",),
        vector_eval=vec_eval,
        vector_deriv=vec_deriv,
        description=f"generalized Lueroth series, {spec.label}",
    )


# ---------------------------------------------------------------------------
# Selector grammar used by the CLI:
#   gauss | luroth | quadratic-gauss:p,q | gls:dyadic | gls:file=<path>


def parse_system(selector: str) -> IifsSystem:
    sel = selector.strip()
    if sel == "gauss":
        return gauss_system()
    if sel == "luroth":
        return luroth_system()
    if sel == "quadratic-gauss":
        return quadratic_gauss_system()
    if sel.startswith("quadratic-gauss:"):
        args = sel.split(":", 1)[1]
        parts = args.split(",")
        if len(parts) != 2:
            raise InvalidInputError(
                f"quadratic-gauss selector needs p,q; got {selector!r}")
        return quadratic_gauss_system(Fraction(parts[0]), Fraction(parts[1]))
    if sel == "gls:dyadic":
        return gls_system(dyadic_gls_spec())
    if sel.startswith("gls:file="):
        return gls_system(gls_spec_from_file(sel.split("=", 1)[1]))
    raise InvalidInputError(f"unknown system selector {selector!r}")


BUILTIN_SELECTORS = ("gauss", "luroth", "quadratic-gauss:p,q", "gls:dyadic",
                     "gls:file=<path>")
