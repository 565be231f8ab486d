"""Infinite iterated function systems on [0,1] as digit number systems.

A system is a countable family of injective branch maps f_1, f_2, ... from
[0,1] into [0,1] with disjoint open images, a composition length m at which
every m-fold composition contracts by rho, a declared distortion bound kappa,
and a decay profile xi controlling |f_n'| up to an epsilon of slack in the
exponent.  Digit strings encode nested fundamental intervals; points interior
to the limit set carry a unique digit stream.

Exact-rational systems evaluate everything in Fraction arithmetic.  Systems
whose inverse branches need radicals run in outward-interval mode: forward
images are enclosed between dyadic bounds that are rounded away from the true
interval, so every reported containment is rigorous.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    AmbiguousPointError,
    InvalidInputError,
)
from .ratmath import (
    DEFAULT_PRECISION,
    RatInterval,
    pow_enclosure,
)

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True, slots=True)
class Branch:
    """One branch map.  kind selects the representation:

    - "mobius": data = (a, b, c, d), f(x) = (a x + b) / (c x + d)
    - "affine": data = (slope, intercept)
    - "rational": data = (f, df) exact callables Fraction -> Fraction
    """

    kind: str
    data: tuple

    def eval(self, x: Fraction) -> Fraction:
        if self.kind == "mobius":
            a, b, c, d = self.data
            return Fraction(a * x + b, 1) / (c * x + d)
        if self.kind == "affine":
            s, t = self.data
            return s * x + t
        return self.data[0](x)

    def deriv(self, x: Fraction) -> Fraction:
        if self.kind == "mobius":
            a, b, c, d = self.data
            den = c * x + d
            return Fraction(a * d - b * c, 1) / (den * den)
        if self.kind == "affine":
            return self.data[0]
        return self.data[1](x)

    @property
    def increasing(self) -> bool:
        return self.deriv(Fraction(1, 2)) > 0

    def map_point(self, x: Fraction) -> Fraction:
        return self.eval(x)

    def map_interval(self, iv: RatInterval) -> RatInterval:
        lo, hi = self.eval(iv.lo), self.eval(iv.hi)
        if lo > hi:
            lo, hi = hi, lo
        return RatInterval(lo, hi)


@dataclass(frozen=True, slots=True)
class XiSequence:
    """Decay profile: xi(n) grows like the reciprocal branch derivative.

    power_exponent is set when xi(n) = n**d exactly; estimators exploit it.
    """

    fn: Callable[[int], Fraction | int]
    label: str
    power_exponent: Fraction | None = None
    is_monotone: bool = True

    def __call__(self, n: int) -> Fraction | int:
        return self.fn(n)


@dataclass(frozen=True)
class IifsSystem:
    """A digit number system.  rho/kappa/c1/c2 are declared constants; the
    verifiers in this module measure against them.  c1 and c2 must make the
    regularity sandwich valid for every epsilon >= 0."""

    name: str
    branch_factory: Callable[[int], Branch]
    xi: XiSequence
    m: int
    rho: Fraction
    kappa: Fraction
    c1: Fraction
    c2: Fraction
    arithmetic: str = "exact"  # "exact" | "outward"
    induce_fn: Callable[[Fraction], tuple[int, Fraction]] | None = None
    induce_interval_fn: Callable[[RatInterval, int], tuple[int | None, RatInterval | None]] | None = None
    vector_eval: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    vector_deriv: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    outward_prec: int = 192
    # Float-lane dispatch tag for enumeration kernels:
    # ("mobius-unit",) | ("quadratic", p, q) | ("affine",) | None.
    kernel_spec: tuple | None = None
    description: str = ""

    def branch(self, n: int) -> Branch:
        if n < 1:
            raise InvalidInputError(f"digits are positive integers, got {n}")
        return self.branch_factory(n)


DigitString = tuple[int, ...]


def validate_digits(digits: Sequence[int]) -> DigitString:
    out = tuple(int(d) for d in digits)
    if any(d < 1 for d in out):
        raise InvalidInputError(f"digit string must be positive, got {out}")
    return out


@dataclass(frozen=True, slots=True)
class FundamentalInterval:
    """Closed interval f_{a_1} o ... o f_{a_n}([0,1]).  When exact is False the
    endpoints are outward dyadic bounds enclosing the true interval."""

    digits: DigitString
    lo: Fraction
    hi: Fraction
    exact: bool = True

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    @property
    def depth(self) -> int:
        return len(self.digits)

    def as_interval(self) -> RatInterval:
        return RatInterval(self.lo, self.hi)

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi


def compose_map(system: IifsSystem, digits: Sequence[int], x) -> Fraction | RatInterval:
    """Evaluate f_{a_1} o ... o f_{a_n} at x.

    Returns a Fraction in exact mode and an outward RatInterval enclosure in
    outward mode.
    """
    digits = validate_digits(digits)
    x = Fraction(x)
    if not ZERO <= x <= ONE:
        raise InvalidInputError(f"x must lie in [0,1], got {x}")
    if system.arithmetic == "exact":
        for d in reversed(digits):
            x = system.branch(d).map_point(x)
        return x
    iv = RatInterval.point(x)
    for d in reversed(digits):
        iv = system.branch(d).map_interval(iv).round_outward(system.outward_prec)
    return iv


def fundamental_interval(system: IifsSystem, digits: Sequence[int]) -> FundamentalInterval:
    """Closed fundamental interval of a digit string (depth >= 1)."""
    digits = validate_digits(digits)
    if not digits:
        raise InvalidInputError("fundamental_interval needs at least one digit")
    iv = RatInterval(ZERO, ONE)
    exact = system.arithmetic == "exact"
    for d in reversed(digits):
        iv = system.branch(d).map_interval(iv)
        if not exact:
            iv = iv.round_outward(system.outward_prec)
    return FundamentalInterval(digits, iv.lo, iv.hi, exact)


def natural_projection(system: IifsSystem, digit_stream: Iterable[int],
                       depth_budget: int) -> FundamentalInterval:
    """Enclosure of the point coded by a digit stream, after consuming
    depth_budget digits.  The midpoint serves as the point estimate."""
    if depth_budget < 1:
        raise InvalidInputError("depth_budget must be >= 1")
    digits = tuple(itertools.islice(iter(digit_stream), depth_budget))
    if len(digits) < depth_budget:
        raise InvalidInputError(
            f"stream ended after {len(digits)} digits, needed {depth_budget}")
    return fundamental_interval(system, digits)


def digits_of(system: IifsSystem, x, depth: int, *, start_prec: int = 128,
              max_prec: int = 1 << 12) -> DigitString:
    """First `depth` digits of x under the system's inducing map.

    x must be interior: points on fundamental-interval boundaries raise
    AmbiguousPointError.  Outward-mode systems iterate an interval orbit and
    retry from scratch at doubled precision while the orbit enclosure is too
    wide to pin a digit.
    """
    if depth < 1:
        raise InvalidInputError("depth must be >= 1")
    x = Fraction(x)
    if not ZERO < x < ONE:
        raise InvalidInputError(f"x must lie in (0,1), got {x}")
    if system.induce_fn is not None:
        out = []
        y = x
        for _ in range(depth):
            d, y = system.induce_fn(y)
            out.append(d)
        return tuple(out)
    if system.induce_interval_fn is None:
        raise InvalidInputError(f"system {system.name} has no inducing map")
    prec = start_prec
    while True:
        out = []
        iv = RatInterval.point(x)
        ok = True
        for _ in range(depth):
            d, nxt = system.induce_interval_fn(iv, prec)
            if d is None:
                ok = False
                break
            out.append(d)
            iv = nxt
        if ok:
            return tuple(out)
        if prec >= max_prec:
            raise AmbiguousPointError(
                f"could not separate digits of {x} at precision {prec}")
        prec *= 2


# ---------------------------------------------------------------------------
# Axiom verifiers.  These are empirical falsifiers: they evaluate the declared
# constants on sampled digit strings and grids, exactly, and report the worst
# witness found.


@dataclass(frozen=True, slots=True)
class ContractionReport:
    m: int
    declared_rho: Fraction
    measured_sup: Fraction
    witness_digits: DigitString
    witness_x: Fraction
    passed: bool
    digit_horizon: int
    grid_size: int
    zero_derivative: bool = False


def _grid(grid_size: int) -> list[Fraction]:
    return [Fraction(k, grid_size) for k in range(grid_size + 1)]


def _chain_deriv(system: IifsSystem, digits: Sequence[int], x: Fraction) -> Fraction:
    """d/dx of f_{a_1} o ... o f_{a_n} at x, by the chain rule, exact."""
    val = Fraction(1)
    y = x
    for d in reversed(digits):
        br = system.branch(d)
        val *= br.deriv(y)
        y = br.map_point(y)
    return val


def verify_contraction(system: IifsSystem, *, grid_size: int = 16,
                       digit_horizon: int = 40,
                       refine_band: float = 1e-6) -> ContractionReport:
    """Measure sup |(f_{a_1} o ... o f_{a_m})'(x)| over all m-tuples with
    digits <= digit_horizon and x on a uniform grid.

    A vectorized float scan locates candidates; every candidate within
    refine_band of the float maximum (or of rho) is re-evaluated exactly, so
    the reported supremum and the pass/fail verdict are exact statements
    about the sampled set.
    """
    m = system.m
    grid = _grid(grid_size)
    tuples = list(itertools.product(range(1, digit_horizon + 1), repeat=m))
    use_float = system.vector_eval is not None and system.vector_deriv is not None
    candidates: list[tuple[int, ...]] = []
    zero_deriv = False
    if use_float:
        digit_arr = np.array(tuples, dtype=np.float64)
        gx = np.array([float(g) for g in grid])
        best = np.full(len(tuples), -np.inf)
        chunk = 200_000
        for s in range(0, len(tuples), chunk):
            block = digit_arr[s:s + chunk]
            acc = np.ones((block.shape[0], gx.size))
            xs = np.broadcast_to(gx, (block.shape[0], gx.size)).copy()
            for j in range(m - 1, -1, -1):
                dj = block[:, j][:, None]
                acc *= np.abs(system.vector_deriv(dj, xs))
                xs = system.vector_eval(dj, xs)
            best[s:s + chunk] = acc.max(axis=1)
        fmax = float(best.max())
        if fmax <= 0:
            zero_deriv = True
        band = max(refine_band, refine_band * fmax)
        # Refine everything near the float maximum (to report the exact sup)
        # and everything near or above rho (to decide pass/fail exactly).
        keep = np.nonzero(best >= min(fmax, float(system.rho)) - band)[0]
        candidates = [tuples[int(i)] for i in keep]
    else:
        candidates = tuples
    measured = Fraction(-1)
    witness = (tuples[0], grid[0])
    for tup in candidates:
        for x in grid:
            v = abs(_chain_deriv(system, tup, x))
            if v == 0:
                zero_deriv = True
            if v > measured:
                measured = v
                witness = (tup, x)
    return ContractionReport(
        m=m, declared_rho=system.rho, measured_sup=measured,
        witness_digits=witness[0], witness_x=witness[1],
        passed=(not zero_deriv) and measured <= system.rho,
        digit_horizon=digit_horizon, grid_size=grid_size,
        zero_derivative=zero_deriv)


@dataclass(frozen=True, slots=True)
class DistortionReport:
    depth: int
    declared_kappa: Fraction
    measured: Fraction
    witness_digits: DigitString
    passed: bool
    strings_checked: int


def estimate_distortion(system: IifsSystem, *, depth: int = 6,
                        samples: int = 120, digit_cap: int = 12,
                        grid_size: int = 8, seed: int = 0) -> DistortionReport:
    """Largest observed ratio sup_x |f_a'(x)| / inf_x |f_a'(x)| over sampled
    digit strings up to the given depth.  Exact arithmetic throughout."""
    rng = random.Random(seed)
    grid = _grid(grid_size)
    strings: set[DigitString] = set()
    for d in range(1, min(digit_cap, 4) + 1):
        for n in range(1, depth + 1):
            strings.add((d,) * n)
    while len(strings) < samples:
        n = rng.randint(1, depth)
        strings.add(tuple(rng.randint(1, digit_cap) for _ in range(n)))
    measured = Fraction(0)
    witness: DigitString = ()
    for s in sorted(strings):
        vals = [abs(_chain_deriv(system, s, x)) for x in grid]
        top, bot = max(vals), min(vals)
        if bot == 0:
            raise InvalidInputError(f"zero derivative on string {s}")
        ratio = top / bot
        if ratio > measured:
            measured, witness = ratio, s
    return DistortionReport(
        depth=depth, declared_kappa=system.kappa, measured=measured,
        witness_digits=witness, passed=measured <= system.kappa,
        strings_checked=len(strings))


@dataclass(frozen=True, slots=True)
class RegularityFit:
    epsilon: Fraction
    c1: Fraction
    c2: Fraction
    digit_horizon: int
    grid_size: int
    witness_low: tuple[int, Fraction]
    witness_high: tuple[int, Fraction]


def fit_regularity(system: IifsSystem, epsilon, *, digit_horizon: int = 100,
                   grid_size: int = 16,
                   prec: int = DEFAULT_PRECISION) -> RegularityFit:
    """Largest c1 and smallest c2 with
    c1 / xi_n^(1+eps) <= |f_n'(x)| <= c2 / xi_n^(1-eps) on all samples.

    Rational powers of xi are enclosed outward, so the sandwich with the
    returned constants is rigorous on the sampled set.
    """
    epsilon = Fraction(epsilon)
    if epsilon <= 0:
        raise InvalidInputError("epsilon must be > 0")
    grid = _grid(grid_size)
    c1: Fraction | None = None
    c2: Fraction | None = None
    wlow = whigh = (1, ZERO)
    for n in range(1, digit_horizon + 1):
        xi_n = Fraction(system.xi(n))
        if xi_n <= 0:
            raise InvalidInputError(f"xi({n}) must be positive")
        up = pow_enclosure(xi_n, 1 + epsilon, prec)
        down = pow_enclosure(xi_n, 1 - epsilon, prec)
        br = system.branch(n)
        for x in grid:
            mag = abs(br.deriv(x))
            # c1 <= |f'| * xi^(1+eps): keep a rigorous lower bound.
            lo_bound = mag * up.lo
            hi_bound = mag * down.hi
            if c1 is None or lo_bound < c1:
                c1, wlow = lo_bound, (n, x)
            if c2 is None or hi_bound > c2:
                c2, whigh = hi_bound, (n, x)
    assert c1 is not None and c2 is not None
    return RegularityFit(epsilon, c1, c2, digit_horizon, grid_size, wlow, whigh)


def check_regularity(system: IifsSystem, epsilon, c1, c2, *,
                     digit_horizon: int = 100, grid_size: int = 16,
                     prec: int = DEFAULT_PRECISION) -> bool:
    """True when the sandwich with the GIVEN constants holds on all samples,
    with outward rounding (a True answer is rigorous)."""
    epsilon, c1, c2 = Fraction(epsilon), Fraction(c1), Fraction(c2)
    grid = _grid(grid_size)
    for n in range(1, digit_horizon + 1):
        xi_n = Fraction(system.xi(n))
        up = pow_enclosure(xi_n, 1 + epsilon, prec)
        down = pow_enclosure(xi_n, 1 - epsilon, prec)
        br = system.branch(n)
        for x in grid:
            mag = abs(br.deriv(x))
            if not (mag * up.lo >= c1 and mag * down.hi <= c2):
                return False
    return True
