"""Layered Cantor families inside a survivor set, with certified checks.

Builds nested families A_0 > A_1 > ... of closed fundamental intervals that
witness a Hausdorff-dimension lower bound s for the survivor set of a digit
system under a digit bound phi.  A window sequence (r_k) fixes how many
consecutive digit indices carry one unit of summed length mass, a threshold
sequence (N_j) places the windows where phi already admits their digits, and
each layer refines every interval by one admissible window block, removing
the two position-extreme children.  Verification certifies, in exact rational
arithmetic,

- separation: grandchild unions of distinct children of a node A stay at
  least |A|**(1+eps) apart, and
- mass: the children of A carry summed s(1+eps)-power length at least
  |A|**(s(1+eps)).

When the leading threshold N_1 is astronomically large, the common prefix
(block_m*N_1 - 1 copies of the smallest admissible digit) is never
materialized: checks run on prefix-quotient intervals through the
bounded-distortion sandwich, so every reported pass is still a certificate,
while a failed sufficient test is reported as not definite rather than as a
proven violation.  Small constructions are materialized and every verdict is
definite.
"""

from __future__ import annotations

import itertools
import math
import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

from .core import (Branch, DigitString, IifsSystem, XiSequence,
                   fundamental_interval)
from .errors import (HorizonError, InfeasibleError, InvalidInputError,
                     PrecisionError)
from .exponent import DigitSet, s0_estimate
from .growth import GrowthFn
from .ratmath import RatInterval, floor_log2, iroot, pow_enclosure

_UNIT = RatInterval(Fraction(0), Fraction(1))
_LAYER_CAP = 10 ** 6          # max intervals enumerated per layer
_STORE_CAP = 1024             # stored strings per sampled layer
_NODE_BUDGET = 2              # checked nodes per layer before sampling kicks in
_R_CAP = 200_000              # digit-index cap for the window search
_SUM_PREC = 64
_SUM_PREC_CAP = 4096
_MASS_PREC = 32
_MASS_PREC_CAP = 512
_EXACT_POW_CAP = 200_000      # largest exponent compared by full cross powers
_MATERIALIZE_LIMIT = 20_000   # longest prefix composed in closed form
_TRIVIAL_S0 = 1e-3


def _decimal_str(n: int) -> str:
    """str() for counts that can exceed the int-to-str conversion guard."""
    try:
        return str(n)
    except ValueError:
        limit = sys.get_int_max_str_digits()
        sys.set_int_max_str_digits(0)
        try:
            return str(n)
        finally:
            sys.set_int_max_str_digits(limit)


# ---------------------------------------------------------------------------
# Parameters.


@dataclass(frozen=True)
class ConstructionParams:
    """Planning constants.  s and epsilon are positive rationals with
    s*(1+epsilon)**2 below the convergence exponent (checked against s0_bound
    when one is supplied); c1, kappa, rho come from the system's regularity,
    distortion, and contraction fits; block_m is the contraction length and
    drives the block variant of the layering."""

    s: Fraction
    epsilon: Fraction
    c1: Fraction
    kappa: Fraction
    rho: Fraction
    block_m: int = 1
    s0_bound: Fraction | None = None

    def validate(self) -> None:
        s, eps = Fraction(self.s), Fraction(self.epsilon)
        if s <= 0 or eps <= 0:
            raise InvalidInputError("s and epsilon must be positive")
        if not 0 < Fraction(self.rho) < 1:
            raise InvalidInputError("rho must lie in (0, 1)")
        if Fraction(self.kappa) < 1:
            raise InvalidInputError("kappa must be >= 1")
        if not 0 < Fraction(self.c1) <= 1:
            raise InvalidInputError("c1 must lie in (0, 1]")
        if self.block_m < 1:
            raise InvalidInputError("block_m must be a positive integer")
        if self.s0_bound is not None and s * (1 + eps) ** 2 >= self.s0_bound:
            raise InvalidInputError(
                f"s(1+eps)^2 = {s * (1 + eps) ** 2} must stay below the "
                f"convergence exponent bound {self.s0_bound}")

    @property
    def s_mass(self) -> Fraction:
        """The exponent s(1+eps) used by the window and mass sums."""
        return Fraction(self.s) * (1 + Fraction(self.epsilon))


# ---------------------------------------------------------------------------
# Exact decision helpers.


def _ge_neg_pow2(x: Fraction, w: int) -> bool:
    """x >= 2**-w for x > 0 and w >= 0, without materializing huge shifts."""
    num, den = x.numerator, x.denominator
    if num <= 0:
        return False
    gap = den.bit_length() - num.bit_length()
    if w >= gap + 1:
        return True
    if w <= gap - 2:
        return False
    return (num << w) >= den


def _ge_rho_pow(x: Fraction, rho: Fraction, e: int) -> bool | None:
    """Decide x >= rho**e for x > 0, 0 < rho < 1, e >= 0.

    Uses dyadic bracketing of rho so astronomically large e never
    materializes a power; falls back to exact cross powers for moderate e and
    returns None when the comparison sits inside the undecided band.
    """
    if x <= 0:
        return False
    if e == 0:
        return x >= 1
    if x >= 1:
        return True
    t = 1
    while rho ** t > Fraction(1, 2):
        t += 1
    if _ge_neg_pow2(x, e // t):          # rho**e <= 2**-(e//t)
        return True
    u = 1
    while rho * (1 << u) < 1:
        u += 1
    if not _ge_neg_pow2(x, e * u):       # rho**e >= 2**-(e*u)
        return False
    if e <= _EXACT_POW_CAP:
        a, b = rho.numerator, rho.denominator
        return x.numerator * b ** e >= x.denominator * a ** e
    return None


def _pow_bounds_scaled(x: Fraction, num: int, den: int, prec: int) -> tuple[int, int]:
    """Integers (lo, hi) with lo <= x**(num/den) * 2**prec <= hi, for x > 0."""
    a, b = x.numerator, x.denominator
    ap, bp = a ** num, b ** num
    if den == 1:
        return (ap << prec) // bp, -((-ap << prec) // bp)
    t = (ap << (prec * den)) // bp
    return iroot(t, den), iroot(t + 1, den) + 1


# ---------------------------------------------------------------------------
# Window term table: enclosures of ((c1/kappa) / xi_{d_n}^(1+eps))^(s(1+eps)).


class _TermTable:
    """Cached outward enclosures of the per-index window terms, shared by the
    window search and the re-checks."""

    def __init__(self, D: DigitSet, xi: XiSequence, params: ConstructionParams):
        self.D = D
        self.xi = xi
        self.base = Fraction(params.c1) / Fraction(params.kappa)
        self.s_mass = params.s_mass
        self.xi_exp = (1 + Fraction(params.epsilon)) * self.s_mass
        self._terms: dict[tuple[int, int], RatInterval] = {}
        self._base_pow: dict[int, RatInterval] = {}

    def term(self, n: int, prec: int) -> RatInterval:
        key = (n, prec)
        enc = self._terms.get(key)
        if enc is None:
            bp = self._base_pow.get(prec)
            if bp is None:
                bp = pow_enclosure(self.base, self.s_mass, prec)
                self._base_pow[prec] = bp
            xv = Fraction(self.xi(self.D.digit(n)))
            if xv <= 0:
                raise InvalidInputError(f"xi must be positive, got {xv}")
            enc = bp * pow_enclosure(xv, self.xi_exp, prec).reciprocal()
            self._terms[key] = enc
        return enc

    def sum_ge(self, lo: int, hi: int, bound: int, *, start_prec: int = _SUM_PREC) -> bool:
        """Exact decision of sum_{n=lo}^{hi} term(n) >= bound."""
        prec = start_prec
        while True:
            s_lo = s_hi = Fraction(0)
            for n in range(lo, hi + 1):
                enc = self.term(n, prec)
                s_lo += enc.lo
                s_hi += enc.hi
            if s_lo >= bound:
                return True
            if s_hi < bound:
                return False
            prec *= 2
            if prec > _SUM_PREC_CAP:
                raise PrecisionError(
                    f"window sum over indices [{lo}, {hi}] is undecidable "
                    f"against {bound} at precision {_SUM_PREC_CAP}")


# ---------------------------------------------------------------------------
# Sequence selection.


def choose_rk(D: DigitSet, xi: XiSequence, params: ConstructionParams,
              k_max: int, *, r_cap: int = _R_CAP) -> tuple[int, ...]:
    """Greedy minimal window ends: r_k is the least index with r_k >= k+4,
    r_k > r_{k-1}, and sum_{n=k}^{r_k} ((c1/kappa)/xi_{d_n}^(1+eps))^(s(1+eps))
    >= 3, decided by outward rational enclosures."""
    params.validate()
    if k_max < 1:
        raise InvalidInputError("k_max must be >= 1")
    table = _TermTable(D, xi, params)
    out: list[int] = []
    prev = 0
    for k in range(1, k_max + 1):
        start = max(k + 4, prev + 1)
        s_lo = s_hi = Fraction(0)
        for n in range(k, start):
            enc = table.term(n, _SUM_PREC)
            s_lo += enc.lo
            s_hi += enc.hi
        r = start
        while True:
            if r > r_cap:
                raise InfeasibleError(
                    f"window sum for k={k} cannot reach 3 by index {r_cap}; "
                    "s(1+eps) is too close to the convergence exponent or "
                    "the regularity constants are too pessimistic")
            enc = table.term(r, _SUM_PREC)
            s_lo += enc.lo
            s_hi += enc.hi
            if s_lo >= 3:
                break
            if s_hi >= 3 and table.sum_ge(k, r, 3):
                break
            r += 1
        out.append(r)
        prev = r
    return tuple(out)


def _max_xi(D: DigitSet, xi: XiSequence, lo: int, hi: int) -> Fraction:
    if xi.is_monotone:
        return Fraction(xi(D.digit(hi)))
    return max(Fraction(xi(D.digit(i))) for i in range(lo, hi + 1))


def _length_gap_value(D: DigitSet, xi: XiSequence, params: ConstructionParams,
                      j: int, r: Sequence[int]) -> Fraction:
    """V_j such that the length-gap inequality at stage j reads
    V_j >= rho**(p*N_j) with p = epsilon.numerator (after raising both sides
    to the power q = epsilon.denominator)."""
    m = params.block_m
    eps = Fraction(params.epsilon)
    p, q = eps.numerator, eps.denominator
    max1 = _max_xi(D, xi, j, r[j])        # i_1 ranges over [j, r_{j+1}]
    max2 = _max_xi(D, xi, j, r[j + 1])    # i_2..i_{2m} range over [j, r_{j+2}]
    max_base = max1 * max2 ** (2 * m - 1)
    scale = Fraction(params.kappa) / Fraction(params.c1) ** (2 * m)
    return 1 / (max_base ** (q + p) * scale ** q)


def _length_gap_holds(D: DigitSet, xi: XiSequence, params: ConstructionParams,
                      j: int, r: Sequence[int], N_j: int) -> bool:
    v = _length_gap_value(D, xi, params, j, r)
    ok = _ge_rho_pow(v, Fraction(params.rho), Fraction(params.epsilon).numerator * N_j)
    if ok is None:
        raise PrecisionError(
            f"length-gap inequality at stage {j} is undecidable at the "
            "supported precision")
    return ok


def choose_Nj(phi: GrowthFn, D: DigitSet, r: Sequence[int], xi: XiSequence,
              params: ConstructionParams, j_max: int) -> tuple[int, ...]:
    """Greedy minimal thresholds: N_j is the least integer > N_{j-1} such that
    phi(n) >= d_{r_j} + 1 for all n >= block_m * N_j (via the nondecreasing
    minorant) and the length-gap inequality
    max prod xi_{d_i}^(1+eps) <= kappa^-1 c1^(2*block_m) rho^(-eps*N_j) holds,
    the maximum running over i_1 in [j, r_{j+1}] and i_2..i_{2m} in
    [j, r_{j+2}]."""
    params.validate()
    if j_max < 1:
        raise InvalidInputError("j_max must be >= 1")
    if len(r) < j_max + 2:
        raise InvalidInputError(
            f"need r up to index {j_max + 2} for the length-gap maxima, "
            f"got {len(r)} entries")
    m = params.block_m
    out: list[int] = []
    prev = 0
    for j in range(1, j_max + 1):
        target = D.digit(r[j - 1]) + 1
        t = phi.first_n_reaching(target)
        n_growth = -(-t // m)
        if _length_gap_holds(D, xi, params, j, r, 1):
            n_gap = 1
        else:
            hi = 2
            while not _length_gap_holds(D, xi, params, j, r, hi):
                hi *= 2
                if hi > 1 << 200:
                    raise InfeasibleError(
                        f"length-gap inequality at stage {j} unreachable")
            lo = hi // 2
            while lo + 1 < hi:
                mid = (lo + hi) // 2
                if _length_gap_holds(D, xi, params, j, r, mid):
                    hi = mid
                else:
                    lo = mid
            n_gap = hi
        out.append(max(n_growth, n_gap, prev + 1))
        prev = out[-1]
    return tuple(out)


# ---------------------------------------------------------------------------
# Exact geometry on quotient strings.


class _Geometry:
    """Streaming exact evaluator for fundamental intervals of digit strings.

    States are tagged compositions: ("i",) identity, ("m", a, b, c, d) a
    Moebius matrix acting as x -> (a x + b)/(c x + d), ("a", slope, shift) an
    affine map, ("g", digits) a generic exact composition evaluated through
    the branch maps.  Branch kinds must be uniform along a composition."""

    def __init__(self, system: IifsSystem):
        self.system = system
        self._branches: dict[int, Branch] = {}
        self._orders: dict[tuple[int, ...], tuple[int, ...]] = {}

    def branch(self, d: int) -> Branch:
        br = self._branches.get(d)
        if br is None:
            br = self.system.branch(d)
            self._branches[d] = br
        return br

    def root(self) -> tuple:
        return ("i",)

    def child(self, state: tuple, digit: int) -> tuple:
        br = self.branch(digit)
        tag = state[0]
        if tag == "i":
            if br.kind == "mobius":
                return ("m",) + tuple(br.data)
            if br.kind == "affine":
                return ("a",) + tuple(br.data)
            return ("g", (digit,))
        if tag == "m" and br.kind == "mobius":
            a, b, c, d = state[1:]
            p, q, r, s = br.data
            return ("m", a * p + b * r, a * q + b * s, c * p + d * r, c * q + d * s)
        if tag == "a" and br.kind == "affine":
            sl, sh = state[1], state[2]
            bsl, bsh = br.data
            return ("a", sl * bsl, sl * bsh + sh)
        if tag == "g":
            return ("g", state[1] + (digit,))
        raise InvalidInputError(
            f"mixed branch kinds along one composition: state {tag!r} cannot "
            f"absorb a {br.kind!r} branch")

    def walk(self, digits: Sequence[int]) -> tuple:
        state = self.root()
        for d in digits:
            state = self.child(state, d)
        return state

    def interval(self, state: tuple) -> RatInterval:
        tag = state[0]
        if tag == "i":
            return _UNIT
        if tag == "m":
            a, b, c, d = state[1:]
            at0 = Fraction(b, d) if isinstance(b, int) and isinstance(d, int) else Fraction(b) / d
            at1 = Fraction(a + b) / (c + d)
            return RatInterval(min(at0, at1), max(at0, at1))
        if tag == "a":
            sl, sh = state[1], state[2]
            lo, hi = sh, sl + sh
            return RatInterval(min(lo, hi), max(lo, hi))
        return fundamental_interval(self.system, state[1]).as_interval()

    def width(self, state: tuple) -> Fraction:
        return self.interval(state).width

    def increasing(self, state: tuple) -> bool:
        tag = state[0]
        if tag == "i":
            return True
        if tag == "m":
            a, b, c, d = state[1:]
            return a * d - b * c > 0
        if tag == "a":
            return state[1] > 0
        flips = sum(1 for d in state[1] if not self.branch(d).increasing)
        return flips % 2 == 0

    def window_order(self, window: tuple[int, ...]) -> tuple[int, ...]:
        """Window digits sorted by the position of their branch image."""
        order = self._orders.get(window)
        if order is None:
            order = tuple(sorted(
                window, key=lambda d: self.branch(d).map_interval(_UNIT).lo))
            self._orders[window] = order
        return order


def _ordered_blocks(geom: _Geometry, state: tuple,
                    windows: Sequence[tuple[int, ...]]) -> Iterator[tuple[DigitString, tuple]]:
    """All window blocks under `state`, in left-to-right interval order."""
    if not windows:
        yield (), state
        return
    order = geom.window_order(windows[0])
    if not geom.increasing(state):
        order = order[::-1]
    rest = windows[1:]
    for d in order:
        st = geom.child(state, d)
        for tail, leaf in _ordered_blocks(geom, st, rest):
            yield (d,) + tail, leaf


def _extreme_chain(geom: _Geometry, state: tuple, windows: Sequence[tuple[int, ...]],
                   side: int, rank: int) -> tuple[DigitString, tuple]:
    """The block whose interval is `rank` positions in from the left
    (side=+1) or right (side=-1) extreme; rank in {0, 1} shifts only the last
    position because the position order is lexicographic."""
    digits: list[int] = []
    for i, window in enumerate(windows):
        order = geom.window_order(window)
        idx = 0 if side > 0 else len(order) - 1
        if rank and i == len(windows) - 1:
            idx += 1 if side > 0 else -1
        if not geom.increasing(state):
            idx = len(order) - 1 - idx
        pick = order[idx]
        digits.append(pick)
        state = geom.child(state, pick)
    return tuple(digits), state


def _drop_extremes(stream: Iterator) -> Iterator:
    """Skip the first and last items of an ordered stream."""
    it = iter(stream)
    next(it)
    prev = next(it)
    for item in it:
        yield prev
        prev = item


# ---------------------------------------------------------------------------
# Prefix handling.


@dataclass(frozen=True)
class _PrefixMap:
    """Closed form of the common prefix composition (all smallest digit)."""

    kind: str            # "identity" | "mobius" | "affine"
    data: tuple
    increasing: bool
    length: int

    def apply_point(self, x: Fraction) -> Fraction:
        if self.kind == "identity":
            return x
        if self.kind == "mobius":
            a, b, c, d = self.data
            return (a * x + b) / Fraction(c * x + d)
        sl, sh = self.data
        return sl * x + sh

    def apply_pair(self, lo: Fraction, hi: Fraction) -> tuple[Fraction, Fraction]:
        p, q = self.apply_point(lo), self.apply_point(hi)
        return (p, q) if p <= q else (q, p)


def _mat_pow(mat: tuple, n: int) -> tuple:
    a, b, c, d = 1, 0, 0, 1
    pa, pb, pc, pd = mat
    while n:
        if n & 1:
            a, b, c, d = a * pa + b * pc, a * pb + b * pd, c * pa + d * pc, c * pb + d * pd
        pa, pb, pc, pd = (pa * pa + pb * pc, pa * pb + pb * pd,
                          pc * pa + pd * pc, pc * pb + pd * pd)
        n >>= 1
    return (a, b, c, d)


def _build_prefix(branch: Branch, length: int, limit: int) -> _PrefixMap | None:
    if length == 0:
        return _PrefixMap("identity", (), True, 0)
    if length > limit:
        return None
    if branch.kind == "mobius":
        a, b, c, d = branch.data
        det = a * d - b * c
        mat = _mat_pow((a, b, c, d), length)
        inc = det > 0 or length % 2 == 0
        return _PrefixMap("mobius", mat, inc, length)
    if branch.kind == "affine":
        sl, sh = Fraction(branch.data[0]), Fraction(branch.data[1])
        slope = sl ** length
        shift = sh * length if sl == 1 else sh * (1 - slope) / (1 - sl)
        return _PrefixMap("affine", (slope, shift), slope > 0, length)
    return None


# ---------------------------------------------------------------------------
# Construction state and layers.


@dataclass(frozen=True)
class Layer:
    """One refinement stage.  strings hold quotient digit strings (the
    implicit prefix omitted); size is the exact cardinality of the full
    family, which the stored strings subsample when not exhaustive."""

    index: int
    strings: tuple[DigitString, ...]
    exhaustive: bool
    size: int


@dataclass(eq=False)
class ConstructionState:
    """Chosen sequences plus built layers.

    Layer strings are quotient digit strings: the construction's common
    prefix (block_m*N_1 - 1 copies of the smallest window digit) is applied
    symbolically, or in closed form when short enough to materialize."""

    system: IifsSystem
    D: DigitSet
    phi: GrowthFn
    params: ConstructionParams
    r: tuple[int, ...]
    N: tuple[int, ...]
    layers: list[Layer] = field(default_factory=list)
    pruned: bool = True
    materialize_limit: int = _MATERIALIZE_LIMIT

    def __post_init__(self) -> None:
        self.params.validate()
        if self.params.block_m < self.system.m:
            raise InvalidInputError(
                f"block_m = {self.params.block_m} is below the system's "
                f"contraction length {self.system.m}")
        if not self.r or any(b <= a for a, b in zip(self.r, self.r[1:])):
            raise InvalidInputError("r must be a nonempty increasing sequence")
        if not self.N or any(b <= a for a, b in zip(self.N, self.N[1:])):
            raise InvalidInputError("N must be a nonempty increasing sequence")
        if self.N[0] < 1:
            raise InvalidInputError("N_1 must be >= 1")
        self.prefix_len = self.params.block_m * self.N[0] - 1
        self._geom: _Geometry | None = None
        self._prefix: _PrefixMap | None | str = "unset"
        self._windows: dict[int, tuple[int, ...]] = {}

    def geometry(self) -> _Geometry:
        if self._geom is None:
            self._geom = _Geometry(self.system)
        return self._geom

    def prefix_map(self) -> _PrefixMap | None:
        if self._prefix == "unset":
            branch = self.geometry().branch(self.D.digit(1))
            self._prefix = _build_prefix(branch, self.prefix_len,
                                         self.materialize_limit)
        return self._prefix

    @property
    def mode(self) -> str:
        return "materialized" if self.prefix_map() is not None else "symbolic"

    def l(self, n: int) -> int:
        """Window start index for digit position n (within the quotient)."""
        if n < 1:
            raise InvalidInputError(f"digit positions start at 1, got {n}")
        m = self.params.block_m
        for j in range(1, len(self.N)):
            if n <= m * (self.N[j] - self.N[0]):
                return j
        raise InvalidInputError(
            f"digit position {n} is beyond the planned thresholds; "
            "raise j_max")

    def u(self, n: int) -> int:
        """Window end index (exclusive) for digit position n."""
        return self.r[self.l(n) - 1]

    def window_digits(self, n: int) -> tuple[int, ...]:
        """Admissible digits {d_i : l(n) <= i < u(n)} at position n."""
        j = self.l(n)
        cached = self._windows.get(j)
        if cached is None:
            lo, hi = j, self.r[j - 1]
            if hi - lo < 3:
                raise InvalidInputError(
                    f"corrupted state: window at stage {j} has {hi - lo} "
                    "digits, need at least 3")
            cached = tuple(self.D.digit(i) for i in range(lo, hi))
            self._windows[j] = cached
        return cached

    def block_windows(self, t: int) -> tuple[tuple[int, ...], ...]:
        """Per-position windows of layer t's block (positions (t-1)m+1..tm)."""
        m = self.params.block_m
        return tuple(self.window_digits((t - 1) * m + i) for i in range(1, m + 1))

    def branching(self, t: int) -> int:
        return math.prod(len(w) for w in self.block_windows(t))

    def extreme_children(self, node: Sequence[int], layer: int) -> tuple[DigitString, DigitString]:
        """Leftmost and rightmost child blocks of a layer-(layer-1) node, by
        actual interval position (not digit order)."""
        geom = self.geometry()
        state = geom.walk(node)
        windows = self.block_windows(layer)
        left, _ = _extreme_chain(geom, state, windows, +1, 0)
        right, _ = _extreme_chain(geom, state, windows, -1, 0)
        return left, right

    def layer_intervals(self, t: int, *, limit: int | None = None) -> list[tuple[DigitString, RatInterval]]:
        """Quotient intervals of layer t's stored strings."""
        if t < 1 or t > len(self.layers):
            raise InvalidInputError(f"layer {t} is not built")
        geom = self.geometry()
        out = []
        for s in self.layers[t - 1].strings[:limit]:
            out.append((s, geom.interval(geom.walk(s))))
        return out


def build_layers(system: IifsSystem, D: DigitSet, state: ConstructionState,
                 depth: int, *, cap: int = _LAYER_CAP, seed: int = 0,
                 prune_extremes: bool = True,
                 store_cap: int = _STORE_CAP) -> list[Layer]:
    """Build layers 1..depth.  Layer 1 keeps every window block; each later
    layer extends each kept string by one window block and removes the two
    position-extreme children per parent.  Once the exact family size passes
    `cap`, layers switch to a seeded random subsample of stored strings and
    all downstream reports carry "sampled, not exhaustive"."""
    if depth < 1:
        raise InvalidInputError("depth must be >= 1")
    if D is not state.D:
        raise InvalidInputError("digit set does not match the state")
    state.pruned = prune_extremes
    geom = state.geometry()
    layers: list[Layer] = []
    prev_strings: tuple[DigitString, ...] = ((),)
    prev_size = 1
    prev_exhaustive = True
    for t in range(1, depth + 1):
        windows = state.block_windows(t)
        bcount = math.prod(len(w) for w in windows)
        prune_here = prune_extremes and t >= 2
        kept = bcount - 2 if prune_here else bcount
        if kept < 2:
            raise InfeasibleError(
                f"layer {t} would keep {kept} children per node; "
                "windows are too small")
        size = prev_size * kept
        exhaustive = prev_exhaustive and size <= cap
        strings: list[DigitString] = []
        if exhaustive:
            for parent in prev_strings:
                if prune_here:
                    pstate = geom.walk(parent)
                    left, _ = _extreme_chain(geom, pstate, windows, +1, 0)
                    right, _ = _extreme_chain(geom, pstate, windows, -1, 0)
                    skip = {left, right}
                else:
                    skip = set()
                for block in itertools.product(*windows):
                    if block in skip:
                        continue
                    strings.append(parent + block)
        else:
            rng = random.Random(f"{seed}:layer:{t}")
            target = min(store_cap, size)
            seen: set[DigitString] = set()
            extremes: dict[DigitString, set[DigitString]] = {}
            attempts = 0
            while len(strings) < target and attempts < 200 * target:
                attempts += 1
                parent = prev_strings[rng.randrange(len(prev_strings))]
                block = tuple(w[rng.randrange(len(w))] for w in windows)
                if prune_here:
                    skip = extremes.get(parent)
                    if skip is None:
                        pstate = geom.walk(parent)
                        skip = {_extreme_chain(geom, pstate, windows, +1, 0)[0],
                                _extreme_chain(geom, pstate, windows, -1, 0)[0]}
                        extremes[parent] = skip
                    if block in skip:
                        continue
                child = parent + block
                if child in seen:
                    continue
                seen.add(child)
                strings.append(child)
        layers.append(Layer(t, tuple(strings), exhaustive, size))
        prev_strings = tuple(strings)
        prev_size = size
        prev_exhaustive = exhaustive
    state.layers = layers
    return layers


# ---------------------------------------------------------------------------
# Verification reports.


@dataclass(frozen=True)
class PairWitness:
    layer: int
    node: DigitString
    left: DigitString
    right: DigitString
    gap_log2: int | None     # floor(log2 gap); None when the gap is zero
    passed: bool
    definite: bool


@dataclass(frozen=True)
class NodeSeparation:
    layer: int
    node: DigitString
    pairs: int
    passed: bool
    worst: PairWitness | None


@dataclass(frozen=True)
class SeparationReport:
    passed: bool
    mode: str
    depth: int
    exhaustive: bool
    rows: tuple[NodeSeparation, ...]
    note: str = ""


@dataclass(frozen=True)
class NodeMass:
    layer: int
    node: DigitString
    children: int
    lhs_lower: float
    rhs_upper: float
    passed: bool
    definite: bool


@dataclass(frozen=True)
class MassReport:
    passed: bool
    mode: str
    depth: int
    exhaustive: bool
    rows: tuple[NodeMass, ...]
    note: str = ""


def _pick_nodes(population: Sequence[DigitString], budget: int,
                seed_key: str) -> tuple[list[DigitString], bool]:
    if len(population) <= budget:
        return list(population), True
    rng = random.Random(seed_key)
    return rng.sample(list(population), budget), False


def _node_populations(state: ConstructionState, depth: int) -> list[tuple[int, tuple[DigitString, ...], bool]]:
    """(layer n, its node strings, exhaustive) for n = 0..depth."""
    out: list[tuple[int, tuple[DigitString, ...], bool]] = [(0, ((),), True)]
    for n in range(1, depth + 1):
        layer = state.layers[n - 1]
        out.append((n, layer.strings, layer.exhaustive))
    return out


def verify_separation(state: ConstructionState, system: IifsSystem, epsilon,
                      depth: int, *, node_budget: int = _NODE_BUDGET,
                      seed: int = 0) -> SeparationReport:
    """Certify that for each checked node A and consecutive children Y, Z the
    kept-grandchild unions of Y and Z are at least |A|**(1+eps) apart (the
    minimum over all child pairs is attained on consecutive ones).

    Materialized mode compares exact absolute lengths, so every verdict is
    definite.  Symbolic mode certifies the sufficient quotient inequality
    gap_J >= kappa * rho**(eps*(N_1-1)) * |J_A|**(1+eps); a zero quotient gap
    is a definite violation, any other failure is reported as not definite.
    """
    if state.system is not system:
        raise InvalidInputError("system does not match the state")
    eps = Fraction(epsilon)
    if eps <= 0:
        raise InvalidInputError("epsilon must be positive")
    if depth < 0 or len(state.layers) < depth + 2:
        raise InvalidInputError(
            f"separation to depth {depth} needs layers built to {depth + 2}")
    pe, qe = eps.numerator, eps.denominator
    geom = state.geometry()
    prefix = state.prefix_map()
    kappa = Fraction(state.params.kappa)
    rho = Fraction(state.params.rho)
    lam_exp = pe * (state.N[0] - 1)
    rows: list[NodeSeparation] = []
    all_exhaustive = True
    for n, population, layer_exh in _node_populations(state, depth):
        nodes, full = _pick_nodes(population, node_budget, f"{seed}:sep:{n}")
        all_exhaustive = all_exhaustive and layer_exh and full
        for node in nodes:
            rows.append(_separation_node(state, geom, prefix, node, n,
                                         pe, qe, kappa, rho, lam_exp))
    passed = all(row.passed for row in rows)
    note = "" if all_exhaustive else "sampled, not exhaustive"
    return SeparationReport(passed, state.mode, depth, all_exhaustive,
                            tuple(rows), note)


def _separation_node(state: ConstructionState, geom: _Geometry,
                     prefix: _PrefixMap | None, node: DigitString, n: int,
                     pe: int, qe: int, kappa: Fraction, rho: Fraction,
                     lam_exp: int) -> NodeSeparation:
    a_state = geom.walk(node)
    len_q = geom.width(a_state)
    child_windows = state.block_windows(n + 1)
    grand_windows = state.block_windows(n + 2)
    prune_children = state.pruned and (n + 1) >= 2
    rank = 1 if state.pruned else 0
    if prefix is not None:
        alo, ahi = prefix.apply_pair(*_endpoints(geom, a_state))
        len_abs = ahi - alo
        rhs_abs = len_abs ** (qe + pe)
    stream = _ordered_blocks(geom, a_state, child_windows)
    if prune_children:
        stream = _drop_extremes(stream)
    pairs = 0
    ok_all = True
    first_fail: PairWitness | None = None
    min_gap: Fraction | None = None
    min_pair: PairWitness | None = None
    prev_block: DigitString | None = None
    prev_hi: Fraction | None = None
    for block, st in stream:
        _, left2 = _extreme_chain(geom, st, grand_windows, +1, rank)
        _, right2 = _extreme_chain(geom, st, grand_windows, -1, rank)
        hull_lo = geom.interval(left2).lo
        hull_hi = geom.interval(right2).hi
        if prev_hi is not None:
            pairs += 1
            gap_q = hull_lo - prev_hi
            if prefix is None:
                if gap_q <= 0:
                    passed, definite = False, True
                    gap_for_log = Fraction(0)
                else:
                    ratio = gap_q ** qe / (kappa ** qe * len_q ** (qe + pe))
                    ok = _ge_rho_pow(ratio, rho, lam_exp)
                    passed, definite = (ok is True), (ok is True)
                    gap_for_log = gap_q
            else:
                p1 = prefix.apply_point(prev_hi)
                p2 = prefix.apply_point(hull_lo)
                gap_abs = abs(p2 - p1)
                passed = gap_abs > 0 and gap_abs ** qe >= rhs_abs
                definite = True
                gap_for_log = gap_abs
            wit = PairWitness(n, node, prev_block, block,
                              floor_log2(gap_for_log) if gap_for_log > 0 else None,
                              passed, definite)
            if not passed:
                ok_all = False
                if first_fail is None or (definite and not first_fail.definite):
                    first_fail = wit
            if min_gap is None or gap_for_log < min_gap:
                min_gap = gap_for_log
                min_pair = wit
        prev_block, prev_hi = block, hull_hi
    worst = first_fail if first_fail is not None else min_pair
    return NodeSeparation(n, node, pairs, ok_all, worst)


def _endpoints(geom: _Geometry, state: tuple) -> tuple[Fraction, Fraction]:
    iv = geom.interval(state)
    return iv.lo, iv.hi


def verify_mass(state: ConstructionState, system: IifsSystem, s, epsilon,
                depth: int, *, node_budget: int = _NODE_BUDGET,
                seed: int = 0) -> MassReport:
    """Certify that each checked node A satisfies
    sum over kept children B of |B|**(s(1+eps)) >= |A|**(s(1+eps)).

    Materialized mode uses exact absolute lengths (definite verdicts).
    Symbolic mode certifies the sufficient quotient inequality
    sum (|J_B|/kappa)**s' >= |J_A|**s' and reports a definite violation only
    when the necessary inequality sum |J_B|**s' >= (|J_A|/kappa)**s' also
    fails; in between the failure is not definite."""
    if state.system is not system:
        raise InvalidInputError("system does not match the state")
    s_frac = Fraction(s)
    eps = Fraction(epsilon)
    if s_frac <= 0 or eps <= 0:
        raise InvalidInputError("s and epsilon must be positive")
    if depth < 0 or len(state.layers) < depth + 1:
        raise InvalidInputError(
            f"mass to depth {depth} needs layers built to {depth + 1}")
    s_mass = s_frac * (1 + eps)
    geom = state.geometry()
    prefix = state.prefix_map()
    kappa = Fraction(state.params.kappa)
    rows: list[NodeMass] = []
    all_exhaustive = True
    for n, population, layer_exh in _node_populations(state, depth):
        nodes, full = _pick_nodes(population, node_budget, f"{seed}:mass:{n}")
        all_exhaustive = all_exhaustive and layer_exh and full
        for node in nodes:
            rows.append(_mass_node(state, geom, prefix, node, n, s_mass, kappa))
    passed = all(row.passed for row in rows)
    note = "" if all_exhaustive else "sampled, not exhaustive"
    return MassReport(passed, state.mode, depth, all_exhaustive, tuple(rows), note)


def _mass_node(state: ConstructionState, geom: _Geometry,
               prefix: _PrefixMap | None, node: DigitString, n: int,
               s_mass: Fraction, kappa: Fraction) -> NodeMass:
    a_state = geom.walk(node)
    windows = state.block_windows(n + 1)
    prune_here = state.pruned and (n + 1) >= 2
    if prune_here:
        left, _ = _extreme_chain(geom, a_state, windows, +1, 0)
        right, _ = _extreme_chain(geom, a_state, windows, -1, 0)
        skip = {left, right}
    else:
        skip = set()

    def child_widths() -> Iterator[Fraction]:
        for block in itertools.product(*windows):
            if block in skip:
                continue
            st = a_state
            for d in block:
                st = geom.child(st, d)
            if prefix is None:
                yield geom.width(st)
            else:
                lo, hi = prefix.apply_pair(*_endpoints(geom, st))
                yield hi - lo

    if prefix is None:
        parent_q = geom.width(a_state)
        suff_child_scale, suff_parent = 1 / kappa, parent_q
        nec_child_scale, nec_parent = Fraction(1), parent_q / kappa
    else:
        alo, ahi = prefix.apply_pair(*_endpoints(geom, a_state))
        parent_abs = ahi - alo
        suff_child_scale, suff_parent = Fraction(1), parent_abs
        nec_child_scale, nec_parent = Fraction(1), parent_abs
    pn, pd = s_mass.numerator, s_mass.denominator
    children = 0
    prec = _MASS_PREC
    while True:
        sum_lo = sum_hi = 0
        children = 0
        for w in child_widths():
            children += 1
            lo, _ = _pow_bounds_scaled(w * suff_child_scale, pn, pd, prec)
            _, hi = _pow_bounds_scaled(w * nec_child_scale, pn, pd, prec)
            sum_lo += lo
            sum_hi += hi
        _, rhs_hi = _pow_bounds_scaled(suff_parent, pn, pd, prec)
        rhs_lo, _ = _pow_bounds_scaled(nec_parent, pn, pd, prec)
        if sum_lo >= rhs_hi:
            return NodeMass(n, node, children,
                            float(Fraction(sum_lo, 1 << prec)),
                            float(Fraction(rhs_hi, 1 << prec)), True, True)
        if sum_hi < rhs_lo:
            return NodeMass(n, node, children,
                            float(Fraction(sum_hi, 1 << prec)),
                            float(Fraction(rhs_lo, 1 << prec)), False, True)
        prec *= 2
        if prec > _MASS_PREC_CAP:
            return NodeMass(n, node, children,
                            float(Fraction(sum_lo, 1 << prec // 2)),
                            float(Fraction(rhs_hi, 1 << prec // 2)), False, False)


# ---------------------------------------------------------------------------
# Re-checks of the planning inequalities and the shrinking invariant.


def verify_equations(state: ConstructionState) -> dict:
    """Re-check the stored sequences against the three planning inequalities:
    window sums reach 3, growth thresholds admit the window digits, and the
    length-gap inequality holds at each stage.  The window-sum entries under
    both the half-open and the closed window convention are informational."""
    params = state.params
    D, xi, phi = state.D, state.system.xi, state.phi
    m = params.block_m
    table = _TermTable(D, xi, params)
    eq_window: list[bool] = []
    prev = 0
    for k, rk in enumerate(state.r, start=1):
        ok = rk - k >= 4 and rk > prev and table.sum_ge(k, rk, 3)
        eq_window.append(ok)
        prev = rk
    eq_growth: list[bool] = []
    for j, nj in enumerate(state.N, start=1):
        target = D.digit(state.r[j - 1]) + 1
        eq_growth.append(phi.minorant(m * nj) >= target)
    eq_gap: list[bool] = []
    for j, nj in enumerate(state.N, start=1):
        if j + 1 >= len(state.r):
            break
        eq_gap.append(_length_gap_holds(D, xi, params, j, state.r, nj))
    strict: dict[str, bool] = {}
    inclusive: dict[str, bool] = {}
    for j in range(1, len(state.N) + 1):
        rj = state.r[j - 1]
        strict[str(j)] = table.sum_ge(j, rj - 1, 3)
        inclusive[str(j)] = table.sum_ge(j, rj, 3)
    return {
        "window_sums": eq_window,
        "growth_thresholds": eq_growth,
        "length_gaps": eq_gap,
        "window_sum_strict": strict,
        "window_sum_inclusive": inclusive,
        "all": all(eq_window) and all(eq_growth) and all(eq_gap),
    }


def check_delta(state: ConstructionState, *, depth: int | None = None) -> dict:
    """Check the shrinking invariant: quotient widths at layer t stay within
    rho**t (so absolute widths stay within rho**(N_1 - 1 + t))."""
    geom = state.geometry()
    rho = Fraction(state.params.rho)
    rows = []
    layers = state.layers if depth is None else state.layers[:depth]
    exhaustive = True
    for layer in layers:
        bound = rho ** layer.index
        ok = all(geom.width(geom.walk(s)) <= bound for s in layer.strings)
        rows.append({"layer": layer.index, "ok": ok,
                     "exhaustive": layer.exhaustive})
        exhaustive = exhaustive and layer.exhaustive
    return {"passed": all(row["ok"] for row in rows),
            "rows": rows, "exhaustive": exhaustive}


# ---------------------------------------------------------------------------
# Members.


@dataclass(frozen=True)
class MemberSample:
    digits: DigitString
    enclosure: RatInterval
    note: str


def sample_member(state: ConstructionState, system: IifsSystem, horizon: int,
                  seed: int | None = None, *,
                  enclosure_depth: int = 32) -> MemberSample:
    """Emit the first `horizon` digits of a point surviving every layer:
    the prefix digits, then per layer the leftmost kept child block
    (deterministic) or a seeded random kept block.  The enclosure is an exact
    interval containing the point (a truncated prefix interval when the full
    prefix is symbolic)."""
    if state.system is not system:
        raise InvalidInputError("system does not match the state")
    if horizon < 1:
        raise InvalidInputError("horizon must be >= 1")
    m = state.params.block_m
    max_digits = state.prefix_len + len(state.layers) * m
    if horizon > max_digits:
        raise HorizonError(
            f"horizon {horizon} exceeds the built depth of {max_digits} digits")
    d1 = state.D.digit(1)
    digits: list[int] = [d1] * min(horizon, state.prefix_len)
    geom = state.geometry()
    node: DigitString = ()
    if horizon > state.prefix_len:
        rng = None if seed is None else random.Random(f"{seed}:member")
        st = geom.root()
        t = 0
        while len(digits) < horizon:
            t += 1
            windows = state.block_windows(t)
            prune_here = state.pruned and t >= 2
            if rng is None:
                block, st = _extreme_chain(geom, st, windows, +1,
                                           1 if prune_here else 0)
            else:
                if prune_here:
                    skip = {_extreme_chain(geom, st, windows, +1, 0)[0],
                            _extreme_chain(geom, st, windows, -1, 0)[0]}
                else:
                    skip = set()
                while True:
                    block = tuple(w[rng.randrange(len(w))] for w in windows)
                    if block not in skip:
                        break
                for d in block:
                    st = geom.child(st, d)
            node += block
            digits.extend(block)
        digits = digits[:horizon]
    prefix = state.prefix_map()
    if prefix is not None:
        iv = geom.interval(geom.walk(node))
        lo, hi = prefix.apply_pair(iv.lo, iv.hi)
        enclosure = RatInterval(lo, hi)
        note = "materialized"
    else:
        cut = min(horizon, enclosure_depth, state.prefix_len)
        enclosure = fundamental_interval(system, (d1,) * cut).as_interval()
        note = f"symbolic prefix; enclosure from the first {cut} digits"
    return MemberSample(tuple(digits), enclosure, note)


def in_survivor_set(D: DigitSet, phi: GrowthFn, digits: Sequence[int]) -> bool:
    """Definitional membership check for a finite digit stream: every digit
    is admissible and respects the positionwise bound."""
    return all(D.contains(a) and a <= phi(i)
               for i, a in enumerate(digits, start=1))


# ---------------------------------------------------------------------------
# End-to-end driver.


def run_construction(system: IifsSystem, D: DigitSet, phi: GrowthFn, *,
                     epsilon=Fraction(1, 10), s=None,
                     safety: Fraction = Fraction(9, 10), depth: int = 2,
                     k_max: int = 6, j_max: int = 3, cap: int = _LAYER_CAP,
                     seed: int = 0, node_budget: int = _NODE_BUDGET,
                     prune_extremes: bool = True, K: int = 10 ** 4,
                     materialize_limit: int = _MATERIALIZE_LIMIT,
                     return_state: bool = False):
    """Plan, build, and verify a construction; returns a deterministic
    JSON-ready report (with return_state, a (report, state) pair).  When the
    estimated convergence exponent is zero the construction is skipped: the
    trivial bound dim >= 0 needs no witness."""
    if D.size is not None:
        raise InvalidInputError(
            f"the construction needs an infinite digit set; "
            f"{D.description} has {D.size} elements")
    est = s0_estimate(D, system.xi, K)
    if est.value < _TRIVIAL_S0 and s is None:
        report = {
            "status": "skipped",
            "system": system.name,
            "s0_estimate": est.value,
            "reason": "estimated convergence exponent is zero within "
                      "tolerance; the trivial bound dim >= 0 needs no "
                      "construction",
        }
        return (report, None) if return_state else report
    eps = Fraction(epsilon)
    s0_frac = Fraction(est.value).limit_denominator(1000)
    s_frac = Fraction(s) if s is not None else safety * s0_frac / (1 + eps) ** 2
    params = ConstructionParams(
        s=s_frac, epsilon=eps, c1=Fraction(system.c1),
        kappa=Fraction(system.kappa), rho=Fraction(system.rho),
        block_m=system.m,
        s0_bound=s0_frac if s is None else None)
    r = choose_rk(D, system.xi, params, k_max)
    N = choose_Nj(phi, D, r, system.xi, params, j_max)
    state = ConstructionState(system, D, phi, params, r, N,
                              materialize_limit=materialize_limit)
    build_layers(system, D, state, depth + 2, cap=cap, seed=seed,
                 prune_extremes=prune_extremes)
    equations = verify_equations(state)
    separation = verify_separation(state, system, eps, depth,
                                   node_budget=node_budget, seed=seed)
    mass = verify_mass(state, system, s_frac, eps, depth,
                       node_budget=node_budget, seed=seed)
    delta = check_delta(state)
    passed = (equations["all"] and separation.passed and mass.passed
              and delta["passed"])
    report = {
        "status": "ok",
        "system": system.name,
        "digit_set": D.description,
        "phi": phi.label,
        "mode": state.mode,
        "pruned": state.pruned,
        "s0_estimate": est.value,
        "params": {
            "s": str(s_frac),
            "epsilon": str(eps),
            "c1": str(Fraction(system.c1)),
            "kappa": str(Fraction(system.kappa)),
            "rho": str(Fraction(system.rho)),
            "block_m": system.m,
        },
        "r": list(r),
        "N": [_decimal_str(v) for v in N],
        "prefix_len": _decimal_str(state.prefix_len),
        "layers": [{"index": layer.index, "size": _decimal_str(layer.size),
                    "stored": len(layer.strings),
                    "exhaustive": layer.exhaustive}
                   for layer in state.layers],
        "equations": equations,
        "separation": summarize_separation(separation),
        "mass": summarize_mass(mass),
        "delta": delta,
        "passed": passed,
        "dimension_lower_bound": float(s_frac) if passed else 0.0,
    }
    return (report, state) if return_state else report


def summarize_separation(report: SeparationReport) -> dict:
    rows = []
    for row in report.rows:
        entry = {"layer": row.layer, "node": list(row.node),
                 "pairs": row.pairs, "passed": row.passed}
        if row.worst is not None:
            entry["worst"] = {
                "left": list(row.worst.left), "right": list(row.worst.right),
                "gap_log2": row.worst.gap_log2, "passed": row.worst.passed,
                "definite": row.worst.definite,
            }
        rows.append(entry)
    return {"passed": report.passed, "mode": report.mode,
            "depth": report.depth, "exhaustive": report.exhaustive,
            "note": report.note, "rows": rows}


def summarize_mass(report: MassReport) -> dict:
    rows = [{"layer": row.layer, "node": list(row.node),
             "children": row.children, "lhs_lower": row.lhs_lower,
             "rhs_upper": row.rhs_upper, "passed": row.passed,
             "definite": row.definite}
            for row in report.rows]
    return {"passed": report.passed, "mode": report.mode,
            "depth": report.depth, "exhaustive": report.exhaustive,
            "note": report.note, "rows": rows}
