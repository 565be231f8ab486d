"""Weighted digit-product constraints reduced to a single-digit bound.

A product constraint set is cut out by inequalities
a_{g_1(n)}^{t_1} * ... * a_{g_m(n)}^{t_m} <= phi(n) over all n.  This module
mechanizes the reduction of that set to a one-digit-bound set S(f, D, zeta):
image index maps M_{i,k}, complement resolvents R_{i,k}, the per-coordinate
functions zeta_i, their pointwise minimum zeta, and finite brute-force checks
of the subset chain

    P_m  >=  G_1  >=  G_2  >=  G_3 = S(f, D, zeta)

over explicit horizons.  All inequalities with fractional exponents are
decided by exact integer cross powers, never by floating point, so a reported
pass is rigorous.  The claimed monotonicity of each zeta_i can fail at
complement indices under the verbatim definitions (the worked two-coordinate
example below has zeta(1) > zeta(2)); violations are therefore collected as
diagnostics rather than asserted.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import (HorizonError, InfeasibleError, InvalidInputError)
from .exponent import DigitSet
from .growth import GrowthFn
from .kernels import chain_scan
from .ratmath import floor_pow

_EXHAUSTIVE_CAP = 10 ** 7
_SAMPLES = 10 ** 5
_MAX_WITNESSES = 5
_INT64_SAFE = (1 << 62)


# ---------------------------------------------------------------------------
# Exact values of the form base**exponent.


@dataclass(frozen=True)
class PowerValue:
    """A positive real base**exponent with rational base and exponent,
    compared exactly through integer cross powers."""

    base: Fraction
    exponent: Fraction

    def __post_init__(self) -> None:
        if self.base <= 0 or self.exponent <= 0:
            raise InvalidInputError(
                f"PowerValue needs base > 0 and exponent > 0, got "
                f"{self.base}**{self.exponent}")

    def __float__(self) -> float:
        return float(self.base) ** float(self.exponent)

    def floor(self) -> int:
        return floor_pow(self.base, self.exponent)

    def ge_rational(self, x) -> bool:
        """base**exponent >= x, exactly: base**p >= x**q with e = p/q."""
        x = Fraction(x)
        if x <= 0:
            return True
        p, q = self.exponent.numerator, self.exponent.denominator
        lhs = self.base ** p
        return (lhs.numerator * x.denominator ** q
                >= x.numerator ** q * lhs.denominator)

    def le_power(self, other: "PowerValue") -> bool:
        """base**exponent <= other.base**other.exponent, exactly."""
        e1, e2 = self.exponent, other.exponent
        k1 = e1.numerator * e2.denominator
        k2 = e2.numerator * e1.denominator
        a1 = self.base ** k1
        a2 = other.base ** k2
        return (a1.numerator * a2.denominator <= a2.numerator * a1.denominator)


def _min_power(values: Sequence[PowerValue]) -> PowerValue:
    best = values[0]
    for v in values[1:]:
        if v.le_power(best):
            best = v
    return best


# ---------------------------------------------------------------------------
# Specification.


@dataclass(frozen=True)
class ProductSpec:
    """A weighted digit-product constraint family.

    t are positive rational weights, g are total index maps on the positive
    integers, phi is the bound sequence with phi(n) >= M(D) where
    M(D) = max(min D, (min D)**(m * max t)), and D is the digit set."""

    m: int
    t: tuple[Fraction, ...]
    g: tuple[Callable[[int], int], ...]
    phi: GrowthFn
    D: DigitSet
    g_labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.m < 1:
            raise InvalidInputError("m must be a positive integer")
        if len(self.t) != self.m or len(self.g) != self.m:
            raise InvalidInputError(
                f"need exactly m={self.m} weights and index maps, got "
                f"{len(self.t)} and {len(self.g)}")
        if any(Fraction(ti) <= 0 for ti in self.t):
            raise InvalidInputError("all weights t_i must be positive")
        if not self.g_labels:
            object.__setattr__(self, "g_labels",
                               tuple(f"g{i + 1}" for i in range(self.m)))

    @property
    def min_digit(self) -> int:
        return self.D.digit(1)

    @property
    def M_of_D(self) -> PowerValue:
        """max(min D, (min D)**(m * max t)) as an exact power value."""
        exp = max(Fraction(1), self.m * max(Fraction(ti) for ti in self.t))
        return PowerValue(Fraction(self.min_digit), exp)

    def check_codomain(self, horizon: int) -> None:
        """phi(n) >= M(D) for every tested n."""
        bound = self.M_of_D
        for n in range(1, horizon + 1):
            if not _phi_meets(self.phi(n), bound):
                raise InvalidInputError(
                    f"phi({n}) = {self.phi(n)} is below M(D) = "
                    f"{self.min_digit}**{bound.exponent}")

    def mt(self, i: int) -> Fraction:
        """The combined exponent m * t_i of coordinate i (0-based)."""
        return self.m * Fraction(self.t[i])


def _phi_meets(value, bound: PowerValue) -> bool:
    """value >= bound.base**bound.exponent, exactly."""
    v = Fraction(value)
    if v <= 0:
        return False
    p, q = bound.exponent.numerator, bound.exponent.denominator
    return v.numerator ** q * bound.base.denominator ** p >= \
        bound.base.numerator ** p * v.denominator ** q


# ---------------------------------------------------------------------------
# Strictified bound.


@dataclass(frozen=True)
class StrictPhi:
    """A strictly increasing minorant of phi over a finite horizon."""

    values: tuple[Fraction, ...]
    passthrough: bool
    horizon: int

    def __call__(self, n: int) -> Fraction:
        if not 1 <= n <= self.horizon:
            raise HorizonError(
                f"strictified bound is defined for 1..{self.horizon}, "
                f"got {n}")
        return self.values[n - 1]


def strictify(phi: GrowthFn, horizon: int, *,
              assume_strict: bool = False) -> StrictPhi:
    """Strictly increasing phi' <= phi on 1..horizon.

    With assume_strict the original values pass through after a strictness
    check.  Otherwise phi'(n) = (suffix minimum of phi from n) minus a ramp
    (horizon - n + 1) * delta with delta = 1/(2*(horizon+1)), which is
    strictly increasing, strictly below phi, and at most 1/2 below it.
    """
    if horizon < 1:
        raise InvalidInputError("horizon must be >= 1")
    vals = [Fraction(phi(n)) for n in range(1, horizon + 1)]
    if assume_strict:
        for a, b in zip(vals, vals[1:]):
            if a >= b:
                raise InvalidInputError(
                    "assume_strict was set but phi is not strictly "
                    f"increasing: phi repeats or drops at value {a}")
        return StrictPhi(tuple(vals), True, horizon)
    if not phi.declared_divergent:
        raise InfeasibleError(
            f"divergence violation: phi ({phi.label}) is bounded, so no "
            "strictly increasing divergent minorant exists")
    suffix = list(vals)
    for i in range(horizon - 2, -1, -1):
        suffix[i] = min(suffix[i], suffix[i + 1])
    delta = Fraction(1, 2 * (horizon + 1))
    out = tuple(suffix[i] - (horizon - i) * delta for i in range(horizon))
    return StrictPhi(out, False, horizon)


# ---------------------------------------------------------------------------
# Index maps.


def _first_preimages(g: Callable[[int], int], search_cap: int) -> dict[int, int]:
    """value -> least r <= search_cap with g(r) = value, scanning upward."""
    table: dict[int, int] = {}
    for r in range(1, search_cap + 1):
        v = g(r)
        if not isinstance(v, int) or v < 1:
            raise InvalidInputError(
                f"index maps must produce positive integers, got g({r})={v}")
        if v not in table:
            table[v] = r
    return table


def m_index(spec: ProductSpec, i: int, k: int, *,
            search_cap: int = 4096) -> int | None:
    """Least preimage M_{i,k} = min(r : g_i(r) = k), or None when k is not in
    the image within the search cap (the not-in-image signal; route to
    r_index)."""
    if not 1 <= i <= spec.m:
        raise InvalidInputError(f"coordinate i must lie in 1..{spec.m}")
    g = spec.g[i - 1]
    for r in range(1, search_cap + 1):
        if g(r) == k:
            return r
    return None


def r_index(spec: ProductSpec, i: int, k: int, *,
            search_cap: int = 4096) -> int:
    """Resolvent for k outside the image: the least first-preimage above k
    when one exists, otherwise the largest first-preimage below k plus k."""
    if not 1 <= i <= spec.m:
        raise InvalidInputError(f"coordinate i must lie in 1..{spec.m}")
    pool = sorted(_first_preimages(spec.g[i - 1], search_cap).values())
    above = [v for v in pool if v > k]
    if above:
        return above[0]
    below = [v for v in pool if v < k]
    if below:
        return below[-1] + k
    raise HorizonError(
        f"no first preimage of coordinate {i} lies on either side of {k} "
        f"within the search cap {search_cap}; enlarge the cap")


# ---------------------------------------------------------------------------
# The zeta table.


@dataclass(frozen=True)
class ZetaTable:
    """Per-coordinate and combined single-digit bounds over a horizon.

    zeta_i(n) = phi'(M_{i,n})**(1/(m t_i)) at image indices and
    phi'(R_{i,n})**(1/(m t_i)) at complement indices; zeta = pointwise exact
    minimum.  monotone_violations lists (i, n) with zeta_i(n) < zeta_i(n-1)
    (i = 0 marks the combined zeta); the implication property checked by
    subset_chain_check holds regardless."""

    spec: ProductSpec
    horizon: int
    phi_strict: StrictPhi
    images: tuple[frozenset[int], ...]
    m_table: tuple[dict[int, int], ...]
    r_table: tuple[dict[int, int], ...]
    zeta_i: tuple[tuple[PowerValue, ...], ...]
    zeta: tuple[PowerValue, ...]
    zeta_floor: tuple[int, ...]
    monotone_violations: tuple[tuple[int, int], ...]

    def zeta_value(self, n: int) -> PowerValue:
        if not 1 <= n <= self.horizon:
            raise HorizonError(f"zeta is built for 1..{self.horizon}")
        return self.zeta[n - 1]


def build_zeta(spec: ProductSpec, horizon: int, *,
               assume_strict: bool = False,
               search_cap: int | None = None) -> ZetaTable:
    """Populate index maps and zeta over 1..horizon."""
    if horizon < 1:
        raise InvalidInputError("horizon must be >= 1")
    spec.check_codomain(horizon)
    if search_cap is None:
        search_cap = max(64, 8 * horizon)
    phi_s = strictify(spec.phi, max(horizon, _needed_phi_horizon(
        spec, horizon, search_cap)), assume_strict=assume_strict)
    images: list[frozenset[int]] = []
    m_tables: list[dict[int, int]] = []
    r_tables: list[dict[int, int]] = []
    zetas: list[tuple[PowerValue, ...]] = []
    for i in range(1, spec.m + 1):
        first = _first_preimages(spec.g[i - 1], search_cap)
        pool = sorted(first.values())
        image = frozenset(k for k in first if k <= horizon)
        m_tab = {k: first[k] for k in image}
        r_tab: dict[int, int] = {}
        col: list[PowerValue] = []
        exponent = 1 / spec.mt(i - 1)
        for n in range(1, horizon + 1):
            if n in image:
                arg = m_tab[n]
            else:
                arg = _resolve_r(pool, n, i, search_cap)
                r_tab[n] = arg
            col.append(PowerValue(phi_s(arg), exponent))
        images.append(image)
        m_tables.append(m_tab)
        r_tables.append(r_tab)
        zetas.append(tuple(col))
    combined = tuple(_min_power([zetas[i][n] for i in range(spec.m)])
                     for n in range(horizon))
    floors = tuple(v.floor() for v in combined)
    violations: list[tuple[int, int]] = []
    for i, col in enumerate(zetas, start=1):
        for n in range(1, horizon):
            if not col[n - 1].le_power(col[n]):
                violations.append((i, n + 1))
    for n in range(1, horizon):
        if not combined[n - 1].le_power(combined[n]):
            violations.append((0, n + 1))
    return ZetaTable(spec, horizon, phi_s, tuple(images), tuple(m_tables),
                     tuple(r_tables), tuple(zetas), combined, floors,
                     tuple(violations))


def _resolve_r(pool: list[int], k: int, i: int, search_cap: int) -> int:
    above = next((v for v in pool if v > k), None)
    if above is not None:
        return above
    below = None
    for v in pool:
        if v < k:
            below = v
        else:
            break
    if below is not None:
        return below + k
    raise HorizonError(
        f"no first preimage of coordinate {i} lies on either side of {k} "
        f"within the search cap {search_cap}; enlarge the cap")


def _needed_phi_horizon(spec: ProductSpec, horizon: int,
                        search_cap: int) -> int:
    """Largest strictified-phi argument the table can request: index-map
    arguments are first preimages (<= search_cap) or below + k."""
    return search_cap + horizon


# ---------------------------------------------------------------------------
# Membership.


def required_length(spec: ProductSpec, horizon: int) -> int:
    """Digits needed to decide every product constraint with index n <=
    horizon."""
    need = 0
    for n in range(1, horizon + 1):
        need = max(need, max(g(n) for g in spec.g))
    return need


def determined_indices(spec: ProductSpec, horizon: int,
                       length: int) -> list[int]:
    """Constraint indices n <= horizon fully visible in a length-L prefix."""
    return [n for n in range(1, horizon + 1)
            if max(g(n) for g in spec.g) <= length]


def first_product_violation(spec: ProductSpec, stream: Sequence[int],
                            horizon: int) -> int | None:
    """Least n <= horizon whose weighted product bound fails, or None.

    The comparison prod a_{g_i(n)}^{t_i} <= phi(n) is decided exactly by
    raising both sides to the least common denominator of the weights."""
    if required_length(spec, horizon) > len(stream):
        raise InvalidInputError(
            f"stream of length {len(stream)} cannot decide constraints to "
            f"horizon {horizon}; need {required_length(spec, horizon)} digits")
    weights = [Fraction(ti) for ti in spec.t]
    common = math.lcm(*(w.denominator for w in weights))
    exps = [w.numerator * (common // w.denominator) for w in weights]
    for n in range(1, horizon + 1):
        lhs = 1
        for gi, e in zip(spec.g, exps):
            lhs *= stream[gi(n) - 1] ** e
        rhs = Fraction(spec.phi(n)) ** common
        if lhs * rhs.denominator > rhs.numerator:
            return n
    return None


def membership_P(spec: ProductSpec, stream: Sequence[int],
                 horizon: int) -> bool:
    """True iff all digits lie in D and every product bound with index
    n <= horizon holds."""
    if any(not spec.D.contains(a) for a in stream):
        return False
    return first_product_violation(spec, stream, horizon) is None


# ---------------------------------------------------------------------------
# The subset chain, brute forced.


def _digit_bound_ok(digit: int, bound: PowerValue) -> bool:
    """digit <= bound, exactly."""
    return bound.ge_rational(digit)


def _position_bounds(table: ZetaTable, length: int) -> list[int]:
    """Fused per-position thresholds: at position p the strictest of the
    G_1 bounds phi'(n)**(1/(m t_i)) over (i, n <= horizon) with g_i(n) = p
    and the G_2 bounds phi'(M_{i,p})**(1/(m t_i)) over i with p in I_i.
    Positions constrained by neither get the enumeration cap (-1 marker)."""
    spec = table.spec
    best: list[PowerValue | None] = [None] * length
    for i in range(1, spec.m + 1):
        exponent = 1 / spec.mt(i - 1)
        for n in range(1, table.horizon + 1):
            p = spec.g[i - 1](n)
            if p <= length:
                cand = PowerValue(table.phi_strict(n), exponent)
                if best[p - 1] is None or cand.le_power(best[p - 1]):
                    best[p - 1] = cand
        for p, arg in table.m_table[i - 1].items():
            if p <= length:
                cand = PowerValue(table.phi_strict(arg), exponent)
                if best[p - 1] is None or cand.le_power(best[p - 1]):
                    best[p - 1] = cand
    return [-1 if b is None else b.floor() for b in best]


def subset_chain_check(spec: ProductSpec, horizon: int, digit_cap: int, *,
                       assume_strict: bool = False, seed: int = 0,
                       samples: int = _SAMPLES,
                       exhaustive_cap: int = _EXHAUSTIVE_CAP,
                       table: ZetaTable | None = None) -> dict:
    """Enumerate digit prefixes with a_n <= min(zeta(n), digit_cap) and
    confirm each satisfies the per-position bounds (the G_1 and G_2 single
    digit inequalities) and every determined product constraint.

    Exhaustive when the stream space fits the cap, otherwise a seeded sample;
    any violation is reported with a concrete witness stream."""
    if horizon < 1 or digit_cap < 1:
        raise InvalidInputError("horizon and digit_cap must be >= 1")
    if table is None:
        table = build_zeta(spec, horizon, assume_strict=assume_strict)
    elif table.horizon < horizon:
        raise InvalidInputError(
            f"supplied table covers 1..{table.horizon} < horizon {horizon}")
    length = horizon
    alphabets: list[list[int]] = []
    for n in range(1, length + 1):
        cap = min(digit_cap, table.zeta_floor[n - 1])
        allowed = [d for d in range(1, cap + 1) if spec.D.contains(d)]
        if not allowed:
            return {
                "passed": True, "mode": "empty", "horizon": horizon,
                "digit_cap": digit_cap, "stream_space": "0", "checked": 0,
                "violations": [],
                "note": f"no admissible digit at position {n}; "
                        "the restricted set is empty",
            }
        alphabets.append(allowed)
    bounds = _position_bounds(table, length)
    weights = [Fraction(ti) for ti in spec.t]
    common = math.lcm(*(w.denominator for w in weights))
    exps = [w.numerator * (common // w.denominator) for w in weights]
    det = determined_indices(spec, horizon, length)
    prod_pos = [[spec.g[i](n) - 1 for i in range(spec.m)] for n in det]
    prod_rhs = [Fraction(spec.phi(n)) ** common for n in det]
    total = math.prod(len(a) for a in alphabets)
    mode = "exhaustive" if total <= exhaustive_cap else "sampled"
    violations: list[dict] = []
    if mode == "exhaustive":
        checked, kernel = _chain_exhaustive(alphabets, bounds, exps, prod_pos,
                                            prod_rhs, violations)
    else:
        checked, kernel = _chain_sampled(alphabets, bounds, exps, prod_pos,
                                         prod_rhs, violations,
                                         samples, f"{seed}:chain")
    return {
        "passed": not violations,
        "mode": mode,
        "horizon": horizon,
        "digit_cap": digit_cap,
        "stream_space": str(total),
        "checked": checked,
        "kernel": kernel,
        "bounds": bounds,
        "zeta_floor": list(table.zeta_floor),
        "determined_constraints": det,
        "violations": violations,
        "note": "" if mode == "exhaustive" else "sampled, not exhaustive",
    }


def _check_stream(stream: Sequence[int], bounds: Sequence[int],
                  exps: Sequence[int], prod_pos, prod_rhs) -> dict | None:
    for p, (d, b) in enumerate(zip(stream, bounds), start=1):
        if b >= 0 and d > b:
            return {"kind": "bound", "position": p, "stream": list(stream)}
    for idx, (pos, rhs) in enumerate(zip(prod_pos, prod_rhs)):
        lhs = 1
        for p, e in zip(pos, exps):
            lhs *= stream[p] ** e
        if lhs * rhs.denominator > rhs.numerator:
            return {"kind": "product", "constraint": idx,
                    "stream": list(stream)}
    return None


def _int64_safe(alphabets, exps, prod_rhs) -> bool:
    if any(r.denominator != 1 for r in prod_rhs):
        return False
    top = max(max(a) for a in alphabets)
    worst = 1
    for e in exps:
        worst *= top ** e
    return worst < _INT64_SAFE and all(r.numerator < _INT64_SAFE
                                       for r in prod_rhs)


def _chain_exhaustive(alphabets, bounds, exps, prod_pos, prod_rhs,
                      violations) -> tuple[int, str]:
    total = math.prod(len(a) for a in alphabets)
    if _int64_safe(alphabets, exps, prod_rhs):
        width = max(len(a) for a in alphabets)
        alph = np.zeros((len(alphabets), width), dtype=np.int64)
        for i, a in enumerate(alphabets):
            alph[i, :len(a)] = a
        widths = np.array([len(a) for a in alphabets], dtype=np.int64)
        bnd = np.array(bounds, dtype=np.int64)
        ppos = (np.array(prod_pos, dtype=np.int64)
                if prod_pos else np.zeros((0, len(exps)), dtype=np.int64))
        pexp = np.array(exps, dtype=np.int64)
        prhs = np.array([int(r) for r in prod_rhs], dtype=np.int64)
        count, first = chain_scan(alph, widths, bnd, ppos, pexp, prhs)
        if count:
            stream = _decode_stream(alphabets, int(first))
            wit = _check_stream(stream, bounds, exps, prod_pos, prod_rhs)
            violations.append(wit if wit is not None else
                              {"kind": "product", "stream": stream})
            violations.append({"kind": "count", "total": int(count)})
        from .kernels import numba_enabled
        return total, "njit" if numba_enabled() else "numpy"
    checked = 0
    for stream in itertools.product(*alphabets):
        checked += 1
        wit = _check_stream(stream, bounds, exps, prod_pos, prod_rhs)
        if wit is not None:
            violations.append(wit)
            if len(violations) >= _MAX_WITNESSES:
                break
    return checked, "python"


def _decode_stream(alphabets, index: int) -> list[int]:
    """Stream at a mixed-radix odometer position (last position fastest)."""
    digits = []
    for a in reversed(alphabets):
        digits.append(a[index % len(a)])
        index //= len(a)
    return list(reversed(digits))


def _chain_sampled(alphabets, bounds, exps, prod_pos, prod_rhs, violations,
                   samples: int, seed_key: str) -> tuple[int, str]:
    rng = random.Random(seed_key)
    checked = 0
    for _ in range(samples):
        stream = [a[rng.randrange(len(a))] for a in alphabets]
        checked += 1
        wit = _check_stream(stream, bounds, exps, prod_pos, prod_rhs)
        if wit is not None:
            violations.append(wit)
            if len(violations) >= _MAX_WITNESSES:
                break
    return checked, "python"


# ---------------------------------------------------------------------------
# Report shaping.


def zeta_report(table: ZetaTable) -> dict:
    """JSON-ready view of the table: exact floors, float approximations,
    index maps, and monotonicity diagnostics."""
    spec = table.spec
    rows = []
    for n in range(1, table.horizon + 1):
        row = {"n": n}
        for i in range(1, spec.m + 1):
            row[f"zeta_{i}"] = float(table.zeta_i[i - 1][n - 1])
        row["zeta"] = float(table.zeta[n - 1])
        row["zeta_floor"] = table.zeta_floor[n - 1]
        rows.append(row)
    return {
        "m": spec.m,
        "t": [str(Fraction(ti)) for ti in spec.t],
        "g": list(spec.g_labels),
        "horizon": table.horizon,
        "phi_mode": "passthrough" if table.phi_strict.passthrough
                    else "strictified",
        "images": [sorted(img) for img in table.images],
        "m_index": [dict(sorted(t.items())) for t in table.m_table],
        "r_index": [dict(sorted(t.items())) for t in table.r_table],
        "rows": rows,
        "monotone_violations": [list(v) for v in table.monotone_violations],
        "zeta_monotone": all(i != 0 for i, _ in table.monotone_violations),
    }
