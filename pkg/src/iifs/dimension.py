"""Cover-sum diagnostics: critical exponents of restricted families of
fundamental intervals.

The natural cover of a restricted set at depth n is the family of fundamental
intervals of admissible digit strings; cover_sum evaluates sum |I(a)|^s over
them and critical_exponent bisects for the s where the sum crosses 1.  These
are finite-depth diagnostics: the reported exponents are labeled estimates,
never asserted to equal a Hausdorff dimension.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .core import IifsSystem
from .errors import InfeasibleError, InvalidInputError
from .exponent import DigitSet
from .growth import GrowthFn
from .ratmath import DEFAULT_PRECISION, RatInterval, pow_enclosure

_EXACT_CAP = 10 ** 5
_FLOAT_CAP = 10 ** 7
_SAMPLE_SIZE = 10 ** 5


@dataclass(frozen=True)
class AdmissibilityConstraint:
    """One clause of an admissibility predicate; constraints conjoin.

    kinds: "digit-set" (digit must lie in D), "bound" (digit at position n is
    <= phi(n)), "window" (digit at position n lies in an explicit finite
    set), "product" (digits bounded by a cap, with a whole-string predicate
    applied at the leaves).
    """

    kind: str
    digit_set: DigitSet | None = None
    phi: GrowthFn | None = None
    window_fn: Callable[[int], Sequence[int]] | None = None
    predicate: Callable[[tuple[int, ...]], bool] | None = None
    digit_cap: int | None = None


def digits_constraint(D: DigitSet) -> AdmissibilityConstraint:
    return AdmissibilityConstraint(kind="digit-set", digit_set=D)


def bound_constraint(phi: GrowthFn) -> AdmissibilityConstraint:
    return AdmissibilityConstraint(kind="bound", phi=phi)


def window_constraint(window_fn: Callable[[int], Sequence[int]]) -> AdmissibilityConstraint:
    return AdmissibilityConstraint(kind="window", window_fn=window_fn)


def product_constraint(predicate: Callable[[tuple[int, ...]], bool],
                       digit_cap: int) -> AdmissibilityConstraint:
    if digit_cap < 1:
        raise InvalidInputError("product constraint needs digit_cap >= 1")
    return AdmissibilityConstraint(kind="product", predicate=predicate,
                                   digit_cap=digit_cap)


def fixed_digits(digits: Sequence[int]) -> AdmissibilityConstraint:
    """The same finite alphabet at every position."""
    ordered = tuple(sorted(set(int(d) for d in digits)))
    if not ordered or ordered[0] < 1:
        raise InvalidInputError(f"need positive digits, got {digits}")
    return window_constraint(lambda n: ordered)


def resolve_alphabets(constraints: Sequence[AdmissibilityConstraint],
                      depth: int) -> list[list[int]]:
    """Finite admissible digit list per position 1..depth.

    At least one constraint must bound each position; otherwise the cover is
    not computable and the constraint set is rejected.
    """
    if depth < 1:
        raise InvalidInputError(f"depth must be >= 1, got {depth}")
    out: list[list[int]] = []
    for n in range(1, depth + 1):
        base: list[int] | None = None
        for c in constraints:
            cand: list[int] | None = None
            if c.kind == "window":
                cand = sorted(int(d) for d in c.window_fn(n))
            elif c.kind == "bound":
                cand = list(range(1, c.phi(n) + 1))
            elif c.kind == "product":
                cand = list(range(1, c.digit_cap + 1))
            elif c.kind == "digit-set" and c.digit_set.size is not None:
                cand = [c.digit_set.digit(k) for k in range(1, c.digit_set.size + 1)]
            if cand is not None and (base is None or len(cand) < len(base)):
                base = cand
        if base is None:
            raise InvalidInputError(
                f"no constraint bounds the digit alphabet at position {n}")
        keep = []
        for d in base:
            ok = d >= 1
            for c in constraints:
                if not ok:
                    break
                if c.kind == "digit-set":
                    ok = c.digit_set.contains(d)
                elif c.kind == "bound":
                    ok = d <= c.phi(n)
                elif c.kind == "window":
                    ok = d in set(int(v) for v in c.window_fn(n))
                elif c.kind == "product":
                    ok = d <= c.digit_cap
            if ok:
                keep.append(d)
        out.append(keep)
    return out


def _predicates(constraints: Sequence[AdmissibilityConstraint]):
    return [c.predicate for c in constraints
            if c.kind == "product" and c.predicate is not None]


@dataclass(frozen=True)
class LogLengthTable:
    """Float log lengths of admissible depth-n intervals.  When exhaustive is
    False the values are a seeded uniform sample and sums must be scaled by
    total/len(values)."""

    values: np.ndarray
    total: int
    exhaustive: bool
    depth: int


def _total(widths: Sequence[int]) -> int:
    t = 1
    for w in widths:
        t *= w
    return t


def _float_lengths_for_strings(system: IifsSystem, digits: np.ndarray) -> np.ndarray:
    spec = system.kernel_spec
    if spec is None:
        raise InvalidInputError(
            f"system {system.name} has no float kernel; use exact cover sums")
    if spec[0] == "mobius-unit":
        return kernels.mobius_log_lengths_explicit(digits)
    if spec[0] == "quadratic":
        _, p, q = spec
        n = digits.shape[0]
        lo, hi = np.zeros(n), np.ones(n)
        for j in range(digits.shape[1] - 1, -1, -1):
            x = digits[:, j].astype(np.float64)
            t1 = lo + x - 1.0
            t2 = hi + x - 1.0
            e1 = q / (t1 * t1 + (p + 1.0) * t1 + q)
            e2 = q / (t2 * t2 + (p + 1.0) * t2 + q)
            lo = np.minimum(e1, e2)
            hi = np.maximum(e1, e2)
        return np.log(hi - lo)
    # Affine: log length is the sum of per-digit log slope magnitudes.
    logs = np.log(np.abs(system.vector_deriv(digits.astype(np.float64), 0.5)))
    return logs.sum(axis=1)


def log_length_table(system: IifsSystem,
                     constraints: Sequence[AdmissibilityConstraint],
                     depth: int, *, cap: int = _FLOAT_CAP,
                     sample: int = _SAMPLE_SIZE,
                     seed: int = 0) -> LogLengthTable:
    """Enumerate (or sample, beyond cap) the float log lengths of admissible
    strings at the given depth."""
    alphabets = resolve_alphabets(constraints, depth)
    preds = _predicates(constraints)
    widths = [len(a) for a in alphabets]
    total = _total(widths)
    if total == 0:
        return LogLengthTable(np.empty(0), 0, True, depth)
    spec = system.kernel_spec
    if preds or spec is None:
        # Predicates need materialized strings: exact python enumeration.
        if total > _EXACT_CAP:
            raise InvalidInputError(
                f"predicate-constrained cover needs <= {_EXACT_CAP} strings, "
                f"got {total}")
        vals = []
        for digits, iv in _exact_intervals(system, alphabets, preds):
            vals.append(float(np.log(float(iv.width))) if iv.width > 0 else -np.inf)
        return LogLengthTable(np.array(vals), len(vals), True, depth)
    if total <= cap:
        maxw = max(widths)
        table = np.zeros((depth, maxw), np.int64)
        for j, a in enumerate(alphabets):
            table[j, : len(a)] = a
        warr = np.array(widths, np.int64)
        if spec[0] == "mobius-unit":
            vals = kernels.mobius_log_lengths(table, warr)
        elif spec[0] == "quadratic":
            _, p, q = spec
            vals = kernels.quadratic_log_lengths(p, q, table[::-1].copy(), warr[::-1].copy())
        else:
            acc = np.zeros(1)
            for j, a in enumerate(alphabets):
                logs = np.log(np.abs(system.vector_deriv(
                    np.array(a, np.float64), 0.5)))
                acc = (acc[:, None] + logs[None, :]).ravel()
            vals = acc
        return LogLengthTable(vals, total, True, depth)
    rng = random.Random(seed)
    picks = np.empty((sample, depth), np.int64)
    for j, a in enumerate(alphabets):
        idx = [rng.randrange(len(a)) for _ in range(sample)]
        picks[:, j] = np.array(a, np.int64)[idx]
    vals = _float_lengths_for_strings(system, picks)
    return LogLengthTable(vals, total, False, depth)


def _exact_intervals(system: IifsSystem, alphabets: list[list[int]], preds):
    """Yield (digits, RatInterval) for admissible strings, exact arithmetic."""
    depth = len(alphabets)
    total = _total([len(a) for a in alphabets])
    if total > _EXACT_CAP:
        raise InvalidInputError(
            f"exact cover enumeration capped at {_EXACT_CAP} strings, "
            f"requested {total}")

    def rec(pos: int, prefix: tuple[int, ...], iv: RatInterval):
        if pos == depth:
            if all(p(prefix) for p in preds):
                yield prefix, iv
            return
        for d in alphabets[pos]:
            nxt = system.branch(d).map_interval(iv)
            if system.arithmetic != "exact":
                nxt = nxt.round_outward(system.outward_prec)
            yield from rec(pos + 1, prefix + (d,), nxt)

    yield from rec(0, (), RatInterval(Fraction(0), Fraction(1)))


def cover_sum(system: IifsSystem,
              constraints: Sequence[AdmissibilityConstraint], depth: int, s,
              *, exact: bool | None = None,
              prec: int = DEFAULT_PRECISION, seed: int = 0):
    """Sum over admissible depth-n strings of |I(a)|^s.

    Float mode returns a float (sampled estimates are scaled to the full
    string count).  Exact mode returns a Fraction for integer s and an
    outward RatInterval enclosure for non-integer rational s.
    """
    if exact is None:
        exact = isinstance(s, Fraction)
    if exact:
        s = Fraction(s)
        if s < 0:
            raise InvalidInputError(f"s must be >= 0, got {s}")
        alphabets = resolve_alphabets(constraints, depth)
        preds = _predicates(constraints)
        if s.denominator == 1:
            acc = Fraction(0)
            for _, iv in _exact_intervals(system, alphabets, preds):
                acc += iv.width ** int(s)
            return acc
        lo = Fraction(0)
        hi = Fraction(0)
        for _, iv in _exact_intervals(system, alphabets, preds):
            enc = pow_enclosure(iv.width, s, prec)
            lo += enc.lo
            hi += enc.hi
        return RatInterval(lo, hi)
    sf = float(s)
    if sf < 0:
        raise InvalidInputError(f"s must be >= 0, got {s}")
    table = log_length_table(system, constraints, depth, seed=seed)
    return table_sum(table, sf)


def table_sum(table: LogLengthTable, s: float) -> float:
    if table.total == 0:
        return 0.0
    if s == 0:
        # exp(0 * log) is NaN for zero-length entries; the count is exact.
        return float(table.total)
    raw = float(np.exp(s * table.values).sum())
    if table.exhaustive:
        return raw
    return raw * (table.total / len(table.values))


def critical_exponent(system: IifsSystem,
                      constraints: Sequence[AdmissibilityConstraint],
                      depth: int, *, tol: float = 1e-9,
                      bracket: tuple[float, float] = (0.0, 1.5),
                      max_iter: int = 60, seed: int = 0) -> float:
    """The s where the depth-n cover sum crosses 1, by bisection.

    The cover sum is strictly decreasing in s (all lengths < 1), so the
    crossing is unique when it exists.
    """
    table = log_length_table(system, constraints, depth, seed=seed)
    lo, hi = float(bracket[0]), float(bracket[1])
    at_lo = table_sum(table, lo)
    if at_lo < 1.0:
        raise InfeasibleError(
            f"no crossing: cover sum at s={lo} is {at_lo:.6g} < 1")
    if at_lo == 1.0:
        return lo
    if table_sum(table, hi) >= 1.0:
        raise InfeasibleError(
            f"no crossing: cover sum still >= 1 at s={hi}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if table_sum(table, mid) >= 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def slow_growth_sweep(system: IifsSystem, D: DigitSet,
                      phi_family: Sequence[GrowthFn], depth: int, *,
                      tol: float = 1e-9) -> list[dict]:
    """Critical exponent of the (D, phi)-restricted cover for each phi.

    Rows are monotone under pointwise phi-domination: a larger bound admits
    every string the smaller one does.
    """
    rows = []
    for phi in phi_family:
        cons = [digits_constraint(D), bound_constraint(phi)]
        alphabets = resolve_alphabets(cons, depth)
        sizes = [len(a) for a in alphabets]
        if min(sizes) == 0:
            rows.append({"phi": phi.label, "depth": depth,
                         "exponent": 0.0, "alphabet_sizes": sizes,
                         "note": "empty alphabet at some position"})
            continue
        value = critical_exponent(system, cons, depth, tol=tol)
        rows.append({"phi": phi.label, "depth": depth, "exponent": value,
                     "alphabet_sizes": sizes})
    return rows
