"""Digit-bound functions phi: slowly growing caps on admissible digits.

Presets evaluate exactly on arbitrarily large integers via bit_length, so
threshold searches can probe astronomically deep positions without floats.
The iterated-log family is L_0(n) = n, L_k(n) = floor(log2(L_{k-1}(n) + 2));
`log` is L_1 and `loglog` is L_2.  Every preset is total and nondecreasing.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Callable

from .errors import InfeasibleError, InvalidInputError

_DOUBLING_CAP = 512
_MAX_RESULT_BITS = 1 << 25  # threshold integers above ~4 MiB are rejected


def _floor_log2(m: int) -> int:
    return m.bit_length() - 1


@dataclass(frozen=True)
class GrowthFn:
    """A digit bound n -> phi(n) together with a nondecreasing minorant used
    for threshold queries of the form "phi(n') >= v for all n' >= n".  For
    monotone phi the minorant is phi itself.  Presets with a closed-form
    inverse supply it so thresholds far beyond any doubling search stay
    exact."""

    fn: Callable[[int], int]
    label: str
    minorant: Callable[[int], int]
    is_monotone: bool = True
    declared_divergent: bool = True
    inverse_fn: Callable[[int], int] | None = None

    def __call__(self, n: int) -> int:
        if n < 1:
            raise InvalidInputError(f"phi is defined on n >= 1, got {n}")
        return self.fn(n)

    def first_n_reaching(self, value: int) -> int:
        """Least n with minorant(n) >= value; since the minorant is
        nondecreasing, phi(n') >= value for every n' >= n.

        Raises InfeasibleError when doubling up to 2**_DOUBLING_CAP never
        reaches the target (a divergence violation witness).
        """
        if self.minorant(1) >= value:
            return 1
        if self.inverse_fn is not None:
            return self.inverse_fn(value)
        hi = 1
        for _ in range(_DOUBLING_CAP):
            hi *= 2
            if self.minorant(hi) >= value:
                break
        else:
            raise InfeasibleError(
                f"divergence violation: phi ({self.label}) never reaches "
                f"{value} up to n = 2**{_DOUBLING_CAP}")
        lo = hi // 2  # minorant(lo) < value <= minorant(hi)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.minorant(mid) >= value:
                hi = mid
            else:
                lo = mid
        return hi


def iterated_log_growth(k: int) -> GrowthFn:
    k = int(k)
    if k < 1:
        raise InvalidInputError(f"iterated-log depth must be >= 1, got {k}")

    def fn(n: int) -> int:
        v = n
        for _ in range(k):
            v = _floor_log2(v + 2)
        return v

    label = {1: "log", 2: "loglog"}.get(k, f"iterated-log:{k}")

    def inverse(value: int) -> int:
        # L_1(n) >= t iff n >= 2**t - 2, so the least witness is a tower.
        t = value
        for _ in range(k):
            if t > _MAX_RESULT_BITS:
                raise InfeasibleError(
                    f"threshold for {label} >= {value} needs an integer of "
                    f"about 2**{t} bits, beyond the representable cap")
            t = (1 << t) - 2
        return t

    return GrowthFn(fn, label, fn, inverse_fn=inverse)


def log_growth() -> GrowthFn:
    return iterated_log_growth(1)


def loglog_growth() -> GrowthFn:
    return iterated_log_growth(2)


def affine_growth(a: int, b: int) -> GrowthFn:
    a, b = int(a), int(b)
    if a < 0 or b < 1:
        raise InvalidInputError(
            f"affine growth needs a >= 0 and slope b >= 1, got {a}, {b}")

    def fn(n: int) -> int:
        return a + b * n

    def inverse(value: int) -> int:
        return max(1, -((a - value) // b))

    return GrowthFn(fn, f"affine:{a},{b}", fn, inverse_fn=inverse)


def constant_growth(M: int) -> GrowthFn:
    M = int(M)
    if M < 1:
        raise InvalidInputError(f"constant bound must be >= 1, got {M}")
    return GrowthFn(lambda n: M, f"constant:{M}", lambda n: M,
                    declared_divergent=False)


def growth_from_file(path: str) -> GrowthFn:
    """Step-function table: lines `n value`, phi(n) = value of the last row
    whose n-column is <= n.  Rows must increase in both columns, so the table
    is its own minorant.  Tables are bounded, hence never divergent."""
    rows: list[tuple[int, int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise InvalidInputError(f"bad growth table line: {raw!r}")
            rows.append((int(parts[0]), int(parts[1])))
    if not rows:
        raise InvalidInputError(f"growth table {path} is empty")
    if rows[0][0] != 1:
        raise InvalidInputError("growth table must start at n = 1")
    for (n0, v0), (n1, v1) in zip(rows, rows[1:]):
        if n1 <= n0 or v1 < v0:
            raise InvalidInputError(
                "growth table rows must increase in n and be nondecreasing "
                "in value")
    if any(v < 1 for _, v in rows):
        raise InvalidInputError("growth values must be >= 1")
    starts = [n for n, _ in rows]
    values = [v for _, v in rows]

    def fn(n: int) -> int:
        i = bisect.bisect_right(starts, n) - 1
        return values[i]

    return GrowthFn(fn, f"file:{path}", fn, declared_divergent=False)


def parse_growth(selector: str) -> GrowthFn:
    sel = selector.strip()
    if sel == "log":
        return log_growth()
    if sel == "loglog":
        return loglog_growth()
    if sel.startswith("iterated-log:"):
        return iterated_log_growth(int(sel.split(":", 1)[1]))
    if sel.startswith("affine:"):
        parts = sel.split(":", 1)[1].split(",")
        if len(parts) != 2:
            raise InvalidInputError(f"affine selector needs a,b; got {selector!r}")
        return affine_growth(int(parts[0]), int(parts[1]))
    if sel.startswith("constant:"):
        return constant_growth(int(sel.split(":", 1)[1]))
    if sel.startswith("file="):
        return growth_from_file(sel.split("=", 1)[1])
    raise InvalidInputError(f"unknown growth selector {selector!r}")
