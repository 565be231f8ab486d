"""Core digit-system machinery: composition, fundamental intervals, digit
extraction, and the axiom verifiers, checked against hand-computable oracles."""

import random
from fractions import Fraction

import pytest

from iifs.core import (
    Branch,
    compose_map,
    digits_of,
    estimate_distortion,
    fit_regularity,
    check_regularity,
    fundamental_interval,
    natural_projection,
    verify_contraction,
)
from iifs.errors import AmbiguousPointError, InvalidInputError
from iifs.systems import gauss_system, luroth_system
from iifs.ratmath import RatInterval

F = Fraction


def continuant_tail(digits):
    """(q_n, q_{n-1}) for the continued-fraction denominator recurrence."""
    qm1, q = 0, 1
    for d in digits:
        qm1, q = q, d * q + qm1
    return q, qm1


class TestBranch:
    def test_mobius_eval_deriv(self):
        br = Branch("mobius", (0, 1, 1, 3))  # 1/(x+3)
        assert br.eval(F(1, 2)) == F(2, 7)
        assert br.deriv(F(0)) == F(-1, 9)
        assert not br.increasing

    def test_affine_eval_deriv(self):
        br = Branch("affine", (F(1, 6), F(1, 3)))
        assert br.eval(F(1)) == F(1, 2)
        assert br.deriv(F(1, 7)) == F(1, 6)
        assert br.increasing

    def test_map_interval_orientation(self):
        br = Branch("mobius", (0, 1, 1, 3))
        img = br.map_interval(RatInterval(F(0), F(1)))
        assert (img.lo, img.hi) == (F(1, 4), F(1, 3))


class TestComposeMap:
    def test_gauss_two_digits(self):
        sys = gauss_system()
        # f_1(f_2(x)) = 1/(1/(x+2) + 1) = (x+2)/(x+3)
        assert compose_map(sys, (1, 2), F(0)) == F(2, 3)
        assert compose_map(sys, (1, 2), F(1)) == F(3, 4)

    def test_rejects_bad_digits_and_points(self):
        sys = gauss_system()
        with pytest.raises(InvalidInputError):
            compose_map(sys, (0, 1), F(1, 2))
        with pytest.raises(InvalidInputError):
            compose_map(sys, (1,), F(2))

    def test_empty_composition_is_identity(self):
        sys = gauss_system()
        assert compose_map(sys, (), F(1, 3)) == F(1, 3)


class TestFundamentalIntervals:
    def test_gauss_depth_one(self):
        sys = gauss_system()
        iv = fundamental_interval(sys, (3,))
        assert (iv.lo, iv.hi) == (F(1, 4), F(1, 3))

    def test_gauss_one_one(self):
        sys = gauss_system()
        iv = fundamental_interval(sys, (1, 1))
        assert (iv.lo, iv.hi) == (F(1, 2), F(2, 3))
        assert iv.length == F(1, 6)

    def test_gauss_length_law_random(self):
        # |I(a_1..a_n)| = 1/(q_n (q_n + q_{n-1})) via the continuant recurrence.
        sys = gauss_system()
        rng = random.Random(7)
        for _ in range(40):
            depth = rng.randint(1, 8)
            digits = tuple(rng.randint(1, 9) for _ in range(depth))
            q, qm1 = continuant_tail(digits)
            assert fundamental_interval(sys, digits).length == F(1, q * (q + qm1))

    def test_luroth_length_is_slope_product(self):
        sys = luroth_system()
        iv = fundamental_interval(sys, (2,))
        assert (iv.lo, iv.hi) == (F(1, 3), F(1, 2))
        rng = random.Random(11)
        for _ in range(40):
            depth = rng.randint(1, 8)
            digits = tuple(rng.randint(1, 9) for _ in range(depth))
            want = F(1)
            for d in digits:
                want /= d * (d + 1)
            assert fundamental_interval(sys, digits).length == want

    def test_children_disjoint_and_nested(self):
        for sys in (gauss_system(), luroth_system()):
            parents = [(), (1,), (2, 3)]
            for parent in parents:
                kids = [fundamental_interval(sys, parent + (d,)) for d in range(1, 9)]
                if parent:
                    outer = fundamental_interval(sys, parent)
                    for kid in kids:
                        assert outer.lo <= kid.lo and kid.hi <= outer.hi
                kids.sort(key=lambda k: k.lo)
                for a, b in zip(kids, kids[1:]):
                    assert a.hi <= b.lo

    def test_needs_one_digit(self):
        with pytest.raises(InvalidInputError):
            fundamental_interval(gauss_system(), ())


class TestDigitsOf:
    def test_gauss_golden_convergent(self):
        # 55/89 has continued fraction [0; 1,1,1,1,1,1,1,1,2].
        assert digits_of(gauss_system(), F(55, 89), 5) == (1, 1, 1, 1, 1)

    def test_gauss_prefix_roundtrip(self):
        sys = gauss_system()
        # 5/7 = [0; 1, 2, 2]: first two digits are unambiguous.
        assert digits_of(sys, F(5, 7), 2) == (1, 2)
        rng = random.Random(3)
        for _ in range(20):
            depth = rng.randint(1, 6)
            prefix = tuple(rng.randint(1, 9) for _ in range(depth))
            x = compose_map(sys, prefix, F(5, 7))
            assert digits_of(sys, x, depth + 2) == prefix + (1, 2)

    def test_luroth_fixed_point(self):
        # x = 2/5 is the fixed point of branch 2: x/6 + 1/3.
        sys = luroth_system()
        assert digits_of(sys, F(2, 5), 12) == (2,) * 12

    def test_luroth_prefix_roundtrip(self):
        sys = luroth_system()
        rng = random.Random(5)
        for _ in range(20):
            depth = rng.randint(1, 8)
            prefix = tuple(rng.randint(1, 9) for _ in range(depth))
            x = compose_map(sys, prefix, F(2, 5))
            assert digits_of(sys, x, depth + 3) == prefix + (2, 2, 2)

    def test_boundary_points_are_ambiguous(self):
        with pytest.raises(AmbiguousPointError):
            digits_of(gauss_system(), F(1, 2), 1)
        with pytest.raises(AmbiguousPointError):
            digits_of(luroth_system(), F(1, 3), 1)
        # 3/7 -> digit 2, then remainder 1/3 which is a boundary point.
        with pytest.raises(AmbiguousPointError):
            digits_of(luroth_system(), F(5, 14), 2)

    def test_rejects_endpoints_and_bad_depth(self):
        sys = gauss_system()
        with pytest.raises(InvalidInputError):
            digits_of(sys, F(0), 1)
        with pytest.raises(InvalidInputError):
            digits_of(sys, F(1, 2), 0)


class TestNaturalProjection:
    def test_consumes_budget(self):
        import itertools
        sys = gauss_system()
        iv = natural_projection(sys, itertools.count(1), 5)
        assert iv.digits == (1, 2, 3, 4, 5)
        assert iv.contains(compose_map(sys, (1, 2, 3, 4, 5), F(1, 2)))

    def test_short_stream_rejected(self):
        with pytest.raises(InvalidInputError):
            natural_projection(gauss_system(), iter([1, 2]), 5)


class TestContraction:
    def test_gauss_pair_supremum_is_exact(self):
        # |(f_1 o f_1)'(0)| = |f_1'(1)| * |f_1'(0)| = (1/4) * 1 = 1/4 and no
        # pair of branches beats it.
        rep = verify_contraction(gauss_system(), grid_size=8, digit_horizon=12)
        assert rep.measured_sup == F(1, 4)
        assert rep.passed
        assert rep.witness_digits == (1, 1)

    def test_luroth_supremum(self):
        rep = verify_contraction(luroth_system(), grid_size=4, digit_horizon=12)
        assert rep.measured_sup == F(1, 2)
        assert rep.witness_digits == (1,)
        assert rep.passed

    def test_fails_against_tighter_rho(self):
        import dataclasses
        sys = dataclasses.replace(gauss_system(), rho=F(1, 5))
        rep = verify_contraction(sys, grid_size=4, digit_horizon=6)
        assert not rep.passed
        assert rep.measured_sup == F(1, 4)


class TestDistortion:
    def test_affine_distortion_is_one(self):
        rep = estimate_distortion(luroth_system(), depth=5, samples=60)
        assert rep.measured == 1
        assert rep.passed

    def test_gauss_distortion_below_declared(self):
        rep = estimate_distortion(gauss_system(), depth=6, samples=80)
        assert 1 < rep.measured <= 4
        assert rep.passed


class TestRegularity:
    def test_gauss_declared_constants_hold(self):
        sys = gauss_system()
        assert check_regularity(sys, F(1, 10), F(1, 4), F(1), digit_horizon=60)

    def test_gauss_overtight_c1_fails(self):
        sys = gauss_system()
        assert not check_regularity(sys, F(1, 10), F(1, 2), F(1), digit_horizon=60)

    def test_fit_meets_declaration(self):
        sys = luroth_system()
        fit = fit_regularity(sys, F(1, 10), digit_horizon=40, grid_size=4)
        assert fit.c1 >= 1 or abs(fit.c1 - 1) < F(1, 1000)
        assert fit.c2 <= 1
        assert check_regularity(sys, F(1, 10), fit.c1, fit.c2, digit_horizon=40,
                                grid_size=4)
