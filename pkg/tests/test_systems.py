"""Bundled systems: quadratic Gauss digit extraction, GLS packings, file
parsing, declared-constant verification, and the selector grammar."""

import random
from fractions import Fraction

import pytest

from iifs.core import (
    compose_map,
    digits_of,
    estimate_distortion,
    fundamental_interval,
    verify_contraction,
)
from iifs.errors import AmbiguousPointError, HorizonError, InvalidInputError
from iifs.systems import (
    GlsSpec,
    dyadic_gls_spec,
    gauss_system,
    gls_spec_from_file,
    gls_system,
    luroth_system,
    parse_system,
    quadratic_gauss_system,
)

F = Fraction


class TestQuadraticGauss:
    def test_unit_case_is_inverse_square(self):
        sys = quadratic_gauss_system(1, 1)
        br = sys.branch(3)  # 1/(x+3)^2
        assert br.eval(F(0)) == F(1, 9)
        assert br.eval(F(1)) == F(1, 16)
        assert br.deriv(F(0)) == F(-2, 27)

    def test_branch_images_tile_right_to_left(self):
        sys = quadratic_gauss_system(1, 1)
        # Branch n covers [1/(n+1)^2, 1/n^2]; neighbours share one endpoint.
        for n in range(1, 6):
            iv = fundamental_interval(sys, (n,))
            assert (iv.lo, iv.hi) == (F(1, (n + 1) ** 2), F(1, n ** 2))

    def test_digit_extraction(self):
        sys = quadratic_gauss_system(1, 1)
        assert digits_of(sys, F(1, 5), 2) == (2, 2)
        assert digits_of(sys, F(1, 2), 4) == (1, 1, 1, 1)

    def test_digits_invert_composition(self):
        sys = quadratic_gauss_system(1, 1)
        rng = random.Random(17)
        for _ in range(10):
            depth = rng.randint(1, 5)
            prefix = tuple(rng.randint(1, 6) for _ in range(depth))
            x = compose_map(sys, prefix, F(1, 5))
            assert digits_of(sys, x, depth + 1) == prefix + (2,)

    def test_boundary_is_ambiguous(self):
        sys = quadratic_gauss_system(1, 1)
        with pytest.raises(AmbiguousPointError):
            digits_of(sys, F(1, 4), 1)

    def test_general_polynomial(self):
        # P(x) = x^2 + 2x + 3: branch 1 sends x to 3/(x^2 + 3x + 3).
        sys = quadratic_gauss_system(2, 3)
        br = sys.branch(1)
        assert br.eval(F(0)) == F(1)
        assert br.eval(F(1)) == F(3, 7)
        assert br.increasing is False
        d = digits_of(sys, F(1, 2), 3)
        assert d[0] == 1
        iv = fundamental_interval(sys, d)
        assert iv.contains(F(1, 2))

    def test_parameter_validation(self):
        with pytest.raises(InvalidInputError):
            quadratic_gauss_system(-2, 1)
        with pytest.raises(InvalidInputError):
            quadratic_gauss_system(1, 0)

    def test_contraction_supremum_exact(self):
        rep = verify_contraction(quadratic_gauss_system(1, 1), grid_size=4,
                                 digit_horizon=8)
        # |(f_1 o f_1)'(0)| = |f_1'(1)| |f_1'(0)| = (2/8) * 2 = 1/2.
        assert rep.measured_sup == F(1, 2)
        assert rep.passed

    def test_distortion_within_declared(self):
        rep = estimate_distortion(quadratic_gauss_system(1, 1), depth=5,
                                  samples=60)
        assert rep.passed


class TestGlsDyadic:
    def test_first_branch(self):
        sys = gls_system(dyadic_gls_spec())
        iv = fundamental_interval(sys, (1,))
        assert (iv.lo, iv.hi) == (F(1, 2), F(1))
        assert sys.branch(1).deriv(F(0)) == F(1, 2)

    def test_interval_ladder(self):
        sys = gls_system(dyadic_gls_spec())
        for n in range(1, 8):
            iv = fundamental_interval(sys, (n,))
            assert (iv.lo, iv.hi) == (F(1, 2 ** n), F(1, 2 ** (n - 1)))

    def test_periodic_digit_streams(self):
        sys = gls_system(dyadic_gls_spec())
        assert digits_of(sys, F(1, 3), 10) == (2,) * 10
        assert digits_of(sys, F(1, 5), 6) == (3, 1, 3, 1, 3, 1)

    def test_dyadic_points_are_boundaries(self):
        sys = gls_system(dyadic_gls_spec())
        with pytest.raises(AmbiguousPointError):
            digits_of(sys, F(1, 4), 1)
        with pytest.raises(AmbiguousPointError):
            digits_of(sys, F(3, 8), 2)  # second remainder lands on 1/2

    def test_roundtrip(self):
        sys = gls_system(dyadic_gls_spec())
        rng = random.Random(23)
        for _ in range(20):
            depth = rng.randint(1, 8)
            prefix = tuple(rng.randint(1, 6) for _ in range(depth))
            x = compose_map(sys, prefix, F(1, 3))
            assert digits_of(sys, x, depth + 2) == prefix + (2, 2)

    def test_contraction_and_distortion(self):
        sys = gls_system(dyadic_gls_spec())
        rep = verify_contraction(sys, grid_size=4, digit_horizon=10)
        assert rep.measured_sup == F(1, 2)
        assert rep.passed
        dist = estimate_distortion(sys, depth=4, samples=40)
        assert dist.measured == 1


class TestGlsFile:
    def write_spec(self, tmp_path, text):
        path = tmp_path / "intervals.gls"
        path.write_text(text)
        return str(path)

    def test_parse_and_tail(self, tmp_path):
        path = self.write_spec(tmp_path, "# two listed intervals\n1/2 0\n1/4 1\n")
        spec = gls_spec_from_file(path)
        assert spec.length(1) == F(1, 2)
        assert spec.length(2) == F(1, 4)
        assert spec.orient_fn(2) == 1
        # Geometric tail halves the remaining 1/4.
        assert spec.length(3) == F(1, 8)
        assert spec.orient_fn(3) == 0

    def test_reversed_branch_digits(self, tmp_path):
        path = self.write_spec(tmp_path, "1/2 0\n1/4 1\n")
        sys = gls_system(gls_spec_from_file(path))
        # Branch 2 is orientation-reversing onto [1/4, 1/2].
        br = sys.branch(2)
        assert br.eval(F(0)) == F(1, 2)
        assert br.eval(F(1)) == F(1, 4)
        assert digits_of(sys, F(1, 3), 6) == (2, 1, 2, 1, 2, 1)

    def test_rejects_bad_files(self, tmp_path):
        with pytest.raises(InvalidInputError):
            gls_spec_from_file(self.write_spec(tmp_path, ""))
        with pytest.raises(InvalidInputError):
            gls_spec_from_file(self.write_spec(tmp_path, "1/4 0\n1/2 0\n"))
        with pytest.raises(InvalidInputError):
            gls_spec_from_file(self.write_spec(tmp_path, "1/2 2\n"))
        with pytest.raises(InvalidInputError):
            gls_spec_from_file(self.write_spec(tmp_path, "1/2 0\n1/2 0\n"))
        # Remainder 1/2 would need a tail starting at 1/4 > listed 1/8.
        with pytest.raises(InvalidInputError):
            gls_spec_from_file(self.write_spec(tmp_path, "3/8 0\n1/8 0\n"))

    def test_tiny_digit_guard(self):
        # Lengths shrinking so slowly that small points exhaust the cap.
        spec = GlsSpec(lambda n: F(1, n * (n + 1)), lambda n: 0, "slow")
        sys = gls_system(spec, max_digit=1000)
        assert digits_of(sys, F(2, 3), 1) == (1,)
        with pytest.raises(HorizonError):
            digits_of(sys, F(1, 5000), 1)


class TestXiProfiles:
    def test_declared_profiles(self):
        assert gauss_system().xi(7) == 49
        assert luroth_system().xi(7) == 56
        assert quadratic_gauss_system(1, 1).xi(4) == 64
        assert gls_system(dyadic_gls_spec()).xi(5) == 32

    def test_power_exponents(self):
        assert gauss_system().xi.power_exponent == 2
        assert quadratic_gauss_system(1, 1).xi.power_exponent == 3
        assert luroth_system().xi.power_exponent is None


class TestSelectors:
    def test_builtin_names(self):
        assert parse_system("gauss").name == "gauss"
        assert parse_system("luroth").name == "luroth"
        assert parse_system("gls:dyadic").name == "gls:dyadic"

    def test_quadratic_args(self):
        sys = parse_system("quadratic-gauss:2,3")
        assert sys.branch(1).eval(F(1)) == F(3, 7)
        assert parse_system("quadratic-gauss").branch(1).eval(F(1)) == F(1, 4)

    def test_file_selector(self, tmp_path):
        path = tmp_path / "spec.gls"
        path.write_text("1/2 0\n1/4 0\n")
        sys = parse_system(f"gls:file={path}")
        assert fundamental_interval(sys, (2,)).length == F(1, 4)

    def test_unknown_selector(self):
        with pytest.raises(InvalidInputError):
            parse_system("engel")
        with pytest.raises(InvalidInputError):
            parse_system("quadratic-gauss:1")
