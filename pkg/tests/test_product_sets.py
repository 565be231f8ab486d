"""Weighted-product constraint reduction: exact power comparisons, index
maps, strictified bounds, the zeta table checked against an independent
recomputation straight from the definitions, and brute-force subset-chain
enumeration over both kernel lanes."""

import json
import math
from fractions import Fraction

import numpy as np
import pytest

from iifs.errors import HorizonError, InfeasibleError, InvalidInputError
from iifs.exponent import arithmetic_digits, full_digits, square_digits
from iifs.growth import GrowthFn, affine_growth, constant_growth
from iifs.kernels import chain_scan_njit, chain_scan_numpy
from iifs.product_sets import (
    PowerValue,
    ProductSpec,
    build_zeta,
    determined_indices,
    first_product_violation,
    m_index,
    membership_P,
    r_index,
    required_length,
    strictify,
    subset_chain_check,
    zeta_report,
)

NATS = full_digits()
PHI9 = affine_growth(9, 1)


def pair_spec():
    """Two coordinates, unit weights, g1(n) = n+1 and g2(n) = n+2, bound
    phi(n) = n+9: zeta(1) and zeta(2) come out in the wrong order."""
    return ProductSpec(
        m=2, t=(Fraction(1), Fraction(1)),
        g=(lambda n: n + 1, lambda n: n + 2),
        phi=PHI9, D=NATS, g_labels=("n+1", "n+2"))


def plateau_phi():
    return GrowthFn(lambda n: n // 2 + 5, "plateau", lambda n: n // 2 + 5)


def naive_zeta_columns(spec, horizon, scan=500):
    """Recompute every zeta_i entry straight from the definitions: least
    preimages by downward scan, resolvents from the explicit preimage pool,
    no shared code with the implementation."""
    cols = []
    for i in range(spec.m):
        g = spec.g[i]
        exponent = Fraction(1) / (spec.m * Fraction(spec.t[i]))
        least = {}
        for r in range(scan, 0, -1):
            least[g(r)] = r
        pool = sorted(set(least.values()))
        col = []
        for n in range(1, horizon + 1):
            if n in least:
                arg = least[n]
            else:
                above = [v for v in pool if v > n]
                if above:
                    arg = min(above)
                else:
                    arg = max(v for v in pool if v < n) + n
            col.append((Fraction(spec.phi(arg)), exponent))
        cols.append(col)
    return cols


class TestPowerValue:
    def test_exact_root_comparisons(self):
        sqrt10 = PowerValue(Fraction(10), Fraction(1, 2))
        assert sqrt10.ge_rational(3)
        assert sqrt10.ge_rational(Fraction(316227766, 10 ** 8))
        assert not sqrt10.ge_rational(Fraction(316227767, 10 ** 8))
        assert PowerValue(Fraction(9), Fraction(1, 2)).ge_rational(3)
        assert not PowerValue(Fraction(9), Fraction(1, 2)).ge_rational(
            Fraction(3) + Fraction(1, 10 ** 30))

    def test_ordering(self):
        sqrt10 = PowerValue(Fraction(10), Fraction(1, 2))
        sqrt11 = PowerValue(Fraction(11), Fraction(1, 2))
        cbrt32 = PowerValue(Fraction(32), Fraction(1, 3))
        assert sqrt10.le_power(sqrt11)
        assert not sqrt11.le_power(sqrt10)
        assert sqrt10.le_power(cbrt32)
        assert cbrt32.le_power(sqrt11)
        assert sqrt10.le_power(sqrt10)

    def test_floor(self):
        assert PowerValue(Fraction(10), Fraction(1, 2)).floor() == 3
        assert PowerValue(Fraction(16), Fraction(1, 2)).floor() == 4
        assert PowerValue(Fraction(5, 2), Fraction(3)).floor() == 15

    def test_rejects_nonpositive(self):
        with pytest.raises(InvalidInputError):
            PowerValue(Fraction(0), Fraction(1, 2))
        with pytest.raises(InvalidInputError):
            PowerValue(Fraction(2), Fraction(0))


class TestSpec:
    def test_shape_validation(self):
        with pytest.raises(InvalidInputError, match="index maps"):
            ProductSpec(m=2, t=(Fraction(1),), g=(lambda n: n,),
                        phi=PHI9, D=NATS)
        with pytest.raises(InvalidInputError, match="positive"):
            ProductSpec(m=1, t=(Fraction(-1),), g=(lambda n: n,),
                        phi=PHI9, D=NATS)

    def test_codomain_floor(self):
        odd = arithmetic_digits(3, 2)
        spec = ProductSpec(m=2, t=(Fraction(1), Fraction(1)),
                           g=(lambda n: n, lambda n: n + 1),
                           phi=constant_growth(9), D=odd)
        assert spec.M_of_D.base == 3 and spec.M_of_D.exponent == 2
        spec.check_codomain(5)
        low = ProductSpec(m=2, t=(Fraction(1), Fraction(1)),
                          g=(lambda n: n, lambda n: n + 1),
                          phi=affine_growth(1, 1), D=odd)
        with pytest.raises(InvalidInputError, match="below M"):
            low.check_codomain(5)

    def test_codomain_exponent_floor_at_one(self):
        spec = ProductSpec(m=1, t=(Fraction(1, 2),), g=(lambda n: n,),
                           phi=PHI9, D=NATS)
        assert spec.M_of_D.exponent == 1


class TestStrictify:
    def test_constant_phi_is_infeasible(self):
        with pytest.raises(InfeasibleError, match="divergence violation"):
            strictify(constant_growth(5), 10)

    def test_passthrough(self):
        ps = strictify(PHI9, 8, assume_strict=True)
        assert ps.passthrough
        assert [ps(n) for n in range(1, 9)] == [PHI9(n) for n in range(1, 9)]
        with pytest.raises(InvalidInputError, match="not strictly"):
            strictify(plateau_phi(), 8, assume_strict=True)

    def test_plateau_minorant(self):
        phi = plateau_phi()
        ps = strictify(phi, 9)
        vals = [ps(n) for n in range(1, 10)]
        assert all(a < b for a, b in zip(vals, vals[1:]))
        assert all(ps(n) < phi(n) for n in range(1, 10))
        assert all(phi(n) - ps(n) <= Fraction(1, 2) for n in range(1, 10))

    def test_horizon_guard(self):
        ps = strictify(PHI9, 4, assume_strict=True)
        with pytest.raises(HorizonError):
            ps(5)
        with pytest.raises(HorizonError):
            ps(0)


class TestIndexMaps:
    def test_least_preimage(self):
        spec = pair_spec()
        assert m_index(spec, 1, 5) == 4
        assert m_index(spec, 2, 5) == 3
        assert m_index(spec, 1, 1) is None
        ident = ProductSpec(m=1, t=(Fraction(1),), g=(lambda n: n,),
                            phi=PHI9, D=NATS)
        assert all(m_index(ident, 1, k) == k for k in range(1, 9))
        even = ProductSpec(m=1, t=(Fraction(1),), g=(lambda n: 2 * n,),
                           phi=PHI9, D=NATS)
        assert m_index(even, 1, 7) is None
        assert m_index(even, 1, 8) == 4

    def test_resolvent(self):
        shift = ProductSpec(m=1, t=(Fraction(1),), g=(lambda n: n + 2,),
                            phi=PHI9, D=NATS)
        assert r_index(shift, 1, 1) == 2
        const = ProductSpec(m=1, t=(Fraction(1),), g=(lambda n: 1,),
                            phi=PHI9, D=NATS)
        assert r_index(const, 1, 3) == 4
        with pytest.raises(HorizonError, match="enlarge"):
            r_index(const, 1, 1)

    def test_coordinate_bounds(self):
        spec = pair_spec()
        with pytest.raises(InvalidInputError):
            m_index(spec, 0, 3)
        with pytest.raises(InvalidInputError):
            r_index(spec, 3, 3)


class TestBuildZeta:
    def test_worked_pair_exact_values(self):
        table = build_zeta(pair_spec(), 12, assume_strict=True)
        assert table.zeta[0] == PowerValue(Fraction(11), Fraction(1, 2))
        assert table.zeta[1] == PowerValue(Fraction(10), Fraction(1, 2))
        for n in range(3, 13):
            assert table.zeta[n - 1] == PowerValue(Fraction(n + 7),
                                                   Fraction(1, 2))
        assert table.zeta_floor == (3,) * 8 + (4,) * 4

    def test_against_independent_recomputation(self):
        spec = pair_spec()
        table = build_zeta(spec, 12, assume_strict=True)
        naive = naive_zeta_columns(spec, 12)
        for i in range(spec.m):
            for n in range(12):
                base, exponent = naive[i][n]
                got = table.zeta_i[i][n]
                assert got.base == base and got.exponent == exponent
        for n in range(12):
            floats = [float(b) ** float(e) for b, e in
                      (naive[i][n] for i in range(spec.m))]
            assert abs(float(table.zeta[n]) - min(floats)) < 1e-12

    def test_triple_against_independent_recomputation(self):
        spec = ProductSpec(
            m=3, t=(Fraction(1), Fraction(3, 2), Fraction(1, 2)),
            g=(lambda n: n, lambda n: 2 * n, lambda n: n + 3),
            phi=affine_growth(30, 2), D=NATS)
        table = build_zeta(spec, 15, assume_strict=True)
        naive = naive_zeta_columns(spec, 15)
        for i in range(spec.m):
            for n in range(15):
                base, exponent = naive[i][n]
                got = table.zeta_i[i][n]
                assert got.base == base and got.exponent == exponent

    def test_monotone_violations_recorded_not_raised(self):
        table = build_zeta(pair_spec(), 12, assume_strict=True)
        assert (1, 2) in table.monotone_violations
        assert (2, 3) in table.monotone_violations
        assert (0, 2) in table.monotone_violations
        ident = ProductSpec(m=1, t=(Fraction(1),), g=(lambda n: n,),
                            phi=PHI9, D=NATS)
        assert build_zeta(ident, 10,
                          assume_strict=True).monotone_violations == ()

    def test_single_coordinate_collapse(self):
        ident = ProductSpec(m=1, t=(Fraction(1),), g=(lambda n: n,),
                            phi=PHI9, D=NATS)
        table = build_zeta(ident, 10, assume_strict=True)
        for n in range(1, 11):
            assert table.zeta[n - 1] == PowerValue(Fraction(n + 9),
                                                   Fraction(1))
        heavy = ProductSpec(m=1, t=(Fraction(2),), g=(lambda n: n,),
                            phi=PHI9, D=NATS)
        tab2 = build_zeta(heavy, 6, assume_strict=True)
        for n in range(1, 7):
            assert tab2.zeta[n - 1] == PowerValue(Fraction(n + 9),
                                                  Fraction(1, 2))

    def test_strictified_drops_borderline_digit(self):
        ident = ProductSpec(m=1, t=(Fraction(1),), g=(lambda n: n,),
                            phi=PHI9, D=NATS)
        strict = build_zeta(ident, 10)
        passthrough = build_zeta(ident, 10, assume_strict=True)
        assert strict.zeta_floor == tuple(v - 1 for v in
                                          passthrough.zeta_floor)

    def test_report_shape(self):
        table = build_zeta(pair_spec(), 12, assume_strict=True)
        rep = zeta_report(table)
        assert rep["zeta_monotone"] is False
        assert rep["rows"][0]["zeta_floor"] == 3
        assert rep["rows"][8]["zeta_floor"] == 4
        assert rep["g"] == ["n+1", "n+2"]
        assert rep["r_index"][1] == {1: 2, 2: 3}
        two = zeta_report(build_zeta(pair_spec(), 12, assume_strict=True))
        assert json.dumps(rep, sort_keys=True) == json.dumps(two,
                                                             sort_keys=True)


class TestMembership:
    def test_required_length(self):
        spec = pair_spec()
        assert required_length(spec, 12) == 14
        assert determined_indices(spec, 12, 12) == list(range(1, 11))
        assert determined_indices(spec, 12, 14) == list(range(1, 13))

    def test_witness_and_membership(self):
        spec = pair_spec()
        assert first_product_violation(spec, [1] * 14, 12) is None
        assert first_product_violation(spec, [9, 9, 9] + [1] * 11, 12) == 1
        assert membership_P(spec, [1] * 14, 12)
        assert not membership_P(spec, [9, 9, 9] + [1] * 11, 12)

    def test_short_stream_rejected(self):
        with pytest.raises(InvalidInputError, match="cannot decide"):
            first_product_violation(pair_spec(), [1] * 5, 12)

    def test_digits_outside_set(self):
        odd = arithmetic_digits(3, 2)
        spec = ProductSpec(m=1, t=(Fraction(1),), g=(lambda n: n,),
                           phi=constant_growth(9), D=odd)
        assert membership_P(spec, [3, 5, 3], 3)
        assert not membership_P(spec, [3, 4, 3], 3)

    def test_fractional_weights_exact(self):
        spec = ProductSpec(m=2, t=(Fraction(1, 2), Fraction(3, 2)),
                           g=(lambda n: n, lambda n: n + 1),
                           phi=affine_growth(5, 1), D=NATS)
        # a_n**(1/2) * a_{n+1}**(3/2) <= n + 5, squared: a_n * a_{n+1}**3
        assert first_product_violation(spec, [4, 2, 1], 2) is None
        assert first_product_violation(spec, [1, 4, 1], 2) == 1


class TestZetaImpliesProducts:
    def test_worked_pair_exhaustive(self):
        rep = subset_chain_check(pair_spec(), 12, 20, assume_strict=True)
        assert rep["mode"] == "exhaustive"
        assert rep["stream_space"] == str(3 ** 8 * 4 ** 4)
        assert rep["checked"] == 3 ** 8 * 4 ** 4
        assert rep["passed"] and rep["violations"] == []
        assert rep["bounds"] == [-1] + [3] * 7 + [4] * 4
        assert rep["determined_constraints"] == list(range(1, 11))
        assert rep["kernel"] in ("njit", "numpy")

    def test_worked_pair_strictified(self):
        rep = subset_chain_check(pair_spec(), 10, 20)
        assert rep["mode"] == "exhaustive"
        assert rep["passed"] and rep["violations"] == []

    def test_triple_sampled(self):
        spec = ProductSpec(
            m=3, t=(Fraction(1), Fraction(1), Fraction(1)),
            g=(lambda n: n, lambda n: 2 * n, lambda n: 3 * n),
            phi=affine_growth(30, 2), D=NATS)
        rep = subset_chain_check(spec, 18, 30, samples=10 ** 4,
                                 exhaustive_cap=10 ** 5, seed=7)
        assert rep["mode"] == "sampled"
        assert rep["checked"] == 10 ** 4
        assert rep["passed"] and rep["violations"] == []
        again = subset_chain_check(spec, 18, 30, samples=10 ** 4,
                                   exhaustive_cap=10 ** 5, seed=7)
        assert json.dumps(rep, sort_keys=True) == json.dumps(again,
                                                             sort_keys=True)

    def test_triple_exhaustive_small(self):
        spec = ProductSpec(
            m=3, t=(Fraction(1), Fraction(1), Fraction(1)),
            g=(lambda n: n, lambda n: 2 * n, lambda n: 3 * n),
            phi=affine_growth(30, 2), D=NATS)
        rep = subset_chain_check(spec, 6, 30)
        assert rep["mode"] == "exhaustive" and rep["passed"]

    def test_sparse_digit_set(self):
        spec = ProductSpec(m=1, t=(Fraction(1),), g=(lambda n: n,),
                           phi=affine_growth(20, 3), D=square_digits())
        rep = subset_chain_check(spec, 8, 30)
        assert rep["mode"] == "exhaustive" and rep["passed"]
        # phi is integer valued, so the strictified floor sits one below it
        assert rep["zeta_floor"] == [20 + 3 * n - 1 for n in range(1, 9)]

    def test_doctored_table_yields_product_witness(self):
        good = pair_spec()
        table = build_zeta(good, 12, assume_strict=True)
        tight = ProductSpec(m=2, t=good.t, g=good.g,
                            phi=constant_growth(3), D=NATS)
        rep = subset_chain_check(tight, 12, 20, table=table)
        assert not rep["passed"]
        kinds = [v.get("kind") for v in rep["violations"]]
        assert "product" in kinds
        witness = next(v for v in rep["violations"]
                       if v.get("kind") == "product")
        assert witness["stream"] == [1] * 11 + [4]
        assert not membership_P(tight, witness["stream"], 10)

    def test_empty_restriction_reported(self):
        odd = arithmetic_digits(3, 2)
        spec = ProductSpec(m=1, t=(Fraction(1),), g=(lambda n: n,),
                           phi=PHI9, D=odd)
        rep = subset_chain_check(spec, 5, 2, assume_strict=True)
        assert rep["passed"] and rep["mode"] == "empty"

    def test_stale_table_rejected(self):
        table = build_zeta(pair_spec(), 6, assume_strict=True)
        with pytest.raises(InvalidInputError, match="horizon"):
            subset_chain_check(pair_spec(), 12, 20, table=table)


class TestKernelLanes:
    def setup_method(self):
        self.alph = np.zeros((12, 4), np.int64)
        for i in range(12):
            self.alph[i, :3] = [1, 2, 3]
        self.alph[8:, 3] = 4
        self.widths = np.array([3] * 8 + [4] * 4, np.int64)
        self.bounds = np.array([-1] + [3] * 7 + [4] * 4, np.int64)
        self.ppos = np.array([[n, n + 1] for n in range(1, 11)], np.int64)
        self.pexp = np.array([1, 1], np.int64)
        self.prhs = np.array([n + 9 for n in range(1, 11)], np.int64)

    def test_clean_scan_agrees(self):
        a = chain_scan_njit(self.alph, self.widths, self.bounds, self.ppos,
                            self.pexp, self.prhs)
        b = chain_scan_numpy(self.alph, self.widths, self.bounds, self.ppos,
                             self.pexp, self.prhs)
        assert a == b == (0, -1)

    def test_product_violations_agree(self):
        rhs = self.prhs.copy()
        rhs[0] = 3
        a = chain_scan_njit(self.alph, self.widths, self.bounds, self.ppos,
                            self.pexp, rhs)
        b = chain_scan_numpy(self.alph, self.widths, self.bounds, self.ppos,
                             self.pexp, rhs)
        assert a == b and a[0] > 0 and a[1] >= 0

    def test_bound_violations_agree(self):
        bnd = self.bounds.copy()
        bnd[11] = 2
        a = chain_scan_njit(self.alph, self.widths, bnd, self.ppos,
                            self.pexp, self.prhs)
        b = chain_scan_numpy(self.alph, self.widths, bnd, self.ppos,
                             self.pexp, self.prhs)
        assert a == b and a[0] == 3 ** 8 * 4 ** 3 * 2 and a[1] == 2

    def test_no_product_rows(self):
        empty = np.zeros((0, 2), np.int64)
        rhs = np.zeros(0, np.int64)
        a = chain_scan_njit(self.alph, self.widths, self.bounds, empty,
                            self.pexp, rhs)
        b = chain_scan_numpy(self.alph, self.widths, self.bounds, empty,
                             self.pexp, rhs)
        assert a == b == (0, -1)
