"""Digit-bound presets: exact evaluation, threshold search, table parsing."""

import pytest

from iifs.errors import InfeasibleError, InvalidInputError
from iifs.growth import (
    affine_growth,
    constant_growth,
    growth_from_file,
    iterated_log_growth,
    log_growth,
    loglog_growth,
    parse_growth,
)


class TestPresets:
    def test_log_values(self):
        phi = log_growth()
        # floor(log2(n+2)): n=1 -> 1, n=2 -> 2, n=6 -> 3, n=14 -> 4.
        assert [phi(n) for n in (1, 2, 6, 14, 30)] == [1, 2, 3, 4, 5]
        assert phi(2 ** 100) == 100

    def test_loglog_values(self):
        phi = loglog_growth()
        assert phi(1) == 1
        # Inner log of 2^1000 + 2 is 1000, outer is floor(log2(1002)) = 9.
        assert phi(2 ** 1000) == 9

    def test_iterated_log_diverges_slowly(self):
        phi = iterated_log_growth(3)
        assert phi(1) == 1
        # L_1 = 2^20, L_2 = 20, L_3 = floor(log2(22)) = 4.
        assert phi(2 ** (2 ** 20)) == 4

    def test_affine(self):
        phi = affine_growth(3, 2)
        assert [phi(n) for n in (1, 2, 3)] == [5, 7, 9]

    def test_rejects_bad_parameters(self):
        with pytest.raises(InvalidInputError):
            iterated_log_growth(0)
        with pytest.raises(InvalidInputError):
            affine_growth(1, 0)
        with pytest.raises(InvalidInputError):
            constant_growth(0)
        with pytest.raises(InvalidInputError):
            log_growth()(0)


class TestThresholdSearch:
    def test_log_threshold(self):
        phi = log_growth()
        # Least n with floor(log2(n+2)) >= 10 is n = 1022.
        n = phi.first_n_reaching(10)
        assert n == 1022
        assert phi(n) == 10 and phi(n - 1) == 9

    def test_threshold_at_origin(self):
        assert log_growth().first_n_reaching(1) == 1

    def test_huge_threshold_uses_bigints(self):
        phi = loglog_growth()
        n = phi.first_n_reaching(20)
        assert phi(n) == 20 and phi(n - 1) == 19
        assert n.bit_length() == 2 ** 20 - 2  # astronomically deep, exact

    def test_tower_inverse_depth_three(self):
        phi = iterated_log_growth(3)
        n = phi.first_n_reaching(4)
        assert n == 2 ** 16382 - 2
        assert phi(n) == 4 and phi(n - 1) == 3

    def test_unrepresentable_threshold_rejected(self):
        with pytest.raises(InfeasibleError):
            loglog_growth().first_n_reaching(60)

    def test_affine_threshold(self):
        phi = affine_growth(3, 7)
        n = phi.first_n_reaching(100)
        assert phi(n) >= 100 > phi(n - 1)

    def test_constant_growth_never_reaches(self):
        phi = constant_growth(5)
        assert phi.first_n_reaching(5) == 1
        with pytest.raises(InfeasibleError):
            phi.first_n_reaching(6)


class TestFileTables:
    def write(self, tmp_path, text):
        path = tmp_path / "phi.tbl"
        path.write_text(text)
        return str(path)

    def test_step_table(self, tmp_path):
        phi = growth_from_file(self.write(tmp_path, "1 2\n5 3\n20 7\n"))
        assert [phi(n) for n in (1, 4, 5, 19, 20, 100)] == [2, 2, 3, 3, 7, 7]
        assert not phi.declared_divergent

    def test_table_validation(self, tmp_path):
        with pytest.raises(InvalidInputError):
            growth_from_file(self.write(tmp_path, "2 5\n"))  # must start at 1
        with pytest.raises(InvalidInputError):
            growth_from_file(self.write(tmp_path, "1 5\n3 4\n"))  # value drops
        with pytest.raises(InvalidInputError):
            growth_from_file(self.write(tmp_path, ""))


class TestSelectors:
    def test_named(self):
        assert parse_growth("log").label == "log"
        assert parse_growth("loglog").label == "loglog"
        assert parse_growth("iterated-log:3")(2 ** 70) >= 2
        assert parse_growth("affine:1,2")(10) == 21
        assert parse_growth("constant:9")(123) == 9

    def test_unknown(self):
        with pytest.raises(InvalidInputError):
            parse_growth("linear")
