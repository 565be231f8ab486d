"""Command line driver: selector grammars, canonical serialization, exit
codes, the batch pipeline on the bundled config, plot-data emission, and
byte-level determinism of reports."""

import json
import os
from fractions import Fraction

import numpy as np
import pytest

import iifs.cli as cli
from iifs.errors import HorizonError, InvalidInputError

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

BUNDLED = os.path.join(os.path.dirname(cli.__file__), "configs",
                       "gauss-squares.toml")


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr().out


class TestSelectors:
    def test_index_map_grammar(self):
        fn, label = cli.parse_index_map("n")
        assert fn(7) == 7 and label == "n"
        fn, _ = cli.parse_index_map("n+3")
        assert fn(2) == 5
        fn, _ = cli.parse_index_map("2n")
        assert fn(5) == 10
        fn, _ = cli.parse_index_map("3*n+2")
        assert fn(4) == 14
        fn, _ = cli.parse_index_map("7")
        assert fn(1) == fn(99) == 7
        with pytest.raises(InvalidInputError, match="selector"):
            cli.parse_index_map("n^2")

    def test_index_map_file(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("2\n4\n6\n")
        fn, _ = cli.parse_index_map(f"file={path}")
        assert [fn(n) for n in (1, 2, 3)] == [2, 4, 6]
        with pytest.raises(HorizonError, match="entries"):
            fn(4)

    def test_fraction_list(self):
        assert cli._parse_fraction_list("1,3/2") == (Fraction(1),
                                                     Fraction(3, 2))
        with pytest.raises(InvalidInputError):
            cli._parse_fraction_list(" , ")


class TestSerialization:
    def test_canonical_values(self):
        out = cli._canon({"f": Fraction(3, 7), "x": 0.1234567890123456789,
                          "i": np.int64(4), "v": np.float64(2.5),
                          "t": (1, 2), "b": True, "n": None})
        assert out["f"] == "3/7"
        assert out["x"] == 0.123456789012
        assert out["i"] == 4 and isinstance(out["i"], int)
        assert out["t"] == [1, 2]
        assert out["b"] is True and out["n"] is None

    def test_json_sorted_and_stable(self):
        a = cli.render_json({"b": 1.0, "a": Fraction(1, 2)})
        b = cli.render_json({"a": Fraction(1, 2), "b": 1.0})
        assert a == b
        assert a.index('"a"') < a.index('"b"')

    def test_csv_cells(self):
        text = cli.render_csv(["x", "y"], [{"x": Fraction(1, 3), "y": 0.5},
                                           {"x": True, "y": None}])
        assert text.splitlines() == ["x,y", "1/3,0.5", "true,"]


class TestSubcommands:
    def test_s0_squares_exact(self, capsys):
        code, out = run_cli(capsys, "s0", "--digits", "squares",
                            "--K", "100000")
        rep = json.loads(out)
        assert code == 0
        assert rep["value"] == 0.25 and rep["exact_value"] == "1/4"
        assert rep["K"] == 100000 and len(rep["diagnostics"]) == 3

    def test_tau_naturals(self, capsys):
        code, out = run_cli(capsys, "tau", "--digits", "all", "--K", "20000")
        rep = json.loads(out)
        assert code == 0 and rep["value"] == 1.0

    def test_zeta_csv(self, capsys):
        code, out = run_cli(capsys, "zeta", "--m", "2", "--t", "1,1",
                            "--g", "n+1", "--g", "n+2",
                            "--phi", "affine:9,1", "--horizon", "12",
                            "--assume-strict", "--format", "csv")
        lines = out.splitlines()
        assert code == 0
        assert lines[0] == "n,zeta_1,zeta_2,zeta"
        assert len(lines) == 13
        first = lines[1].split(",")
        assert abs(float(first[3]) - 11 ** 0.5) < 1e-10

    def test_check_chain_passes(self, capsys):
        code, out = run_cli(capsys, "check-chain", "--m", "2", "--t", "1,1",
                            "--g", "n+1", "--g", "n+2",
                            "--phi", "affine:9,1", "--horizon", "12",
                            "--digit-cap", "20", "--assume-strict")
        rep = json.loads(out)
        assert code == 0 and rep["passed"]
        assert rep["stream_space"] == str(3 ** 8 * 4 ** 4)

    def test_dimension_csv(self, capsys):
        code, out = run_cli(capsys, "dimension", "--system", "luroth",
                            "--depth", "6", "--s", "1", "--cap", "16",
                            "--format", "csv")
        lines = out.splitlines()
        assert code == 0 and lines[0] == "depth,s,sum"
        depth, s, total = lines[1].split(",")
        assert depth == "6" and s == "1"
        assert 0 < float(total) < 1

    def test_construct_skips_trivial_exponent(self, capsys):
        code, out = run_cli(capsys, "construct", "--system", "gls:dyadic",
                            "--phi", "log", "--K", "100000")
        rep = json.loads(out)
        assert code == 0 and rep["status"] == "skipped"
        assert "trivial bound" in rep["reason"]

    def test_finite_digits_rejected(self, capsys, tmp_path):
        path = tmp_path / "d.txt"
        path.write_text("4\n9\n16\n")
        code, out = run_cli(capsys, "construct", "--system", "gauss",
                            "--digits", f"file={path}", "--phi", "log")
        assert code == 2
        assert json.loads(out)["error"]["type"] == "InvalidInputError"

    def test_infeasible_phi_exit_code(self, capsys):
        code, out = run_cli(capsys, "zeta", "--m", "1", "--t", "1",
                            "--g", "n", "--phi", "constant:5")
        assert code == 3
        assert json.loads(out)["error"]["type"] == "InfeasibleError"

    def test_csv_unavailable(self, capsys):
        code, out = run_cli(capsys, "s0", "--format", "csv")
        assert code == 2

    def test_out_file(self, capsys, tmp_path):
        path = tmp_path / "s0.json"
        code, _ = run_cli(capsys, "s0", "--digits", "squares",
                          "--K", "10000", "--out", str(path))
        assert code == 0
        assert json.loads(path.read_text())["value"] == 0.25


class TestPipeline:
    def test_bundled_config_passes(self):
        cfg = cli.load_config(BUNDLED)
        report = cli.run_pipeline(cfg, write_files=False)
        assert report["passed"] and "errors" not in report
        assert report["exponent"]["s0"]["value"] == 0.25
        assert report["exponent"]["s0_matches"] is True
        assert report["exponent"]["tau"]["value"] == 0.5
        assert report["construction"]["status"] == "ok"
        assert report["construction"]["passed"]
        assert report["zeta"]["chain"]["passed"]
        assert report["checks"] == 3

    def test_pipeline_deterministic(self):
        cfg = cli.load_config(BUNDLED)
        a = cli.run_pipeline(cfg, write_files=False)
        b = cli.run_pipeline(cfg, write_files=False)
        assert cli.render_json(a) == cli.render_json(b)

    def test_config_round_trip(self):
        cfg = cli.load_config(BUNDLED)
        assert json.loads(json.dumps(cfg)) == cfg
        with open(BUNDLED, "rb") as fh:
            assert tomllib.load(fh) == cfg

    def test_missing_file_rejected(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text('[exponent]\ndigits = "file=missing.txt"\n')
        with pytest.raises(InvalidInputError, match="missing"):
            cli.load_config(str(path))

    def test_stage_error_is_structured(self):
        cfg = {"experiment": {"name": "broken"},
               "construction": {"phi": "constant:5", "digits": "all",
                                "system": "gauss", "K": 10000}}
        report = cli.run_pipeline(cfg, write_files=False)
        assert not report["passed"]
        assert report["errors"] == ["construction"]
        assert report["construction"]["error"]["type"] == "InfeasibleError"

    def test_run_writes_report_and_csvs(self, capsys, tmp_path):
        out = tmp_path / "out"
        code, _ = run_cli(capsys, "run", "--config", BUNDLED,
                          "--out", str(out))
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["passed"]
        for name in ("cover_sum.csv", "exponent_vs_depth.csv", "zeta.csv"):
            assert (out / name).exists()


class TestEmitPlotData:
    def test_empty_report_header_only(self, tmp_path):
        cli.emit_plot_data({}, str(tmp_path))
        assert (tmp_path / "cover_sum.csv").read_text() == "depth,s,sum\n"
        assert (tmp_path / "exponent_vs_depth.csv").read_text() == \
            "phi,depth,exponent\n"
        assert (tmp_path / "zeta.csv").read_text() == "n,zeta\n"

    def test_series_schema(self, tmp_path):
        report = {
            "dimension": {
                "sweep": [{"phi": "log", "depth": 6, "exponent": 0.25},
                          {"phi": "loglog", "depth": 6, "exponent": 0.21}],
                "cover_sums": [{"depth": 6, "s": 0.5, "sum": 2.0}],
            },
            "zeta": {"table": {"m": 2, "rows": [
                {"n": 1, "zeta_1": 3.32, "zeta_2": 3.32, "zeta": 3.32,
                 "zeta_floor": 3}]}},
        }
        cli.emit_plot_data(report, str(tmp_path))
        sweep = (tmp_path / "exponent_vs_depth.csv").read_text().splitlines()
        assert sweep[0] == "phi,depth,exponent"
        assert {line.split(",")[0] for line in sweep[1:]} == {"log",
                                                              "loglog"}
        zeta = (tmp_path / "zeta.csv").read_text().splitlines()
        assert zeta[0] == "n,zeta_1,zeta_2,zeta"
        assert zeta[1].startswith("1,3.32")
        cover = (tmp_path / "cover_sum.csv").read_text().splitlines()
        assert cover == ["depth,s,sum", "6,0.5,2"]
