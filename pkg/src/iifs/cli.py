"""Command line driver: estimators, construction runs, dimension tables,
zeta reduction, and batch experiments from a declarative TOML config.

Subcommands: s0, tau, construct, verify, dimension, zeta, check-chain, run.
Exit codes: 0 all requested checks pass, 1 a verification failed (or ran out
of precision), 2 invalid input, 3 infeasibility.  Reports are deterministic:
keys sorted, floats at 12 significant digits, exact rationals as "p/q"
strings, no timestamps.  Environment overrides: IIFS_OUT (output directory
for `run`), IIFS_THREADS (worker count).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
from fractions import Fraction

import numpy as np

from .cantor import run_construction
from .dimension import (bound_constraint, cover_sum, critical_exponent,
                        digits_constraint, log_length_table,
                        slow_growth_sweep, table_sum)
from .errors import (HorizonError, IifsError, InfeasibleError,
                     InvalidInputError, PrecisionError)
from .exponent import parse_digit_set, s0_estimate, tau_estimate
from .growth import GrowthFn, constant_growth, parse_growth
from .product_sets import (ProductSpec, build_zeta, subset_chain_check,
                           zeta_report)
from .systems import parse_system

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - version dependent
    import tomli as tomllib

_FLOAT_FMT = "%.12g"


# ---------------------------------------------------------------------------
# Canonical serialization.


def _canon(obj):
    """JSON-ready deep copy: rationals as "p/q", floats at fixed precision,
    numpy scalars unwrapped, keys stringified."""
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, float):
        return float(_FLOAT_FMT % obj)
    if isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(_FLOAT_FMT % float(obj))
    if isinstance(obj, dict):
        return {str(k): _canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [_canon(v) for v in items]
    return str(obj)


def render_json(payload) -> str:
    return json.dumps(_canon(payload), sort_keys=True, indent=2) + "\n"


def render_csv(header: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(row.get(col)) for col in header])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(v).lower()
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, float):
        return _FLOAT_FMT % v
    return v


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# Selector grammars not covered by the library parsers.


_INDEX_RE = re.compile(r"^(?:(\d+)\s*\*?\s*)?n(?:\s*\+\s*(\d+))?$")


def parse_index_map(selector: str):
    """Index maps for product specs: "n", "n+3", "2n", "2n+1", a bare
    integer constant, or file=<path> with one value per line (1-indexed)."""
    sel = selector.strip()
    if sel.startswith("file="):
        path = sel.split("=", 1)[1]
        values: list[int] = []
        with open(path, "r", encoding="utf-8") as fh:
            for raw in fh:
                line = raw.split("#", 1)[0].strip()
                if line:
                    values.append(int(line))
        if not values:
            raise InvalidInputError(f"index-map file {path} is empty")
        if any(v < 1 for v in values):
            raise InvalidInputError("index maps must produce values >= 1")
        table = tuple(values)

        def from_table(n: int, _t=table) -> int:
            if n > len(_t):
                raise HorizonError(
                    f"index-map table has {len(_t)} entries, got n={n}")
            return _t[n - 1]

        return from_table, sel
    if sel.isdigit():
        c = int(sel)
        if c < 1:
            raise InvalidInputError("constant index maps must be >= 1")
        return (lambda n, _c=c: _c), sel
    m = _INDEX_RE.match(sel)
    if m is None:
        raise InvalidInputError(
            f"unknown index-map selector {selector!r}; use n, n+b, a*n, "
            "a*n+b, a constant, or file=<path>")
    a = int(m.group(1)) if m.group(1) else 1
    b = int(m.group(2)) if m.group(2) else 0
    if a < 1:
        raise InvalidInputError("index-map slope must be >= 1")
    return (lambda n, _a=a, _b=b: _a * n + _b), sel


def _parse_fraction_list(text: str) -> tuple[Fraction, ...]:
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    if not parts:
        raise InvalidInputError("expected a comma separated list of numbers")
    return tuple(Fraction(p) for p in parts)


def _product_spec_from(m, t_text, g_selectors, phi_selector, digits):
    t = (_parse_fraction_list(t_text) if isinstance(t_text, str)
         else tuple(Fraction(x) for x in t_text))
    if isinstance(g_selectors, str):
        g_selectors = [g_selectors]
    parsed = [parse_index_map(g) for g in g_selectors]
    m = int(m)
    if len(t) != m or len(parsed) != m:
        raise InvalidInputError(
            f"need m={m} weights and m index maps, got {len(t)} and "
            f"{len(parsed)}")
    phi = (phi_selector if isinstance(phi_selector, GrowthFn)
           else parse_growth(phi_selector))
    return ProductSpec(m=m, t=t, g=tuple(fn for fn, _ in parsed), phi=phi,
                       D=parse_digit_set(digits),
                       g_labels=tuple(lab for _, lab in parsed))


def _estimate_payload(est) -> dict:
    return {
        "value": est.value,
        "exact_value": est.exact_value,
        "K": est.horizon,
        "window": list(est.window),
        "digit_set": est.digit_set,
        "xi": est.xi_label,
        "diagnostics": list(est.diagnostics),
    }


# ---------------------------------------------------------------------------
# Subcommands.  Each handler returns (payload, csv_header_rows, exit_code);
# csv_header_rows is None when tabular output makes no sense.


def cmd_s0(args):
    system = parse_system(args.system)
    est = s0_estimate(parse_digit_set(args.digits), system.xi, args.K)
    return _estimate_payload(est), None, 0


def cmd_tau(args):
    est = tau_estimate(parse_digit_set(args.digits), args.K)
    return _estimate_payload(est), None, 0


def _construct_report(args):
    system = parse_system(args.system)
    D = parse_digit_set(args.digits)
    phi = parse_growth(args.phi)
    report, state = run_construction(
        system, D, phi,
        epsilon=Fraction(args.epsilon),
        s=Fraction(args.s) if args.s is not None else None,
        depth=args.depth, k_max=args.k_max, j_max=args.j_max,
        cap=args.cap, seed=args.seed, prune_extremes=not args.no_prune,
        K=args.K, return_state=True)
    if args.intervals_csv and state is not None:
        rows = []
        for t in range(1, len(state.layers) + 1):
            for digits, iv in state.layer_intervals(t, limit=args.cap):
                rows.append({"layer": t,
                             "digits": " ".join(str(d) for d in digits),
                             "lo": float(iv.lo), "hi": float(iv.hi)})
        _write_text(args.intervals_csv,
                    render_csv(["layer", "digits", "lo", "hi"], rows))
    ok = report["status"] == "skipped" or report.get("passed", False)
    return report, 0 if ok else 1


def cmd_construct(args):
    report, code = _construct_report(args)
    return report, None, code


def cmd_verify(args):
    report, code = _construct_report(args)
    if report["status"] == "skipped":
        return report, None, code
    payload = {
        "status": report["status"],
        "system": report["system"],
        "mode": report["mode"],
        "equations": report["equations"]["all"],
        "separation": report["separation"]["passed"],
        "mass": report["mass"]["passed"],
        "delta": report["delta"]["passed"],
        "passed": report["passed"],
    }
    return payload, None, code


def cmd_dimension(args):
    system = parse_system(args.system)
    D = parse_digit_set(args.digits)
    depths = args.depth or [12]
    if args.phi:
        phis = [parse_growth(p) for p in args.phi]
        rows = []
        for depth in depths:
            rows.extend(slow_growth_sweep(system, D, phis, depth))
        payload = {"mode": "sweep", "system": system.name,
                   "digit_set": D.description, "rows": rows}
        table = [{"phi": r["phi"], "depth": r["depth"],
                  "exponent": r["exponent"]} for r in rows]
        return payload, (["phi", "depth", "exponent"], table), 0
    constraints = [digits_constraint(D),
                   bound_constraint(constant_growth(args.cap))]
    if args.s:
        svals = [Fraction(x) for x in args.s]
        rows = []
        for depth in depths:
            for s in svals:
                if args.exact:
                    val = cover_sum(system, constraints, depth, s,
                                    exact=True, seed=args.seed)
                else:
                    val = cover_sum(system, constraints, depth, float(s),
                                    seed=args.seed)
                rows.append({"depth": depth, "s": s, "sum": val})
        payload = {"mode": "cover-sum", "system": system.name,
                   "digit_set": D.description,
                   "rows": [{"depth": r["depth"], "s": str(r["s"]),
                             "sum": _sum_field(r["sum"])} for r in rows]}
        if args.exact:
            return payload, None, 0
        table = [{"depth": r["depth"], "s": float(r["s"]),
                  "sum": float(r["sum"])} for r in rows]
        return payload, (["depth", "s", "sum"], table), 0
    rows = []
    for depth in depths:
        s = critical_exponent(system, constraints, depth, seed=args.seed)
        table = log_length_table(system, constraints, depth, seed=args.seed)
        rows.append({"depth": depth, "s": s, "sum": table_sum(table, s)})
    payload = {"mode": "critical-exponent", "system": system.name,
               "digit_set": D.description, "rows": rows}
    return payload, (["depth", "s", "sum"], rows), 0


def _sum_field(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float):
        return v
    return {"lo": str(v.lo), "hi": str(v.hi)}  # outward enclosure


def cmd_zeta(args):
    spec = _product_spec_from(args.m, args.t, args.g, args.phi, args.digits)
    table = build_zeta(spec, args.horizon, assume_strict=args.assume_strict)
    payload = zeta_report(table)
    header = ["n"] + [f"zeta_{i + 1}" for i in range(spec.m)] + ["zeta"]
    return payload, (header, payload["rows"]), 0


def cmd_check_chain(args):
    spec = _product_spec_from(args.m, args.t, args.g, args.phi, args.digits)
    rep = subset_chain_check(spec, args.horizon, args.digit_cap,
                             assume_strict=args.assume_strict,
                             seed=args.seed, samples=args.samples,
                             exhaustive_cap=args.exhaustive_cap)
    return rep, None, 0 if rep["passed"] else 1


# ---------------------------------------------------------------------------
# Batch experiments.


def load_config(path: str) -> dict:
    with open(path, "rb") as fh:
        cfg = tomllib.load(fh)
    _validate_config_files(cfg, os.path.dirname(os.path.abspath(path)))
    return cfg


def _validate_config_files(node, base: str) -> None:
    """Every file=<path> selector in the config must exist at load time."""
    if isinstance(node, dict):
        for v in node.values():
            _validate_config_files(v, base)
    elif isinstance(node, list):
        for v in node:
            _validate_config_files(v, base)
    elif isinstance(node, str) and "file=" in node:
        path = node.split("file=", 1)[1]
        if not os.path.isabs(path):
            path = os.path.join(base, path)
        if not os.path.exists(path):
            raise InvalidInputError(f"config references missing file {path}")


def _stage(report: dict, name: str, fn) -> bool:
    """Run one pipeline stage; errors become structured report entries."""
    try:
        report[name] = fn()
        return True
    except IifsError as exc:
        report[name] = {"error": {"type": type(exc).__name__,
                                  "message": str(exc)}}
        report.setdefault("errors", []).append(name)
        return False


def run_pipeline(cfg: dict, *, seed: int = 0, out_dir: str | None = None,
                 write_files: bool = True) -> dict:
    """Exponent -> construction -> dimension sweep -> zeta checks, per the
    sections present in the config; returns the combined report."""
    exp = cfg.get("experiment", {})
    seed = int(exp.get("seed", seed))
    report: dict = {"name": exp.get("name", "experiment"), "seed": seed}
    checks: list[bool] = []

    if "exponent" in cfg:
        sec = cfg["exponent"]
        system = parse_system(sec.get("system", "gauss"))
        D = parse_digit_set(sec.get("digits", "all"))
        K = int(sec.get("K", 10 ** 5))

        def stage_exponent():
            s0 = s0_estimate(D, system.xi, K)
            tau = tau_estimate(D, K)
            out = {"s0": _estimate_payload(s0), "tau": _estimate_payload(tau)}
            if "expect_s0" in sec:
                expected = Fraction(str(sec["expect_s0"]))
                out["expect_s0"] = str(expected)
                out["s0_matches"] = (s0.exact_value == expected
                                     if s0.exact_value is not None
                                     else abs(s0.value - float(expected))
                                     < 1e-9)
                checks.append(bool(out["s0_matches"]))
            return out

        _stage(report, "exponent", stage_exponent)

    if "construction" in cfg:
        sec = cfg["construction"]

        def stage_construction():
            out = run_construction(
                parse_system(sec.get("system",
                                     cfg.get("exponent", {}).get("system",
                                                                 "gauss"))),
                parse_digit_set(sec.get("digits",
                                        cfg.get("exponent", {}).get("digits",
                                                                    "all"))),
                parse_growth(sec.get("phi", "log")),
                epsilon=Fraction(str(sec.get("epsilon", "1/10"))),
                s=Fraction(str(sec["s"])) if "s" in sec else None,
                depth=int(sec.get("depth", 2)),
                k_max=int(sec.get("k_max", 6)),
                j_max=int(sec.get("j_max", 3)),
                cap=int(sec.get("cap", 10 ** 6)),
                seed=seed,
                prune_extremes=bool(sec.get("prune", True)),
                K=int(sec.get("K", 10 ** 4)))
            if out["status"] != "skipped":
                checks.append(bool(out["passed"]))
            return out

        _stage(report, "construction", stage_construction)

    if "dimension" in cfg:
        sec = cfg["dimension"]
        system = parse_system(sec.get("system",
                                      cfg.get("exponent", {}).get("system",
                                                                  "gauss")))
        D = parse_digit_set(sec.get("digits",
                                    cfg.get("exponent", {}).get("digits",
                                                                "all")))
        depth = int(sec.get("depth", 8))

        def stage_dimension():
            out: dict = {"depth": depth}
            if "phis" in sec:
                phis = [parse_growth(p) for p in sec["phis"]]
                out["sweep"] = slow_growth_sweep(system, D, phis, depth)
            if "s_grid" in sec:
                cons = [digits_constraint(D),
                        bound_constraint(constant_growth(
                            int(sec.get("cap", 64))))]
                out["cover_sums"] = [
                    {"depth": depth, "s": float(Fraction(str(sv))),
                     "sum": cover_sum(system, cons, depth,
                                      float(Fraction(str(sv))), seed=seed)}
                    for sv in sec["s_grid"]]
            return out

        _stage(report, "dimension", stage_dimension)

    if "zeta" in cfg:
        sec = cfg["zeta"]

        def stage_zeta():
            spec = _product_spec_from(
                sec["m"], sec["t"], sec["g"], sec["phi"],
                sec.get("digits", "all"))
            horizon = int(sec.get("horizon", 12))
            strict = bool(sec.get("assume_strict", False))
            table = build_zeta(spec, horizon, assume_strict=strict)
            chain = subset_chain_check(
                spec, horizon, int(sec.get("digit_cap", 20)),
                assume_strict=strict, seed=seed,
                samples=int(sec.get("samples", 10 ** 5)),
                exhaustive_cap=int(sec.get("exhaustive_cap", 10 ** 7)),
                table=table)
            checks.append(bool(chain["passed"]))
            return {"table": zeta_report(table), "chain": chain}

        _stage(report, "zeta", stage_zeta)

    report["checks"] = len(checks)
    report["passed"] = bool(checks) and all(checks) and \
        "errors" not in report
    if write_files and out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        _write_text(os.path.join(out_dir, "report.json"),
                    render_json(report))
        emit_plot_data(report, out_dir)
    return report


def emit_plot_data(report: dict, out_dir: str) -> list[str]:
    """CSV series for plotting: cover-sum vs s, critical exponent vs depth
    (one series per phi), and zeta vs n.  Missing sections still produce
    header-only files so downstream tooling sees a stable schema."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    dim = report.get("dimension", {}) or {}
    rows = [{"depth": r["depth"], "s": r["s"], "sum": float(r["sum"])}
            for r in dim.get("cover_sums", [])]
    path = os.path.join(out_dir, "cover_sum.csv")
    _write_text(path, render_csv(["depth", "s", "sum"], rows))
    written.append(path)

    rows = [{"phi": r["phi"], "depth": r["depth"], "exponent": r["exponent"]}
            for r in dim.get("sweep", [])]
    path = os.path.join(out_dir, "exponent_vs_depth.csv")
    _write_text(path, render_csv(["phi", "depth", "exponent"], rows))
    written.append(path)

    zeta = report.get("zeta", {}) or {}
    table = zeta.get("table", {})
    zrows = table.get("rows", [])
    m = int(table.get("m", 0))
    header = ["n"] + [f"zeta_{i + 1}" for i in range(m)] + ["zeta"]
    path = os.path.join(out_dir, "zeta.csv")
    _write_text(path, render_csv(header, zrows))
    written.append(path)
    return written


def cmd_run(args):
    cfg = load_config(args.config)
    out_dir = os.environ.get("IIFS_OUT") or args.out or "."
    report = run_pipeline(cfg, seed=args.seed, out_dir=out_dir)
    code = 0 if report["passed"] else 1
    if "errors" in report:
        first = report[report["errors"][0]]["error"]["type"]
        code = {"InvalidInputError": 2, "HorizonError": 2,
                "InfeasibleError": 3}.get(first, 1)
    return report, None, code


# ---------------------------------------------------------------------------
# Parser.


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int,
                   default=int(os.environ.get("IIFS_THREADS", "0")))
    p.add_argument("--out", default=None,
                   help="output file (default stdout); directory for run")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def _add_spec_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--t", required=True,
                   help="comma separated weights, e.g. 1,1 or 1,3/2")
    p.add_argument("--g", action="append", required=True,
                   help="index map per coordinate: n, n+2, 2n, file=<path>")
    p.add_argument("--phi", required=True)
    p.add_argument("--digits", default="all")
    p.add_argument("--horizon", type=int, default=12)
    p.add_argument("--assume-strict", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iifs",
        description="infinite iterated function systems on [0,1]: "
                    "exponents, constructions, dimension tables, zeta checks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("s0", help="convergence exponent estimate")
    p.add_argument("--system", default="gauss")
    p.add_argument("--digits", default="all")
    p.add_argument("--K", type=int, default=10 ** 5)
    _add_common(p)
    p.set_defaults(func=cmd_s0)

    p = sub.add_parser("tau", help="convergence exponent of sum n^-s")
    p.add_argument("--digits", default="all")
    p.add_argument("--K", type=int, default=10 ** 5)
    _add_common(p)
    p.set_defaults(func=cmd_tau)

    for name, fn in (("construct", cmd_construct), ("verify", cmd_verify)):
        p = sub.add_parser(name, help=f"{name} a layered Cantor family")
        p.add_argument("--system", default="gauss")
        p.add_argument("--digits", default="all")
        p.add_argument("--phi", default="log")
        p.add_argument("--s", default=None,
                       help="exact exponent (fraction); default from s0")
        p.add_argument("--epsilon", default="1/10")
        p.add_argument("--depth", type=int, default=2)
        p.add_argument("--k-max", type=int, default=6)
        p.add_argument("--j-max", type=int, default=3)
        p.add_argument("--cap", type=int, default=10 ** 6)
        p.add_argument("--K", type=int, default=10 ** 4)
        p.add_argument("--no-prune", action="store_true")
        p.add_argument("--intervals-csv", default=None,
                       help="also write layer quotient intervals as CSV")
        _add_common(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("dimension", help="cover sums and critical exponents")
    p.add_argument("--system", default="gauss")
    p.add_argument("--digits", default="all")
    p.add_argument("--depth", type=int, action="append")
    p.add_argument("--s", action="append",
                   help="evaluate cover sum at s (repeatable)")
    p.add_argument("--phi", action="append",
                   help="sweep growth bounds (repeatable)")
    p.add_argument("--exact", action="store_true",
                   help="exact rational cover sums (json only)")
    p.add_argument("--cap", type=int, default=64,
                   help="digit value cap when no phi bound is given")
    _add_common(p)
    p.set_defaults(func=cmd_dimension)

    p = sub.add_parser("zeta", help="single-digit bound table")
    _add_spec_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_zeta)

    p = sub.add_parser("check-chain", help="brute force the subset chain")
    _add_spec_flags(p)
    p.add_argument("--digit-cap", type=int, default=20)
    p.add_argument("--samples", type=int, default=10 ** 5)
    p.add_argument("--exhaustive-cap", type=int, default=10 ** 7)
    _add_common(p)
    p.set_defaults(func=cmd_check_chain)

    p = sub.add_parser("run", help="batch pipeline from a TOML config")
    p.add_argument("--config", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_run)

    return parser


def _apply_threads(threads: int) -> None:
    if threads and threads > 0:
        try:
            import numba

            numba.set_num_threads(threads)
        except (ImportError, ValueError):  # pragma: no cover - environment
            pass


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _apply_threads(args.threads)
    try:
        payload, table, code = args.func(args)
    except (InvalidInputError, HorizonError) as exc:
        _write_text(None, render_json(
            {"error": {"type": type(exc).__name__, "message": str(exc)}}))
        return 2
    except InfeasibleError as exc:
        _write_text(None, render_json(
            {"error": {"type": type(exc).__name__, "message": str(exc)}}))
        return 3
    except PrecisionError as exc:
        _write_text(None, render_json(
            {"error": {"type": type(exc).__name__, "message": str(exc)}}))
        return 1
    if args.command == "run":
        sys.stdout.write(render_json(payload))
        return code
    if args.format == "csv":
        if table is None:
            _write_text(None, render_json(
                {"error": {"type": "InvalidInputError",
                           "message": f"{args.command} has no CSV form"}}))
            return 2
        header, rows = table
        _write_text(args.out, render_csv(header, rows))
    else:
        _write_text(args.out, render_json(payload))
    return code


if __name__ == "__main__":
    sys.exit(main())
