"""Command line interface: ``cvxorder {check,estimate-v,sweep,arbitrage,ot}``.

Exit codes
----------
``check``: 0 Ordered, 2 NotOrdered, 3 Inconclusive. Every command: 64 for
unusable input (bad flags, unreadable or invalid measure files, parameters
out of range), 70 when an LP solve fails. With ``--json`` results go to
stdout as one JSON object and errors to stderr as one JSON line.

The default seed is read from ``CVXORDER_SEED`` (0 if unset).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import oracles
from .arbitrage import detect_arbitrage, verify_spread
from .convex_order import Method, Verdict, estimate_V
from .exceptions import InvalidInput, SolverError
from .measures import load_measure, make_example
from .ot_core import max_covariance, wasserstein1, wasserstein2_sq
from .plotting import svg_line_plot

EXIT_CODES = {Verdict.ORDERED: 0, Verdict.NOT_ORDERED: 2, Verdict.INCONCLUSIVE: 3}
EXIT_USAGE = 64
EXIT_SOFTWARE = 70

FAMILY_ALIASES = {"gauss": "gauss_sampled", "gauss_sampled": "gauss_sampled",
                  "two_point": "two_point", "four_point": "four_point"}
PARAM_RANGES = {"gauss_sampled": (0.0, 2.0), "two_point": (-1.0, 1.0), "four_point": (-1.0, 1.0)}

SWEEP_COLUMNS = ["param", "v_hat_indirect_hist", "v_hat_indirect_samples", "v_hat_direct", "oracle_ordered"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _default_seed() -> int:
    raw = os.environ.get("CVXORDER_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"CVXORDER_SEED must be an integer, got {raw!r}")


def _add_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mu", type=Path, help="measure file (.json or .csv) for the first marginal")
    p.add_argument("--nu", type=Path, help="measure file for the second marginal")
    p.add_argument("--example", choices=sorted(FAMILY_ALIASES), help="built-in example family")
    p.add_argument("--param", type=float, help="family parameter (sigma or s)")
    p.add_argument("--n", type=int, default=100, help="sample count for gauss (default 100)")
    p.add_argument("--d", type=int, default=1, help="dimension for gauss (default 1)")
    p.add_argument("--json", action="store_true", help="structured JSON output")


def _add_search(p: argparse.ArgumentParser, method_default: str = "indirect-hist") -> None:
    p.add_argument("--method", choices=[m.value for m in Method], default=method_default)
    p.add_argument("--g", type=int, default=21, help="grid points (indirect methods)")
    p.add_argument("--N", type=int, default=100, help="objective evaluations")
    p.add_argument("--m", type=int, default=20, help="candidate atoms (direct method)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epsilon", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cvxorder", description="Convex order tests via optimal transport.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="decide mu <=_c nu and print the verdict")
    _add_inputs(p)
    _add_search(p)

    p = sub.add_parser("estimate-v", help="print the estimate of V(mu, nu)")
    _add_inputs(p)
    _add_search(p)

    p = sub.add_parser("sweep", help="estimate V along a parameter range of an example family")
    p.add_argument("--example", choices=sorted(FAMILY_ALIASES), required=True)
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--methods", default="all", help="'all' or comma-separated method names")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--output", type=Path, help="CSV path (default stdout)")
    p.add_argument("--svg", type=Path, help="also write a line plot of v_hat against the parameter")
    p.add_argument("--json", action="store_true")
    _add_search(p)

    p = sub.add_parser("arbitrage", help="build a calendar spread when order fails")
    _add_inputs(p)
    _add_search(p)
    p.add_argument("--output", type=Path, help="write the spread JSON here")

    p = sub.add_parser("ot", help="print C, W1 and W2^2 between two measures")
    _add_inputs(p)
    return parser


def _family(name: str) -> str:
    return FAMILY_ALIASES[name]


def _check_param(family: str, value: float) -> None:
    lo, hi = PARAM_RANGES[family]
    if not lo <= value <= hi:
        raise UsageError(f"{family} parameter must lie in [{lo}, {hi}], got {value}")


def _load_pair(args, seed: int):
    if args.example:
        if args.mu or args.nu:
            raise UsageError("give either --example or --mu/--nu, not both")
        if args.param is None:
            raise UsageError("--example needs --param")
        fam = _family(args.example)
        _check_param(fam, args.param)
        return make_example(fam, args.param, n=args.n, seed=seed, d=args.d)
    if not (args.mu and args.nu):
        raise UsageError("need --mu and --nu, or --example with --param")
    try:
        return load_measure(args.mu), load_measure(args.nu)
    except OSError as exc:
        raise UsageError(str(exc))


def _search_kw(args, seed: int) -> dict:
    return {"g": args.g, "N": args.N, "m": args.m, "seed": seed, "epsilon": args.epsilon}


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def _cmd_check(args, out) -> int:
    seed = _default_seed() if args.seed is None else args.seed
    mu, nu = _load_pair(args, seed)
    rep = estimate_V(mu, nu, args.method, **_search_kw(args, seed))
    if args.json:
        out.write(json.dumps(rep.to_dict()) + "\n")
    else:
        oracle = "n/a" if rep.oracle is None else ("ordered" if rep.oracle.ordered else "not ordered")
        out.write(f"verdict: {rep.verdict.value}\nv_hat: {rep.v_hat!r}\noracle: {oracle}\n")
    return EXIT_CODES[rep.verdict]


def _cmd_estimate(args, out) -> int:
    seed = _default_seed() if args.seed is None else args.seed
    mu, nu = _load_pair(args, seed)
    rep = estimate_V(mu, nu, args.method, oracle=False, **_search_kw(args, seed))
    out.write((json.dumps(rep.to_dict()) if args.json else repr(rep.v_hat)) + "\n")
    return 0


def sweep_rows(family: str, params, methods, n: int, d: int, seed: int, **kw) -> list[dict]:
    rows = []
    for p in params:
        mu, nu = make_example(family, p, n=n, seed=seed, d=d)
        row = {"param": float(p)}
        for meth in methods:
            rep = estimate_V(mu, nu, meth, oracle=False, seed=seed, **kw)
            row["v_hat_" + meth.value.replace("-", "_")] = rep.v_hat
        ov = oracles.decide(mu, nu)
        row["oracle_ordered"] = None if ov is None else int(ov.ordered)
        rows.append(row)
    return rows


def _cmd_sweep(args, out) -> int:
    seed = _default_seed() if args.seed is None else args.seed
    fam = _family(args.example)
    if args.steps < 1:
        raise UsageError("--steps must be >= 1")
    _check_param(fam, args.start)
    _check_param(fam, args.stop)
    if args.methods == "all":
        methods = list(Method)
    else:
        try:
            methods = [Method(s.strip()) for s in args.methods.split(",")]
        except ValueError as exc:
            raise UsageError(str(exc))
    params = np.linspace(args.start, args.stop, args.steps)
    kw = {"g": args.g, "N": args.N, "m": args.m, "epsilon": args.epsilon}
    rows = sweep_rows(fam, params, methods, args.n, args.d, seed, **kw)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for r in rows:
        writer.writerow([_fmt(r["param"])] + [_fmt(r.get(c)) for c in SWEEP_COLUMNS[1:-1]]
                        + ["" if r["oracle_ordered"] is None else r["oracle_ordered"]])
    if args.output:
        args.output.write_text(buf.getvalue())
    else:
        out.write(buf.getvalue())
    if args.svg:
        series = {c[6:]: [r[c] for r in rows] for c in SWEEP_COLUMNS[1:-1] if c in rows[0]}
        label = "sigma" if fam == "gauss_sampled" else "s"
        args.svg.write_text(svg_line_plot(params, series, f"V estimates, {fam}", label, "V"))
    if args.json and args.output:
        out.write(json.dumps({"rows": len(rows), "output": str(args.output)}) + "\n")
    return 0


def _cmd_arbitrage(args, out) -> int:
    seed = _default_seed() if args.seed is None else args.seed
    mu, nu = _load_pair(args, seed)
    rep = detect_arbitrage(mu, nu, args.method, **_search_kw(args, seed))
    if rep.spread is not None and args.output:
        args.output.write_text(rep.spread.to_json() + "\n")
    if args.json:
        info = rep.to_dict()
        if rep.spread is not None:
            info["min_payoff"] = verify_spread(rep.spread, mu, nu, seed=seed).min_payoff
        out.write(json.dumps(info) + "\n")
    else:
        out.write(f"found: {str(rep.found).lower()}\ngap: {rep.gap!r}\n")
        if rep.spread is not None and not args.output:
            out.write(rep.spread.to_json() + "\n")
    return 0


def _cmd_ot(args, out) -> int:
    mu, nu = _load_pair(args, _default_seed())
    vals = {"C": max_covariance(mu, nu), "W1": wasserstein1(mu, nu), "W2_sq": wasserstein2_sq(mu, nu)}
    if args.json:
        out.write(json.dumps(vals) + "\n")
    else:
        out.write("".join(f"{k}: {v!r}\n" for k, v in vals.items()))
    return 0


COMMANDS = {
    "check": _cmd_check,
    "estimate-v": _cmd_estimate,
    "sweep": _cmd_sweep,
    "arbitrage": _cmd_arbitrage,
    "ot": _cmd_ot,
}


def main(argv: list[str] | None = None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    as_json = "--json" in (sys.argv[1:] if argv is None else argv)

    def fail(code: int, kind: str, msg: str) -> int:
        if as_json:
            err.write(json.dumps({"error": kind, "message": msg, "exit_code": code}) + "\n")
        else:
            err.write(f"cvxorder: {kind}: {msg}\n")
        return code

    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except (UsageError, InvalidInput) as exc:
        return fail(EXIT_USAGE, "usage" if isinstance(exc, UsageError) else "invalid_input", str(exc))
    except SolverError as exc:
        return fail(EXIT_SOFTWARE, "solver", str(exc))


if __name__ == "__main__":
    sys.exit(main())
