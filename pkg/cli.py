"""
Command-line module for the q-series verification suite
Handles argument parsing, dispatch to the formal and numeric layers,
report emission and exit codes

Usage:
    python cli.py verify --family A --k 1 --order 40
    python cli.py verify --pair S1 --k 2 --n-max 8 --order 25
    python cli.py expand --target t14 --d -4 --v 1 --w 1 --terms 4
    python cli.py lvalues --d -4 --max-n 4
    python cli.py history
    python cli.py baseline --check
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from sqlalchemy.exc import SQLAlchemyError

import asym_engine
import csv_helper
import db_manager
import exact_arith
import q_formal
import reports
import series_eval
from hp_real import PrecisionContext, parse_decimal, render

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_STARVED = 3

FORMATS = ("json", "csv", "text")
EXPAND_TARGETS = {t.lower(): t for t in asym_engine.TARGETS}
OL_BASELINE = {"l": 2, "m": 1, "k": 2, "t": "1/8"}


def _rational(text):
    try:
        return parse_decimal(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _grid(text):
    """'a:b' -> 2^-a .. 2^-b"""
    try:
        first, last = (int(part) for part in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 'a:b', got {text!r}")
    return asym_engine.power_grid(first, last)


def build_parser():
    parser = argparse.ArgumentParser(prog="qseries", description="q-series identity and asymptotics checks")
    parser.add_argument("--verbose", "-v", action="count", default=0, help="more logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def outputs(p):
        p.add_argument("--format", choices=FORMATS, default="json")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--record", action="store_true", help="store the report in the run history")

    verify = sub.add_parser("verify", help="exact check of a multi-sum identity or a Bailey pair")
    verify.add_argument("--family", choices=q_formal.FAMILIES, type=str.upper)
    verify.add_argument("--pair", choices=("seed",) + q_formal.CHAINS)
    verify.add_argument("--k", type=int, default=1)
    verify.add_argument("--order", type=int, default=30, help="truncation order N (mod q^N)")
    verify.add_argument("--n-max", type=int, default=8)
    verify.add_argument("--variant", help="registered variant or 'all'")
    outputs(verify)

    expand = sub.add_parser("expand", help="asymptotic expansion and remainder slope")
    expand.add_argument("--target", required=True, choices=sorted(EXPAND_TARGETS), type=str.lower)
    expand.add_argument("--k", type=int)
    expand.add_argument("--d", type=int)
    expand.add_argument("--l", type=int)
    expand.add_argument("--m", type=int)
    expand.add_argument("--v", type=_rational)
    expand.add_argument("--w", type=_rational)
    expand.add_argument("--terms", type=int, help="highest power M kept (default depends on the target)")
    expand.add_argument("--grid", type=_grid, help="'a:b' for t = 2^-a .. 2^-b")
    expand.add_argument("--precision", type=int, default=asym_engine.SLOPE_DIGITS)
    expand.add_argument("--variant")
    expand.add_argument("--lhs-variant")
    expand.add_argument("--arbitrate", action="store_true", help="compare every registered variant")
    expand.add_argument("--workers", type=int)
    outputs(expand)

    lvalues = sub.add_parser("lvalues", help="exact L-values at non-positive integers")
    lvalues.add_argument("--d", type=int)
    lvalues.add_argument("--l", type=int)
    lvalues.add_argument("--m", type=int)
    lvalues.add_argument("--max-n", type=int, default=6)
    outputs(lvalues)

    history = sub.add_parser("history", help="print the run history as CSV")
    history.add_argument("--limit", type=int)

    baseline = sub.add_parser("baseline", help="record or check the partial theta regression value")
    action = baseline.add_mutually_exclusive_group(required=True)
    action.add_argument("--record", action="store_true")
    action.add_argument("--check", action="store_true")
    baseline.add_argument("--precision", type=int, default=50)
    return parser


def configure_logging(verbose=0):
    level = os.environ.get("QSERIES_LOG_LEVEL", "WARNING").upper()
    if verbose == 1:
        level = "INFO"
    elif verbose > 1:
        level = "DEBUG"
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s", force=True)


def emit(report, fmt, out=None):
    if fmt == "json":
        text = report.to_json()
    elif fmt == "csv":
        text = csv_helper.report_rows_to_csv(report)
    else:
        text = report.to_text()
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def record(report):
    """Store the report; a failing store never fails the run"""
    try:
        db_manager.setup_database()
        run_id = db_manager.save_report(report)
        if run_id is not None:
            logger.info("recorded run %s", run_id)
    except Exception as e:
        logger.error("could not record run: %s", e)


def cmd_verify(args):
    if (args.family is None) == (args.pair is None):
        raise ValueError("give exactly one of --family or --pair")
    if args.k < 0 or args.order < 1:
        raise ValueError("--k must be >= 0 and --order >= 1")

    if args.pair:
        if args.pair == "seed":
            pair = q_formal.seed_pair()
        elif args.pair == "D1":
            pair = q_formal.chain_apply("D1", q_formal.seed_pair(base=2 ** args.k), args.k)
        else:
            pair = q_formal.chain_apply(args.pair, q_formal.seed_pair(), args.k)
        return reports.from_bailey(q_formal.bailey_check(pair, args.n_max, args.order))

    variant = args.variant or ("all" if args.family == "B" else "proof")
    if variant == "all":
        results, winner = q_formal.verify_variants(args.family, args.k, args.order)
        return reports.from_variants(args.family, args.k, args.order, results, winner)
    return reports.from_identity(q_formal.verify_identity(args.family, args.k, args.order, variant))


def _expand_params(target, args):
    names = {"OL": ("l", "m", "k"), "T14": ("d", "v", "w")}.get(target, ("k", "v", "w"))
    return {name: getattr(args, name) for name in names if getattr(args, name) is not None}


def cmd_expand(args):
    target = EXPAND_TARGETS[args.target]
    params = _expand_params(target, args)
    precision = PrecisionContext(args.precision)
    if args.arbitrate:
        result = asym_engine.arbitrate(target, params, args.grid, precision, M=args.terms,
                                       lhs_variant=args.lhs_variant, workers=args.workers)
        return reports.from_arbitration(result, precision.digits)
    M = args.terms if args.terms is not None else asym_engine.DEFAULT_ORDER[target]
    result = asym_engine.remainder_slope(target, params, M, args.grid, precision, args.variant,
                                         args.lhs_variant, args.workers)
    spec = asym_engine.build_expansion(target, params, M, precision, result.variant)
    return reports.from_slope(result, spec)


def cmd_lvalues(args):
    if args.max_n < 0:
        raise ValueError("--max-n must be >= 0")
    if args.d is not None:
        chi = exact_arith.CharacterSpec(args.d)
        values = [exact_arith.l_chi_neg(chi, n) for n in range(args.max_n + 1)]
        return reports.from_lvalues("L-chi", {"d": str(args.d), "parity": chi.parity}, values)
    if args.l is not None and args.m is not None:
        values = [exact_arith.lm_value(args.l, args.m, n) for n in range(args.max_n + 1)]
        return reports.from_lvalues("L-lm", {"l": str(args.l), "m": str(args.m)}, values)
    raise ValueError("give --d or both --l and --m")


def baseline_name():
    return "OL(" + ",".join(f"{k}={v}" for k, v in OL_BASELINE.items()) + ")"


def cmd_baseline(args):
    precision = PrecisionContext(args.precision)
    value = series_eval.eval_theta_OL(OL_BASELINE["l"], OL_BASELINE["m"], OL_BASELINE["k"],
                                      parse_decimal(OL_BASELINE["t"]), precision)
    text = render(value, precision.digits)
    name = baseline_name()
    db_manager.setup_database()
    if args.record:
        added = db_manager.record_baseline(name, text, precision.digits)
        sys.stdout.write(f"{name} = {text} {'recorded' if added else 'already recorded'}\n")
        return EXIT_PASS
    ok = db_manager.check_baseline(name, text, precision.digits - 5)
    if ok is None:
        sys.stdout.write(f"{name}: no baseline recorded\n")
        return EXIT_USAGE
    sys.stdout.write(f"{name} = {text} {'PASS' if ok else 'FAIL'}\n")
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_history(args):
    db_manager.setup_database()
    text = csv_helper.export_runs_to_csv(args.limit)
    sys.stdout.write(text if text else "no runs recorded\n")
    return EXIT_PASS


REPORT_COMMANDS = {"verify": cmd_verify, "expand": cmd_expand, "lvalues": cmd_lvalues}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    configure_logging(args.verbose)

    try:
        if args.command == "history":
            return cmd_history(args)
        if args.command == "baseline":
            return cmd_baseline(args)
        report = REPORT_COMMANDS[args.command](args)
    except asym_engine.PrecisionStarvationError as e:
        logger.error("%s", e)
        return EXIT_STARVED
    except SQLAlchemyError as e:
        logger.error("run-history store unavailable: %s", e)
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE
    except ValueError as e:
        logger.error("%s", e)
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE

    emit(report, args.format, args.out)
    if args.record:
        record(report)
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
