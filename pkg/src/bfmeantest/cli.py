"""Command-line entry point.

``bfmeantest test``      pairwise tests across the groups of a CSV table.
``bfmeantest simulate``  Monte Carlo size/power for one or more scenarios.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

from .baselines import KRule, PbConfig
from .bf import DEFAULT_K
from .core import InputError
from .harness import (
    ReplicationError,
    load_config,
    reports_to_csv,
    reports_to_json,
    run_scenario,
    scenario_from_mapping,
)
from .registry import TEST_IDS, parse_tests
from .simgen import InnovationKind, MeanKind, SigmaKind

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _tests_arg(text):
    try:
        return parse_tests(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bfmeantest", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="pairwise tests across the groups of a CSV table")
    t.add_argument("--input", required=True, help="CSV file, one observation per row")
    t.add_argument("--labels", required=True,
                   help="label column (header name or index) or a one-column label file")
    t.add_argument("--tests", type=_tests_arg, default=TEST_IDS,
                   help=f"comma list from {','.join(TEST_IDS).lower()}")
    t.add_argument("--k", type=float, default=DEFAULT_K, help="diagonal regularizer of BF1/BF2")
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--pb-m", type=float, default=0.0)
    t.add_argument("--no-header", action="store_true")
    t.add_argument("--delimiter", default=",")
    t.add_argument("--out", help="results CSV (pair,test,statistic,log_p)")
    t.add_argument("--json", help="also write a JSON document to this path")
    t.add_argument("--seed", type=int, default=0, help="accepted for uniformity; tests are deterministic")
    t.add_argument("--threads", type=_positive_int, default=1)

    s = sub.add_parser("simulate", help="Monte Carlo size/power of a scenario")
    s.add_argument("--config", help="INI scenario file; flags below are ignored when given")
    s.add_argument("--sigma", choices=[k.value for k in SigmaKind], default="S1")
    s.add_argument("--p", type=_positive_int)
    s.add_argument("--n1", type=_positive_int, default=30)
    s.add_argument("--n2", type=_positive_int, default=None)
    s.add_argument("--mean", choices=[k.value for k in MeanKind if k is not MeanKind.FIXED],
                   default="null")
    s.add_argument("--p0", type=float, default=0.5)
    s.add_argument("--innov", choices=[k.value for k in InnovationKind], default="gaussian")
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--k", type=float, default=DEFAULT_K)
    s.add_argument("--reps", type=_positive_int, default=5000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--tests", type=_tests_arg, default=("BF2", "SD"))
    s.add_argument("--lenient", action="store_true",
                   help="count failed replications instead of aborting")
    s.add_argument("--out", help="report CSV path (stdout when omitted)")
    s.add_argument("--json", help="JSON report path")
    s.add_argument("--threads", type=_positive_int, default=1)
    s.add_argument("--progress", action="store_true")
    return parser


def _fmt(v: float) -> str:
    return f"{v:.4f}" if math.isfinite(v) else "nan"


def _write_text(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from exc


def cmd_test(args) -> int:
    from .data import load_csv, run_pairwise

    if os.path.isfile(args.labels):
        table = load_csv(args.input, has_header=not args.no_header, label_file=args.labels,
                         delimiter=args.delimiter)
    else:
        table = load_csv(args.input, has_header=not args.no_header, label_column=args.labels,
                         delimiter=args.delimiter)
    pb = PbConfig(m=args.pb_m, k_rule=KRule.SCALED_MAX_EIGEN)
    results = run_pairwise(table, args.tests, args.k, args.alpha, pb, threads=args.threads)

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["pair", "test", "statistic", "log_p"])
    for r in results:
        w.writerow([r.pair, r.test, repr(r.statistic), repr(r.log_p)])
    if args.out:
        _write_text(args.out, buf.getvalue())
    if args.json:
        doc = {
            "groups": table.group_sizes(),
            "k": args.k,
            "alpha": args.alpha,
            "results": [{"pair": r.pair, "test": r.test,
                         "statistic": r.statistic if r.ok else None,
                         "log_p": r.log_p if r.ok else None, "note": r.note} for r in results],
        }
        _write_text(args.json, json.dumps(doc, indent=2))

    sizes = ", ".join(f"{g}={c}" for g, c in table.group_sizes().items())
    print(f"groups: {sizes}; p = {table.X.shape[1]}")
    for r in results:
        extra = f"  [{r.note}]" if r.note else ""
        print(f"{r.pair:>12} {r.test:>4} {_fmt(r.statistic):>10} ({_fmt(r.log_p)}){extra}")
    return EXIT_OK


def _scenario_from_flags(args):
    if args.p is None:
        raise UsageError("--p is required unless --config is given")
    mapping = {
        "sigma": args.sigma, "p": args.p, "n1": args.n1,
        "n2": args.n2 if args.n2 is not None else args.n1,
        "mean": args.mean, "p0": args.p0, "innov": args.innov, "alpha": args.alpha,
        "k": args.k, "reps": args.reps, "seed": args.seed, "tests": ",".join(args.tests),
        "strict": "false" if args.lenient else "true",
    }
    return [scenario_from_mapping(mapping)]


def cmd_simulate(args) -> int:
    specs = load_config(args.config) if args.config else _scenario_from_flags(args)
    reports = [run_scenario(spec, workers=args.threads, progress=args.progress) for spec in specs]
    csv_text = reports_to_csv(reports)
    if args.out:
        _write_text(args.out, csv_text)
    if args.json:
        _write_text(args.json, reports_to_json(reports))
    if not args.out:
        sys.stdout.write(csv_text)
    else:
        for rep in reports:
            s = rep.scenario
            head = s.label or f"{s.sigma.kind.value} p={s.p} n=({s.n1},{s.n2}) {s.mean.kind.value}"
            cells = "  ".join(f"{name}={_fmt(res.rejection_rate)}"
                              for name, res in rep.results.items())
            print(f"{head}: {cells}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    handler = cmd_test if args.command == "test" else cmd_simulate
    try:
        return handler(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"bfmeantest: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, OSError) as exc:
        print(f"bfmeantest: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ReplicationError as exc:
        kind = "data error" if isinstance(exc.__cause__, InputError) else "numerical failure"
        print(f"bfmeantest: {kind}: {exc}", file=sys.stderr)
        return EXIT_DATA if isinstance(exc.__cause__, InputError) else EXIT_NUMERIC
    except ArithmeticError as exc:
        print(f"bfmeantest: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
