"""Command line entry point: ``cobfc run | construct | dcfringe``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import report as reports
from .data import METRICS, ParseError, read_dataset, write_dataset
from .dcfringe import DEFAULT_MAX_ITERATIONS, dc_fringe
from .harness import METHODS, PipelineConfig, augment, construct_features, evaluate


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="ARFF or CSV file")
    p.add_argument("--format", choices=("arff", "csv"), help="input format (default: by extension)")
    p.add_argument("--class-column", help="class attribute name (default: last column)")


def _pipeline(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=10, help="neighborhood size")
    p.add_argument("--min-pts", type=int, default=10, help="LOF MinPts")
    p.add_argument("--lof-threshold", type=float, default=1.5)
    p.add_argument("--min-support-pct", type=float, default=0.0,
                   help="minimum feature support as %% of the training set")
    p.add_argument("--metric", choices=METRICS, help="override the distance choice")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cobfc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="cross-validate methods and print a report")
    _common(run)
    _pipeline(run)
    run.add_argument("--method", action="append", choices=METHODS,
                     help="repeatable; the unaugmented run is always included")
    run.add_argument("--learner", choices=("nb", "tree"), default="nb")
    run.add_argument("--folds", type=int, default=10)
    run.add_argument("--seed", type=int, default=42)
    run.add_argument("--max-iterations", type=int, default=DEFAULT_MAX_ITERATIONS)
    run.add_argument("--jobs", type=int, default=1, help="parallel folds")
    run.add_argument("--report", choices=("json", "md"), default="json")
    run.add_argument("--output", help="write the report here instead of stdout")

    con = sub.add_parser("construct", help="mine features on the whole file and augment it")
    _common(con)
    _pipeline(con)
    con.add_argument("--output", help="augmented dataset path (.arff or .csv)")
    con.add_argument("--features", help="write features and diagnostics as JSON")

    dcf = sub.add_parser("dcfringe", help="run DC-Fringe on the whole file and augment it")
    _common(dcf)
    dcf.add_argument("--max-iterations", type=int, default=DEFAULT_MAX_ITERATIONS)
    dcf.add_argument("--output", help="augmented dataset path (.arff or .csv)")
    dcf.add_argument("--features", help="write features as JSON")
    return parser


def _write(path: str | None, payload: bytes) -> None:
    if path is None:
        sys.stdout.buffer.write(payload)
        sys.stdout.flush()
    else:
        with open(path, "wb") as fh:
            fh.write(payload)


def _out_format(path: str) -> str:
    return "csv" if path.lower().endswith(".csv") else "arff"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        data = read_dataset(args.input, args.class_column, args.format)
        if args.command == "run":
            methods = args.method or ["cobfc"]
            config = PipelineConfig(
                k=args.k, min_pts=args.min_pts, lof_threshold=args.lof_threshold,
                min_support_pct=args.min_support_pct, metric=args.metric,
                learner=args.learner, folds=args.folds, seed=args.seed,
                method=methods[0], max_iterations=args.max_iterations, jobs=args.jobs)
            result = evaluate(data, config, methods)
            _write(args.output, reports.report([result], args.report))
        elif args.command == "construct":
            config = PipelineConfig(k=args.k, min_pts=args.min_pts,
                                    lof_threshold=args.lof_threshold,
                                    min_support_pct=args.min_support_pct, metric=args.metric)
            built = construct_features(data, config)
            if args.features:
                _write(args.features, (json.dumps(built.to_dict(data), indent=2) + "\n").encode())
            out = augment(data, built.features)
            if args.output:
                _write(args.output, write_dataset(out, _out_format(args.output)))
            else:
                _write(None, write_dataset(out, "arff"))
        else:
            fr = dc_fringe(data, args.max_iterations)
            if args.features:
                _write(args.features, (json.dumps(fr.to_dict(), indent=2) + "\n").encode())
            fmt = _out_format(args.output) if args.output else "arff"
            _write(args.output, write_dataset(fr.dataset, fmt))
    except (ParseError, ValueError, OSError) as exc:
        print(f"cobfc: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
