"""Command-line entry point: ``icalign run`` and ``icalign summarize``."""

import argparse
import logging
import sys

from . import harness
from .exceptions import ContractViolation
from .network import load_scenario


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="icalign",
        description="Monte-Carlo sum-rate sweeps for precoder designs on the "
                    "MIMO interference channel.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a sweep and write one row per "
                                     "(axis point, realization, algorithm)")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=sorted(harness.PRESETS))
    src.add_argument("--config", metavar="PATH", help="scenario JSON file")
    run.add_argument("--algorithms", help="comma-separated names, optional @ITERS "
                                          "suffix, e.g. IterIA,MinINL,JointMMSE@500")
    run.add_argument("--axis", choices=["rho_db", "alpha_db"])
    run.add_argument("--realizations", type=int)
    run.add_argument("--iterations", type=int)
    run.add_argument("--inits", type=int)
    run.add_argument("--seed", type=int, dest="master_seed")
    run.add_argument("--epsilon", type=float)
    run.add_argument("--axis-start", type=float)
    run.add_argument("--axis-stop", type=float)
    run.add_argument("--axis-step", type=float)
    run.add_argument("--rho-e-db", type=float,
                     help="fixed interferer power for the fig5 preset (default 0)")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--output", default="-", help="output file (default stdout)")
    run.add_argument("--format", choices=["csv", "json"], default="csv")

    summ = sub.add_parser("summarize", help="mean and standard error per "
                                            "(algorithm, axis value)")
    summ.add_argument("--input", required=True)
    summ.add_argument("--output", default="-")
    summ.add_argument("--format", choices=["csv", "json"], default="csv")
    return parser


def _spec_from_args(args):
    overrides = {}
    for name in ("axis", "realizations", "iterations", "inits", "master_seed", "epsilon",
                 "axis_start", "axis_stop", "axis_step"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if args.algorithms:
        overrides["algorithms"] = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    if args.preset:
        if args.rho_e_db is not None:
            if args.preset != "fig5":
                raise ContractViolation("--rho-e-db only applies to the fig5 preset")
            overrides["rho_e_db"] = args.rho_e_db
        return harness.preset(args.preset, **overrides)
    cfg = load_scenario(args.config)
    overrides.setdefault("algorithms", list(harness.ALL_ALGORITHMS))
    return harness.SweepSpec(scenario=args.config, config=cfg, **overrides)


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            spec = _spec_from_args(args)
            records = list(harness.run_sweep(spec, workers=args.workers))
            _emit(records, args.output, args.format, harness.write_records)
            failed = sum(1 for r in records if r.error)
            if failed:
                print(f"icalign: {failed} run(s) failed numerically; see the error column",
                      file=sys.stderr)
        else:
            rows = harness.summarize(harness.read_records(args.input))
            _emit(rows, args.output, args.format, harness.write_summary)
    except (ContractViolation, OSError, ValueError, KeyError, TypeError) as exc:
        print(f"icalign: error: {exc}", file=sys.stderr)
        return 2
    return 0


def _emit(rows, output, fmt, writer):
    writer(rows, sys.stdout if output == "-" else output, fmt)


if __name__ == "__main__":
    sys.exit(main())
