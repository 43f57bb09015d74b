import argparse
import sys
from typing import List, Optional

from cli.commands import (EXIT_USAGE, cmd_corpus, cmd_diff, cmd_fuzz, cmd_gen,
                          cmd_instrument, cmd_run, cmd_stats)
from core.config import config
from core.logger import logger
from instrument.passes import InstrumentOptions
from version import __version__


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spanguard",
        description="Heap bounds/temporal safety instrumentation for a mini SSA IR.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--json", action="store_true", default=None, help="print JSON reports")
    sub = parser.add_subparsers(dest="command", required=True)

    def opt(p: argparse.ArgumentParser) -> None:
        p.add_argument("--opt", dest="flags", help="passes: all, none, a,b or all,-name")

    def vm(p: argparse.ArgumentParser) -> None:
        p.add_argument("--step-limit", type=int)
        p.add_argument("--cache-cap", type=int)

    p = sub.add_parser("instrument", help="instrument and optimize an IR file")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.add_argument(
        "--kinds",
        default="range,cast,escape",
        help="comma-separated instrumentation kinds (range, cast, escape)",
    )
    opt(p)

    p = sub.add_parser("run", help="run a program in the VM")
    p.add_argument("input")
    p.add_argument("--plain", action="store_true", help="run without instrumentation")
    p.add_argument("--keep-going", action="store_true", default=None)
    opt(p)
    vm(p)

    p = sub.add_parser("diff", help="compare plain, unoptimized and optimized runs")
    p.add_argument("input")
    opt(p)
    vm(p)

    p = sub.add_parser("corpus", help="check the good/bad corpus")
    p.add_argument("directory", nargs="?")
    p.add_argument("--xlsx", help="write an Excel report")
    opt(p)
    vm(p)

    p = sub.add_parser("fuzz", help="differential campaign over generated programs")
    p.add_argument("-n", "--count", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--bug-rate", type=float)
    p.add_argument("-j", "--jobs", type=int)
    p.add_argument("--reproducers", dest="reproducer_dir")
    p.add_argument("--step-limit", type=int)

    p = sub.add_parser("stats", help="per-pass optimizer statistics")
    p.add_argument("input")
    p.add_argument("--xlsx", help="write an Excel report")
    opt(p)

    p = sub.add_parser("gen", help="print a generated program")
    p.add_argument("--seed", type=int)
    p.add_argument("--bug-rate", type=float, default=0.0)
    p.add_argument("-o", "--output")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    as_json = args.json if args.json is not None else bool(config.get("output.json"))
    logger.info(f"spanguard {__version__}: {args.command}")

    if args.command == "instrument":
        try:
            options = InstrumentOptions.from_kinds(args.kinds.split(","))
        except ValueError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_USAGE
        return cmd_instrument(args.input, args.flags, args.output, options, as_json)
    if args.command == "run":
        return cmd_run(
            args.input,
            args.flags,
            plain=args.plain,
            keep_going=args.keep_going,
            step_limit=args.step_limit,
            cache_cap=args.cache_cap,
            as_json=as_json,
        )
    if args.command == "diff":
        return cmd_diff(args.input, args.flags, args.step_limit, args.cache_cap, as_json)
    if args.command == "corpus":
        return cmd_corpus(
            args.directory, args.flags, args.step_limit, args.cache_cap, args.xlsx, as_json
        )
    if args.command == "fuzz":
        return cmd_fuzz(
            args.count,
            args.seed,
            args.bug_rate,
            args.jobs,
            args.step_limit,
            args.reproducer_dir,
            as_json,
        )
    if args.command == "stats":
        return cmd_stats(args.input, args.flags, args.xlsx, as_json)
    if args.command == "gen":
        return cmd_gen(args.seed, args.bug_rate, args.output, as_json)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
