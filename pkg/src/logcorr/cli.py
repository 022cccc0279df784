"""Command-line driver: one subcommand per pipeline stage.

Exit codes: 0 success, 2 usage errors (bad flags), 3 data errors (missing
or stale artifacts, malformed configs or inputs), 4 internal errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import LogcorrError
from .synthesis import (
    BackgroundStream,
    BurstInjection,
    PeriodicInjection,
    PlantedRule,
    SyntheticSpec,
    make_catalog,
)
from . import pipeline

BASELINE = {
    "tw": 3600,
    "sth": 5,
    "cth": 0.25,
    "scth": 10,
    "ccth": 0.8,
    "cpth": 0.8,
    "pth": 0.25,
    "tp": 3600,
    "repeat_window": 10,
    "cycle_count": 20,
    "cycle_fraction": 0.25,
}


def demo_spec(seed: int = 20081026) -> SyntheticSpec:
    """A small corpus that exercises every stage: two planted pairs, one
    periodic daemon, one repeat burst, light background noise."""
    sources = make_catalog(node_count=4, source_count=12)
    duration = 80 * 9000
    return SyntheticSpec(
        seed=seed,
        duration=duration,
        sources=sources,
        background=tuple(
            BackgroundStream(source=i, rate_per_hour=0.05) for i in range(4, 8)
        ),
        planted=(
            PlantedRule(trigger=0, consequent=4, probability=0.9,
                        delay_min=30, delay_max=300, occurrences=80),
            PlantedRule(trigger=1, consequent=5, probability=0.6,
                        delay_min=60, delay_max=600, occurrences=80),
        ),
        periodic=(PeriodicInjection(source=8, interval=300, count=120, deviations=(40, 81)),),
        bursts=(BurstInjection(source=9, start_offset=5000, count=25, spacing=2),),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="logcorr",
        description=(
            "Mine temporal correlation rules from cluster system logs, "
            "build failure correlation graphs, and predict upcoming events."
        ),
    )
    sub = parser.add_subparsers(dest="stage", required=True)

    def add_out(p):
        p.add_argument("--out-dir", required=True, help="pipeline output directory")

    p = sub.add_parser("generate", help="write a seeded synthetic corpus")
    add_out(p)
    p.add_argument("--spec", help="SyntheticSpec JSON file (default: built-in demo)")
    p.add_argument("--seed", type=int, help="override the spec seed")

    p = sub.add_parser("parse", help="parse raw log lines into formatted events")
    add_out(p)
    p.add_argument("--config", required=True, help="config document (XML or flat form)")
    p.add_argument("--input", required=True, help="raw log file, one event per line")
    p.add_argument("--year-hint", type=int, default=None,
                   help="year for syslog-style timestamps (default: current year)")

    p = sub.add_parser("filter", help="remove repeated and periodic events")
    add_out(p)
    p.add_argument("--repeat-window", type=int, default=BASELINE["repeat_window"])
    p.add_argument("--cycle-count", type=int, default=BASELINE["cycle_count"])
    p.add_argument("--cycle-fraction", type=float, default=BASELINE["cycle_fraction"])
    p.add_argument("--cycle-tolerance", type=int, default=0)

    p = sub.add_parser("mine", help="mine event rules from filtered events")
    add_out(p)
    p.add_argument("--tw", type=int, default=BASELINE["tw"], help="sliding window, seconds")
    p.add_argument("--sth", type=int, default=BASELINE["sth"], help="support threshold")
    p.add_argument("--cth", type=float, default=BASELINE["cth"], help="confidence threshold")
    p.add_argument("--scth", type=int, default=BASELINE["scth"],
                   help="cluster support threshold")
    p.add_argument("--ccth", type=float, default=BASELINE["ccth"],
                   help="cluster confidence threshold")
    p.add_argument("--cpth", type=float, default=BASELINE["cpth"],
                   help="cluster posterior threshold")
    p.add_argument("--max-arity", type=int, default=3)
    p.add_argument("--algorithm", choices=["apriori", "apriori-s"], default="apriori")
    p.add_argument("--eval-start", type=int, default=None,
                   help="epoch boundary: mine only events before it")

    p = sub.add_parser("build-fcg", help="build failure correlation graphs from rules")
    add_out(p)

    p = sub.add_parser("predict", help="replay events after the boundary through the graphs")
    add_out(p)
    p.add_argument("--pth", type=float, default=BASELINE["pth"],
                   help="prediction probability threshold")
    p.add_argument("--tp", type=int, default=BASELINE["tp"],
                   help="prediction valid duration, seconds")
    p.add_argument("--mark-lifetime", type=int, default=None,
                   help="mark decay, seconds (default: the mining window)")
    p.add_argument("--eval-start", type=int, default=None,
                   help="epoch boundary (default: the one mine ran with)")
    p.add_argument("--strict-chain-order", action="store_true")

    p = sub.add_parser("evaluate", help="score the prediction log")
    add_out(p)

    return parser


def dispatch(args: argparse.Namespace) -> pipeline.StageOutcome:
    if args.stage == "generate":
        if args.spec:
            spec = SyntheticSpec.from_json(Path(args.spec).read_text(encoding="utf-8"))
            origin = args.spec
        else:
            spec = demo_spec()
            origin = "demo"
        if args.seed is not None:
            import dataclasses

            spec = dataclasses.replace(spec, seed=args.seed)
        return pipeline.run_generate(args.out_dir, spec, spec_origin=origin)
    if args.stage == "parse":
        return pipeline.run_parse(args.out_dir, args.config, args.input, args.year_hint)
    if args.stage == "filter":
        return pipeline.run_filter(
            args.out_dir,
            repeat_window=args.repeat_window,
            cycle_count_threshold=args.cycle_count,
            cycle_fraction_threshold=args.cycle_fraction,
            cycle_tolerance=args.cycle_tolerance,
        )
    if args.stage == "mine":
        return pipeline.run_mine(
            args.out_dir,
            window=args.tw,
            support_threshold=args.sth,
            confidence_threshold=args.cth,
            cluster_support_threshold=args.scth,
            cluster_confidence_threshold=args.ccth,
            cluster_posterior_threshold=args.cpth,
            max_arity=args.max_arity,
            algorithm=args.algorithm,
            eval_start=args.eval_start,
        )
    if args.stage == "build-fcg":
        return pipeline.run_build_fcg(args.out_dir)
    if args.stage == "predict":
        return pipeline.run_predict(
            args.out_dir,
            probability_threshold=args.pth,
            valid_duration=args.tp,
            mark_lifetime=args.mark_lifetime,
            eval_start=args.eval_start,
            strict_chain_order=args.strict_chain_order,
        )
    if args.stage == "evaluate":
        return pipeline.run_evaluate(args.out_dir)
    raise AssertionError(f"unhandled stage {args.stage}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        outcome = dispatch(args)
    except LogcorrError as exc:
        print(f"logcorr {args.stage}: error: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"logcorr {args.stage}: error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - defensive
        print(f"logcorr {args.stage}: internal error: {exc!r}", file=sys.stderr)
        return 4
    for message in outcome.messages:
        print(f"logcorr {outcome.stage}: {message}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
