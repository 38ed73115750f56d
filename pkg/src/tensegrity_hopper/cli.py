"""Command-line front end over the experiment harness."""

import argparse
import sys
from dataclasses import replace

from . import harness
from .dynamics import ConfigError
from .policy import CheckpointError


def _parse_floats(text):
    return tuple(float(p) for p in text.split(",") if p.strip())


def _parse_ints(text):
    return tuple(int(p) for p in text.split(",") if p.strip())


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tensegrity-hopper",
        description="Simulate and train the two-link, eight-cable tensegrity hopper.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, checkpoint=True):
        p.add_argument("--config", help="INI run config ([model]/[env]/[ars] sections)")
        p.add_argument("--out", help="output directory (default runs/<command>)")
        p.add_argument("--seed", type=int, help="override ars.seed")
        p.add_argument("--workers", type=int, help="override ars.workers")
        if checkpoint:
            p.add_argument("--checkpoint", required=True, help="policy checkpoint file")

    p = sub.add_parser("train", help="run ARS training; writes checkpoint and log CSV")
    add_common(p, checkpoint=False)

    p = sub.add_parser("eval", help="evaluate a checkpoint at the configured height")
    add_common(p)
    p.add_argument("--repeats", type=int, default=10)

    p = sub.add_parser("sweep-height", help="evaluate over a grid of drop heights")
    add_common(p)
    p.add_argument("--heights", type=_parse_floats,
                   default=harness.DEFAULT_HEIGHTS, metavar="H1,H2,...")
    p.add_argument("--repeats", type=int, default=10)

    p = sub.add_parser("sweep-frequency",
                       help="evaluate at lower decision frequencies (action repeat)")
    add_common(p)
    p.add_argument("--intervals", type=_parse_ints,
                   default=harness.DEFAULT_INTERVALS, metavar="K1,K2,...",
                   help="decision intervals k; frequency = control_rate / k")
    p.add_argument("--repeats", type=int, default=10)

    p = sub.add_parser("long-horizon", help="single evaluation with a stretched horizon")
    add_common(p)
    p.add_argument("--duration", type=float, default=600.0, metavar="SECONDS")

    p = sub.add_parser("export-trajectory", help="dump one episode as a CSV trajectory")
    add_common(p)
    p.add_argument("--height", type=float, help="override drop height (m)")

    return parser


def _resolve_config(args):
    config = harness.load_config(args.config) if args.config else harness.RunConfig.default()
    ars_changes = {}
    if args.seed is not None:
        ars_changes["seed"] = args.seed
    if args.workers is not None:
        ars_changes["workers"] = args.workers
    if ars_changes:
        config = harness.RunConfig(config.model, config.env,
                                   replace(config.ars, **ars_changes))
    return config


def main(argv=None):
    args = build_parser().parse_args(argv)
    out_dir = args.out or f"runs/{args.command}"
    try:
        config = _resolve_config(args)
        if args.command == "train":
            harness.cmd_train(config, out_dir)
        elif args.command == "eval":
            harness.cmd_eval(config, args.checkpoint, out_dir, repeats=args.repeats)
        elif args.command == "sweep-height":
            harness.cmd_sweep_height(config, args.checkpoint, out_dir,
                                     heights=args.heights, repeats=args.repeats)
        elif args.command == "sweep-frequency":
            harness.cmd_sweep_frequency(config, args.checkpoint, out_dir,
                                        decision_intervals=args.intervals,
                                        repeats=args.repeats)
        elif args.command == "long-horizon":
            harness.cmd_long_horizon(config, args.checkpoint, out_dir,
                                     duration_s=args.duration)
        elif args.command == "export-trajectory":
            harness.cmd_export_trajectory(config, args.checkpoint, out_dir,
                                          height=args.height)
    except (ConfigError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc.strerror or exc} ({exc.filename})", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
