"""Command-line front end for staged pipeline runs.

Exit codes: 0 on success, 2 on configuration or validation problems,
3 on numerical failures (non-convergence, saddle points, blow-ups).
"""

from __future__ import annotations

import argparse
import sys

from . import pipeline
from .errors import ConfigError, ConvergenceError, NumericalError, SaddleError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _add_run_options(parser: argparse.ArgumentParser, with_stage: bool) -> None:
    parser.add_argument("--config", required=True,
                        help="path to the run's JSON config")
    parser.add_argument("--output", default=None,
                        help="override the config's output directory")
    parser.add_argument("--force", action="store_true",
                        help="re-run stages even when artifacts are fresh")
    parser.add_argument("--seed-override", type=int, default=None,
                        help="override the config's rng seed")
    if with_stage:
        parser.add_argument("--stage", choices=pipeline.STAGES, default=None,
                            help="run only this stage")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kinklab",
        description="Kink lattices: statics, normal modes, classical and "
                    "open-quantum dynamics, staged behind a config file.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="execute the configured stages")
    _add_run_options(run_parser, with_stage=True)

    for name in pipeline.STAGES:
        stage_parser = sub.add_parser(name, help=f"run only the {name} stage")
        _add_run_options(stage_parser, with_stage=False)

    report_parser = sub.add_parser(
        "report", help="summarize the artifacts of a finished run")
    report_parser.add_argument("artifact_dir",
                               help="directory holding manifest.json")
    return parser


def run(config_path, force: bool = False, stage: str | None = None,
        output_dir: str | None = None, seed_override: int | None = None) -> int:
    """Execute a config's stages; return a process exit status."""
    try:
        pipeline.run(config_path, force=force, stage=stage,
                     output_dir=output_dir, seed_override=seed_override,
                     log=lambda msg: print(msg))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, SaddleError, NumericalError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def report(artifact_dir) -> int:
    try:
        print(pipeline.report(artifact_dir))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "report":
        return report(args.artifact_dir)
    stage = getattr(args, "stage", None)
    if args.command != "run":
        stage = args.command
    return run(args.config, force=args.force, stage=stage,
               output_dir=args.output, seed_override=args.seed_override)


if __name__ == "__main__":
    sys.exit(main())
