"""
Command-line entry point.

    python -m socialdsa run --config link-probability --out link-probability.csv
    python -m socialdsa run --config my.ini --sweep p_rec
    python -m socialdsa validate potential-oracle

Exit codes: 0 success, 1 validation failure or model inconsistency,
2 configuration error,
3 I/O error.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from common.logging_utils.logging_config import configured_loggers, get_logger, set_console_level
from common.project_config import project_config
from common.utils.file_sys_utils import ensure_directory, sanitize_filename

from . import learn
from .baselines import P_REC_GRID
from .config_file import PRESETS, load_config
from .engine import PointSummary, SweepSpec, optimize_p_rec, run_experiment
from .errors import ConfigurationError, ConsistencyError, EdgeListParseError
from .results import ResultRow, write_results
from .sim_config import Policy, canonical_axis
from .validation import SUITES, run_suite

logger = get_logger('cli')

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_IO_ERROR = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="socialdsa",
        description="Social-recommendation-aided dynamic spectrum access simulator",
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="Log DEBUG messages to the console")
    verbosity.add_argument("--quiet", action="store_true", help="Log only warnings and errors to the console")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run an experiment and write its result table")
    run.add_argument("--config", required=True,
                     help=f"Config file, or one of the presets: {', '.join(PRESETS)}")
    run.add_argument("--out", type=Path, default=None,
                     help="Output CSV (default: <results dir>/<experiment id>.csv)")
    run.add_argument("--sweep", default=None,
                     help="Sweep axis overriding the config: p_link, delta, n_users, beta or p_rec. "
                          "p_rec without --values searches the grid 0.0, 0.1, ..., 1.0")
    run.add_argument("--values", default=None, help="Comma-separated values of the --sweep axis")
    run.add_argument("--workers", type=int, default=None,
                     help="Worker processes (default: SOCIAL_DSA_WORKERS or one per processor)")
    run.add_argument("--dump-perceptions", type=Path, default=None, metavar="DIR",
                     help="Write the final perception table of every weak-mode replication to DIR")

    validate = commands.add_parser("validate", help="Run an oracle or invariant suite")
    validate.add_argument("suite", help=f"One of: {', '.join(SUITES)}")
    validate.add_argument("--scale", type=float, default=1.0, help="Instance-count / horizon scale factor")
    validate.add_argument("--seed", type=int, default=0, help="Seed of the generated instances")
    return parser


def _apply_verbosity(args):
    if args.verbose:
        level = "DEBUG"
    elif args.quiet:
        level = "WARNING"
    else:
        return
    for configured in configured_loggers():
        set_console_level(configured, level)


def _sweep_override(args, config_sweep: SweepSpec) -> SweepSpec:
    if args.sweep is None:
        if args.values is not None:
            raise ConfigurationError("--values", "given without --sweep")
        return config_sweep
    axis = canonical_axis(args.sweep)
    if args.values is None:
        if axis == "p_rec":
            return SweepSpec(axis="p_rec", values=P_REC_GRID)
        raise ConfigurationError("--values", f"sweep over {axis} needs --values")
    try:
        values = tuple(float(v) for v in args.values.split(",") if v.strip())
    except ValueError as e:
        raise ConfigurationError("--values", str(e))
    return SweepSpec(axis=axis, values=values)


def _summary_line(summary: PointSummary) -> str:
    where = f"{summary.axis}={summary.value:g} " if summary.axis else ""
    line = (f"{where}[{summary.policy.value}] throughput {summary.mean_throughput:.4f} "
            f"+/- {summary.stderr:.4f} Mbps ({len(summary.replications)} reps)")
    if summary.policy is Policy.STRONG:
        line += f", iterations {summary.mean_iterations:.2f} (max {summary.max_iterations:g})"
    return line


def _dump_perceptions(summaries: Sequence[PointSummary], directory: Path):
    ensure_directory(directory)
    for summary in summaries:
        if summary.policy is not Policy.WEAK:
            continue
        scale = summary.config.learner_config().payoff_scale
        point = f"_{summary.axis}{summary.value:g}" if summary.axis else ""
        for replication in summary.replications:
            name = sanitize_filename(f"{summary.config.experiment_id}{point}_rep{replication.replication}.csv")
            learn.dump_perception_table(replication.perceptions, directory / name, payoff_scale=scale)


def cmd_run(args) -> int:
    config, sweep = load_config(args.config)
    sweep = _sweep_override(args, sweep)
    out = args.out or project_config.results_dir / f"{sanitize_filename(config.experiment_id)}.csv"
    keep = args.dump_perceptions is not None

    if args.sweep is not None and args.values is None and sweep.axis == "p_rec":
        best, summaries = optimize_p_rec(config, workers=args.workers)
        print(f"best p_rec = {best:g}")
    else:
        summaries = run_experiment(config, sweep, workers=args.workers, keep_perceptions=keep)

    for summary in summaries:
        print(_summary_line(summary))
    write_results([ResultRow.from_summary(s) for s in summaries], out)
    if keep:
        _dump_perceptions(summaries, args.dump_perceptions)
    return EXIT_OK


def cmd_validate(args) -> int:
    report = run_suite(args.suite, scale=args.scale, seed=args.seed)
    print(f"{report.name}: {report.passed} passed, {report.failed} failed")
    for failure in report.failures:
        print(f"  FAILED {failure}")
    return EXIT_OK if report.ok else EXIT_VALIDATION_FAILED


COMMANDS = {"run": cmd_run, "validate": cmd_validate}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _apply_verbosity(args)
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, EdgeListParseError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG_ERROR
    except ConsistencyError as e:
        logger.error(f"Consistency error: {e}")
        return EXIT_VALIDATION_FAILED
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_IO_ERROR


if __name__ == "__main__":
    sys.exit(main())
