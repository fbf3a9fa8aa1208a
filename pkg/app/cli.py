#!/usr/bin/env python
"""
Command-line entry point for the Gaussian measurement toolkit.

Every subcommand reads a problem file (JSON) and writes a canonical JSON
report. ``run`` executes every task; the other subcommands execute only the
tasks with the matching op.

Exit codes: 0 success, 2 unreadable input, 3 invalid problem file,
4 task failure (the partial report is still written).
"""
import argparse
import json
import logging
import sys
from typing import List, Optional

from dotenv import load_dotenv
from pydantic import ValidationError

from app.config import settings
from app.exceptions import ProblemValidationError, TaskExecutionError
from app.schemas.problem import ProblemFile
from app.services.tasks import RunOptions, run_problem
from app.utils.helpers import canonical_dumps

# Load environment variables
load_dotenv()

# Set up logging
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_INVALID_PROBLEM = 3
EXIT_TASK_FAILED = 4

# Subcommand name -> task op it selects
SUBCOMMANDS = {
    "validate": "validate",
    "classify": "classify",
    "ic-single": "ic-single",
    "ic-set": "ic-set",
    "coverage": "coverage",
    "witness": "witness",
    "dilate": "dilate",
    "channel-from-obs": "channel-from-obs",
    "obs-from-channel": "obs-from-channel",
    "pushforward": "pushforward",
    "sample": "sample",
    "reconstruct": "reconstruct",
    "decompose-covariant": "decompose-covariant",
    "bosonic-probe": "bosonic-probe",
    "oracle-check": "oracle-check",
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", "-i", default="-", help="Problem file (default: stdin)")
    parser.add_argument("--output", "-o", default="-", help="Report file (default: stdout)")
    parser.add_argument("--seed", type=int, default=0, help="Seed for sampling tasks")
    parser.add_argument("--tol", type=float, default=None, help=f"Numerical tolerance (default {settings.DEFAULT_TOL})")
    parser.add_argument("--cutoff", type=int, default=None, help=f"Fock cutoff (default {settings.FOCK_CUTOFF})")
    parser.add_argument("--timing", action="store_true",
                        help="Record per-task wall-clock times (timing_s is null otherwise)")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="Logging level for stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaussian-meas", description=settings.APP_DESCRIPTION)
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("run", help="Run every task of a problem file"))
    for name in SUBCOMMANDS:
        _add_common(sub.add_parser(name, help=f"Run only the {name} tasks of a problem file"))
    return parser


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write(path: str, report: dict) -> None:
    text = canonical_dumps(report) + "\n"
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run the CLI

    Args:
        argv: Argument list (default: sys.argv[1:])

    Returns:
        Process exit code
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
        force=True,
    )

    try:
        raw = json.loads(_read(args.input))
    except (OSError, json.JSONDecodeError) as exc:
        logger.error(f"Cannot read problem file: {exc}")
        return EXIT_BAD_INPUT

    options = RunOptions(seed=args.seed, tol=args.tol, cutoff=args.cutoff, timing=args.timing)
    only_op = None if args.command == "run" else SUBCOMMANDS[args.command]
    try:
        problem = ProblemFile.model_validate(raw)
        report = run_problem(problem, options, only_op=only_op)
    except (ValidationError, ProblemValidationError) as exc:
        logger.error(f"Invalid problem file: {exc}")
        return EXIT_INVALID_PROBLEM
    except TaskExecutionError as exc:
        logger.error(f"Task {exc.task_index} ({exc.op}) failed")
        if exc.partial_report is not None:
            _write(args.output, exc.partial_report)
        return EXIT_TASK_FAILED

    _write(args.output, report)
    logger.info(f"Wrote report with {len(report['tasks'])} task(s)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
