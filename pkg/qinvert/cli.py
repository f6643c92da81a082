#!/usr/bin/env python3
"""
qinvert Command Line Interface

Runs verification suites, reduction measurements and tradeoff sweeps, and
writes their CSV, summary and plot artifacts.
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from .core import QInvertError
from .runner import (
    COMMANDS,
    ConfigError,
    ExperimentConfig,
    ExperimentRunner,
    load_config,
    parse_floats,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

COMMAND_HELP = {
    "verify-swapping": "check the swapping bound on random algorithms and oracle pairs",
    "verify-entropy": "check subadditivity, entropy spot values and bag-entropy ceilings",
    "verify-qrac-bound": "measure reference codes against the length bound",
    "audit-chain": "evaluate every step of the length-bound chain on explicit states",
    "encode-perm": "measure the permutation reduction scheme",
    "encode-func": "measure the function reduction scheme and its tag filter",
    "grover": "compare simulated Grover success with the closed form",
    "hellman": "build and measure Hellman tables",
    "checkpoint": "build and measure the cycle checkpoint attack",
    "sweep": "run the tradeoff points listed in a config file",
    "bound-table": "print length bounds and explicit floors for a list of deltas",
}


class UsageArgumentParser(argparse.ArgumentParser):
    """Parser whose errors exit with the usage status."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    sizes = parser.add_argument_group("sizes and trials")
    sizes.add_argument("--n", type=int, help="codomain size (permutation size)")
    sizes.add_argument("--m", type=int, help="domain size for functions")
    sizes.add_argument("--seed", type=lambda t: int(t, 0), help="base seed (required)")
    sizes.add_argument("--trials", type=int, help="number of trials")
    sizes.add_argument("--mode", choices=("exact", "mc"), help="code evaluation mode")
    sizes.add_argument("--workers", type=int, help="worker threads")

    scheme = parser.add_argument_group("reduction constants")
    scheme.add_argument("--gamma", type=float, help="R sampling constant")
    scheme.add_argument("--c-const", dest="c_const", type=float,
                        help="query-magnitude constant c")
    scheme.add_argument("--rho", type=int, help="advice copies (default: formula)")
    scheme.add_argument("--big-c", dest="big_c", type=float, help="heavy-image constant C")
    scheme.add_argument("--epsilon", type=float, help="inverter success rate / Grover target")

    inverter = parser.add_argument_group("example inverters")
    inverter.add_argument("--inverter", choices=("table-advice", "grover", "noisy"))
    inverter.add_argument("--theta", type=float, help="stored fraction for table advice")
    inverter.add_argument("--t-queries", dest="t_queries", type=int,
                          help="Grover iterations for the grover inverter")
    inverter.add_argument("--noise", type=float,
                          help="correctness probability of the noisy inverter")

    attack = parser.add_argument_group("attacks and tables")
    attack.add_argument("--method", choices=("hellman", "checkpoint", "grover"),
                        help="restrict a sweep to one method")
    attack.add_argument("--t-len", dest="t_len", type=int, help="chain length / anchor spacing")
    attack.add_argument("--m-chains", dest="m_chains", type=int, help="chains per Hellman table")
    attack.add_argument("--tables", type=int, help="number of Hellman tables")
    attack.add_argument("--challenges", type=int,
                        help="challenges per attack (checkpoint: 0 tries every y)")
    attack.add_argument("--deltas", type=parse_floats, help="comma-separated deltas")

    output = parser.add_argument_group("input and output")
    output.add_argument("--config", help="flat key=value config file")
    output.add_argument("--out", help="output directory (default: results)")
    output.add_argument("-v", "--verbose", action="count", default=0,
                        help="log progress (-vv for debug output)")
    output.add_argument("--quiet", action="store_true", help="no progress bars")


def build_parser() -> argparse.ArgumentParser:
    parser = UsageArgumentParser(
        prog="qinvert",
        description="qinvert - function inversion time-space tradeoff workbench",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  qinvert verify-swapping --n 32 --trials 1000 --seed 7
  qinvert bound-table --n 8 --deltas 1.0,0.9 --seed 1
  qinvert encode-perm --n 32 --inverter table-advice --theta 0.5 --seed 3
  qinvert checkpoint --n 1048576 --t-len 1024 --seed 5
  qinvert sweep --config sweep.cfg --out results/

Exit status: 0 if every asserted invariant held, 1 on violations or
errors, 2 on usage errors.
        """,
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=UsageArgumentParser)
    sub.required = True
    for name in COMMANDS:
        _add_run_options(sub.add_parser(name, help=COMMAND_HELP[name], description=COMMAND_HELP[name]))
    return parser


_NOT_CONFIG = ("config", "verbose", "quiet")


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """
    Merge the config file (if any) with the command-line flags.

    Raises:
        ConfigError: If the merged settings are invalid or the seed is missing
    """
    file_values: Dict[str, Any] = load_config(args.config) if args.config else {}
    overrides = {k: v for k, v in vars(args).items() if k not in _NOT_CONFIG}
    if args.quiet:
        overrides["progress"] = False
    elif "progress" not in file_values:
        overrides["progress"] = True
    return ExperimentConfig.from_sources(file_values, overrides)


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point; returns the exit status."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    try:
        config = config_from_args(args)
        result = ExperimentRunner(config).run()
    except ConfigError as e:
        print(f"qinvert {args.command}: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except QInvertError as e:
        if args.verbose:
            logger.exception("%s failed", args.command)
        print(f"qinvert {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE
    print(result.summary, end="")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
