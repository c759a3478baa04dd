"""
Entry point for the robust bond pricer.

Reads one YAML run configuration, runs its command and writes the result table. Exit status is
0 when every emitted pass flag is true, 1 when one is false and 2 when the run itself fails.
"""

import argparse
import logging
import sys
from typing import List, Optional

from robust_bond_pricer.log import init_logger_config, resolve_log_level
from robust_bond_pricer.model import ConfigError, OutputFormat, RunConfig
from robust_bond_pricer.report import render_table
from robust_bond_pricer.runner import RunError, run

logger = logging.getLogger(__name__)

EXIT_FAILURE: int = 2


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        prog="robust-bond-pricer",
        description="Robust pricing of defaultable zero-coupon bonds when the default intensity is ambiguous",
    )

    parser.add_argument("--config", dest="config_file", required=True, help="Path to the YAML run configuration")

    # Output overrides
    parser.add_argument("--out", help="Output file path (default: output.path of the configuration, else stdout)")
    parser.add_argument(
        "--format",
        dest="output_format",
        choices=[output_format.value for output_format in OutputFormat],
        help="Output format (default: output.format of the configuration)",
    )
    parser.add_argument("--seed", type=int, help="Master seed, overrides the configuration seed")

    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--quiet", action="store_true", help="Only log warnings and errors")
    verbosity.add_argument("--verbose", action="store_true", help="Log debug details")

    return parser.parse_args(argv)


def run_pricer(args: argparse.Namespace) -> int:
    """Load the configuration, run it and return the exit status."""
    try:
        config = RunConfig.from_config_file(args.config_file).with_overrides(
            out=args.out, output_format=args.output_format, seed=args.seed
        )
        outcome = run(config)
        if config.output.path is None:
            sys.stdout.write(render_table(outcome.rows, config.output.format))
        return outcome.exit_status

    except FileNotFoundError as e:
        logger.error(f"Configuration file missing: {e}")
    except ConfigError as e:
        logger.error(f"Configuration rejected: {e}")
    except RunError as e:
        logger.error(f"Run failed in {e.operation}: {e.cause}", exc_info=True)
    except (OSError, ValueError) as e:
        logger.error(f"Error running robust bond pricer: {str(e)}", exc_info=True)
    return EXIT_FAILURE


def main(argv: Optional[List[str]] = None) -> None:
    """Main entry point for the robust bond pricer."""
    args = parse_args(argv)
    init_logger_config(level=resolve_log_level(quiet=args.quiet, verbose=args.verbose))
    sys.exit(run_pricer(args))


if __name__ == "__main__":
    main()
