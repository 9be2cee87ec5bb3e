"""
mcblab - mutually catalytic branching laboratory

Command-line entry point: global flags, logging and the mapping of
errors onto exit codes (0 pass, 1 failure, 2 usage or configuration).
"""

import argparse
import logging
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

from . import __version__
from .commands import COMMANDS
from .commands.common import build_context
from .config import get_settings
from .errors import ConfigError, MCBLabError, ParameterError

logger = logging.getLogger("mcblab")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcblab",
        description="Simulation and verification of mean-field mutually catalytic branching.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", metavar="PATH", help="experiment config file")
    parser.add_argument("--seed", type=int, help="master seed (overrides config and MCBLAB_SEED)")
    parser.add_argument("--workers", type=int, help="replica worker threads")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--quick", action="store_true", help="reduced sizes")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def configure_logging(level: str) -> None:
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(get_settings().log_level)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        parser.error("--seed must be an unsigned 64-bit integer")

    try:
        ctx = build_context(args)
        return args.handler(args, ctx)
    except (ConfigError, ParameterError, ValidationError) as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except MCBLabError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
