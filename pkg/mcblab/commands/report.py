"""
report: redraw plots and summarize verdicts from stored CSV tables.
"""

import argparse
import logging
from pathlib import Path

from ..errors import ConfigError
from ..services.plots import TABLE_PLOTS
from ..storage import read_table
from .common import RunContext

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "report",
        help="regenerate plots from stored CSV",
        description="Redraws every known plot from the CSV tables of a run directory.",
    )
    parser.add_argument("--from", dest="source", required=True, metavar="DIR")
    parser.set_defaults(handler=handle)


def redraw(source: Path) -> list[Path]:
    """SVG for every table in `source` that has a drawing function."""
    drawn = []
    for path in sorted(source.glob("*.csv")):
        draw = TABLE_PLOTS.get(path.stem)
        if draw is None:
            continue
        _, rows = read_table(path)
        if rows:
            drawn.append(draw(rows, path.with_suffix(".svg")))
    return drawn


def summarize_reports(source: Path) -> tuple[int, list[str]]:
    """(report count, names of failed reports) over every `*_reports.csv`."""
    total, failed = 0, []
    for path in sorted(source.glob("*_reports.csv")):
        _, rows = read_table(path)
        total += len(rows)
        failed.extend(row["name"] for row in rows if row["verdict"] != "pass")
    return total, failed


def handle(args: argparse.Namespace, ctx: RunContext) -> int:
    source = Path(args.source)
    if not source.is_dir():
        raise ConfigError(f"{source} is not a directory", field_path="from")
    drawn = redraw(source)
    total, failed = summarize_reports(source)
    for path in drawn:
        print(f"plot {path}")
    print(f"{total} reports, {len(failed)} failed")
    for name in failed:
        print(f"  FAIL {name}")
    return 1 if failed else 0
