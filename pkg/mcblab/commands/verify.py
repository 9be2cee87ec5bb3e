"""
verify: the acceptance battery, printed as a pass/fail checklist.
"""

import argparse
import logging
import sys

from ..schemas.experiment import ExperimentConfig, SuiteName
from ..services.plots import TABLE_PLOTS
from ..services.suites import ACCEPTANCE_ITEMS, SuiteResult, acceptance_battery
from ..storage import ArtifactStore, config_from_mapping
from .common import RunContext, manifest_on_error, parse_items

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "verify",
        help="run the acceptance battery",
        description="Runs the numbered acceptance items and prints a checklist.",
    )
    parser.add_argument(
        "--only", type=parse_items, default=None, metavar="ITEM[,ITEM]",
        help="acceptance item numbers to run (default: all)",
    )
    # must not reset a global --quick
    parser.add_argument(
        "--quick", action="store_true", default=argparse.SUPPRESS, help="reduced sizes"
    )
    parser.set_defaults(handler=handle)


def write_suite(store: ArtifactStore, result: SuiteResult, plots: bool = True) -> None:
    """Reports, tables, summary and trend plots of one harness."""
    store.write_reports(f"{result.name}_reports", result.reports)
    for table, rows in result.tables.items():
        store.write_rows(table, rows)
        if plots and table in TABLE_PLOTS and rows:
            TABLE_PLOTS[table](rows, store.out_dir / f"{table}.svg")
    store.write_summary(result.name, result.reports)


def print_checklist(results: dict[int, SuiteResult], out=sys.stdout) -> None:
    for item, result in sorted(results.items()):
        mark = "PASS" if result.passed else "FAIL"
        print(f"[{mark}] {item:2d}. {ACCEPTANCE_ITEMS[item]}", file=out)
        for report in result.reports:
            if not report.passed:
                print(
                    f"         {report.name}: {report.statistic!r} > {report.threshold!r}",
                    file=out,
                )


def battery_config(ctx: RunContext) -> ExperimentConfig:
    if ctx.config is not None:
        return ctx.config
    return config_from_mapping({
        "run": {"master_seed": ctx.effective_seed(), "block_size": ctx.settings.block_size},
        "suite": {"name": SuiteName.ACCEPTANCE.value, "quick": ctx.quick},
        "output": {"out_dir": str(ctx.out_dir)},
    })


def run_battery(ctx: RunContext, config: ExperimentConfig, items=None) -> int:
    quick = ctx.quick or config.suite.quick
    store = ctx.store(config)
    with manifest_on_error(store):
        results = acceptance_battery(
            items=items,
            quick=quick,
            runner=ctx.runner(config),
            on_item=lambda item, result: write_suite(store, result, config.output.plots),
        )
    print_checklist(results)
    return 0 if all(r.passed for r in results.values()) else 1


def handle(args: argparse.Namespace, ctx: RunContext) -> int:
    return run_battery(ctx, battery_config(ctx), items=args.only)
