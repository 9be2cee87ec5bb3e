"""
simulate: MCB(inf) runs (and, given a config with a suite, the theorem harnesses).
"""

import argparse
import logging

from ..schemas.dynamics import RecordMode, Scheme, SimParams
from ..schemas.experiment import ExperimentConfig, ProcessKind, SuiteName
from ..schemas.measures import TruncationWindow
from ..services.duality import QUADRANT_TEST_POINTS
from ..services.dynamics import simulate_batch
from ..services.plots import plot_totals
from ..services.suites import theorem0_suite, theorem1_suite, theorem2_suite
from ..storage import ArtifactStore, config_from_mapping, merge_overrides
from ..storage.artifact_store import path_rows
from .common import RunContext, initial_coords, manifest_on_error, model_horizon

logger = logging.getLogger(__name__)


def add_run_flags(parser: argparse.ArgumentParser) -> None:
    """Inline flags mirroring the [run] and [initial] config sections."""
    parser.add_argument("--n-sites", type=int, dest="n_sites")
    parser.add_argument("--h", type=float)
    parser.add_argument("--horizon", type=float)
    parser.add_argument(
        "--rescaled", action="store_const", const="rescaled", dest="horizon_unit",
        help="read --horizon in units of N / log N",
    )
    parser.add_argument("--replicas", type=int)
    parser.add_argument("--record-every", type=int, dest="record_every")
    parser.add_argument("--magnitude", type=float, help="site magnitude of the half/half start")


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "simulate",
        help="simulate the mean-field MCB(inf) system",
        description="Simulates MCB(inf); a --config with a [suite] runs that harness instead.",
    )
    add_run_flags(parser)
    parser.add_argument("--scheme", choices=[s.value for s in Scheme])
    parser.add_argument("--delta", type=float, help="truncation half-width (tau_leap only)")
    parser.add_argument("--record-mode", choices=[m.value for m in RecordMode], dest="record_mode")
    parser.set_defaults(handler=handle)


RUN_KEYS = ("n_sites", "h", "horizon", "horizon_unit", "replicas", "record_every",
            "scheme", "delta", "record_mode", "gamma")


def config_from_args(args: argparse.Namespace, ctx: RunContext, process: ProcessKind) -> ExperimentConfig:
    """Inline flags as a config, or as overrides on top of --config."""
    run = {key: getattr(args, key, None) for key in RUN_KEYS}
    initial = {}
    if getattr(args, "magnitude", None) is not None:
        initial["magnitude"] = args.magnitude
    if getattr(args, "theta", None) is not None:
        initial["kind"] = "harmonic"
        initial["theta"] = {"x1": args.theta[0], "x2": args.theta[1]}
    if ctx.config is not None:
        return merge_overrides(ctx.config, {"run": run, "initial": initial})
    run["process"] = process.value
    run["master_seed"] = ctx.effective_seed()
    run["block_size"] = ctx.settings.block_size
    if process == ProcessKind.MCB_INFINITY and run["scheme"] == Scheme.TAU_LEAP.value and run["delta"] is None:
        run["delta"] = ctx.settings.delta
    if run["h"] is None:
        run["h"] = ctx.settings.step_size if process == ProcessKind.MCB_INFINITY else ctx.settings.reference_step_size
    data = {
        "run": {k: v for k, v in run.items() if v is not None},
        "initial": initial,
        "output": {"out_dir": str(ctx.out_dir)},
    }
    if ctx.quick:
        data["suite"] = {"quick": True}
    return config_from_mapping(data)


def sim_params(config: ExperimentConfig, ctx: RunContext) -> SimParams:
    run = config.run
    return SimParams(
        scheme=run.scheme or Scheme.HARMONIC_SPLIT,
        h=run.h,
        window=TruncationWindow(delta=run.delta or ctx.settings.delta),
        horizon=model_horizon(config),
        seed=ctx.effective_seed(config),
        record_mode=run.record_mode,
        record_every=run.record_every,
        recompute_period=ctx.settings.recompute_period,
    )


def run_mcb(config: ExperimentConfig, ctx: RunContext, store: ArtifactStore) -> int:
    params = sim_params(config, ctx)
    runner = ctx.runner(config)

    def block(b, rng):
        coords = initial_coords(config, b.size, rng)
        return simulate_batch(coords, params, rng, first_replica=b.first)

    batch = runner.run_batches(block, config.run.replicas)
    store.write_batch(batch)
    if config.output.plots:
        plot_totals(list(path_rows(batch)), store.out_dir / "paths.svg")
    z = batch.totals[:, -1, :].mean(axis=0)
    print(f"replicas={batch.n_replicas} N={batch.n_sites} mean final z=({z[0]!r}, {z[1]!r})")
    return 0


def run_suite(config: ExperimentConfig, ctx: RunContext, store: ArtifactStore) -> int:
    from .verify import run_battery, write_suite

    suite, run = config.suite, config.run
    seed = ctx.effective_seed(config)
    runner = ctx.runner(config)
    if suite.name == SuiteName.ACCEPTANCE:
        return run_battery(ctx, config)
    if suite.name == SuiteName.THEOREM0:
        result = theorem0_suite(suite.gamma_grid, run.n_sites, suite.t, run.replicas, seed, runner)
    elif suite.name == SuiteName.THEOREM1:
        result = theorem1_suite(suite.n_grid, suite.t, run.replicas, seed, runner)
    else:
        result = theorem2_suite(suite.n_grid, suite.t, QUADRANT_TEST_POINTS, run.replicas, seed, runner)
    write_suite(store, result, config.output.plots)
    for report in result.reports:
        print(f"{report.verdict.value:4s} {report.name} {report.statistic!r} <= {report.threshold!r}")
    return 0 if result.passed else 1


def run_experiment(config: ExperimentConfig, ctx: RunContext) -> int:
    """Execute whatever the config asks for and write its artifacts."""
    store = ctx.store(config)
    logger.info(
        "run %s: process=%s suite=%s seed=%d",
        config.config_hash(), config.run.process.value, config.suite.name.value,
        ctx.effective_seed(config),
    )
    with manifest_on_error(store):
        if config.suite.name != SuiteName.NONE:
            return run_suite(config, ctx, store)
        if config.run.process == ProcessKind.MCB_INFINITY:
            return run_mcb(config, ctx, store)
        from .reference import run_reference

        return run_reference(config, ctx, store)


def handle(args: argparse.Namespace, ctx: RunContext) -> int:
    return run_experiment(config_from_args(args, ctx, ProcessKind.MCB_INFINITY), ctx)
