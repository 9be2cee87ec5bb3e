"""
reference: the comparison processes MCB(gamma), the limit diffusion and Y^theta.
"""

import argparse
import logging
import math

import numpy as np

from ..errors import ConfigError
from ..schemas.dynamics import BatchPath
from ..schemas.experiment import ExperimentConfig, ProcessKind
from ..services.plots import plot_totals
from ..services.reference import (
    interior_fraction,
    limit_diffusion_batch,
    mcb_gamma_batch,
    stationary_paths,
)
from ..storage import ArtifactStore
from ..storage.artifact_store import path_rows
from .common import RunContext, initial_coords, model_horizon, parse_point
from .simulate import add_run_flags, config_from_args, run_experiment

logger = logging.getLogger(__name__)

REFERENCE_PROCESSES = (ProcessKind.MCB_GAMMA, ProcessKind.LIMIT_DIFFUSION, ProcessKind.Y_THETA)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "reference",
        help="simulate a reference process",
        description="Simulates MCB(gamma), the limit diffusion or the stationary Y^theta.",
    )
    parser.add_argument(
        "--process", required=True, choices=[p.value for p in REFERENCE_PROCESSES],
    )
    add_run_flags(parser)
    parser.add_argument("--gamma", type=float, help="branching rate (mcb_gamma)")
    parser.add_argument(
        "--theta", type=parse_point, metavar="x1:x2",
        help="reversion target of Y^theta; harmonic initial sites otherwise",
    )
    parser.set_defaults(handler=handle)


def _y_theta_block(config: ExperimentConfig, horizon: float):
    if config.initial.theta is None:
        raise ConfigError("y_theta needs a target point", field_path="initial.theta")
    steps = max(1, math.ceil(horizon / config.run.h - 1e-9)) if horizon > 0 else 0
    times = np.linspace(0.0, horizon, steps + 1)

    def block(b, rng):
        paths = stationary_paths(config.initial.theta, times, b.size, rng)
        return BatchPath(times=times, totals=paths, n_sites=1, first_replica=b.first)

    return block


def run_reference(config: ExperimentConfig, ctx: RunContext, store: ArtifactStore) -> int:
    run = config.run
    horizon = model_horizon(config)
    if run.process == ProcessKind.Y_THETA:
        block = _y_theta_block(config, horizon)
    elif run.process == ProcessKind.MCB_GAMMA:
        def block(b, rng):
            coords = initial_coords(config, b.size, rng)
            return mcb_gamma_batch(
                coords, run.gamma, run.h, horizon, rng,
                record_every=run.record_every, first_replica=b.first,
            )
    else:
        def block(b, rng):
            z0 = initial_coords(config, b.size, rng).mean(axis=1)
            return limit_diffusion_batch(
                z0, run.h, horizon, rng, record_every=run.record_every, first_replica=b.first
            )

    batch = ctx.runner(config).run_batches(block, run.replicas)
    store.write_batch(batch)
    if config.output.plots:
        plot_totals(list(path_rows(batch)), store.out_dir / "paths.svg")
    z = batch.totals[:, -1, :].mean(axis=0)
    line = f"{run.process.value}: replicas={batch.n_replicas} mean final=({z[0]!r}, {z[1]!r})"
    if batch.final_coords is not None:
        line += f" interior fraction={interior_fraction(batch.final_coords)!r}"
    print(line)
    return 0


def handle(args: argparse.Namespace, ctx: RunContext) -> int:
    process = ProcessKind(args.process)
    config = config_from_args(args, ctx, process)
    if config.run.process not in REFERENCE_PROCESSES:
        raise ConfigError(
            f"reference cannot run {config.run.process.value}", field_path="run.process"
        )
    return run_experiment(config, ctx)
