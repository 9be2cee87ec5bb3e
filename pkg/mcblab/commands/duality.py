"""
duality: harmonicity of F, the approximate duality residual, and the G_k
transforms of Y^theta.
"""

import argparse
import logging
from typing import Optional

import numpy as np

from ..schemas.analysis import TestReport
from ..schemas.dynamics import SimParams, SystemState
from ..schemas.experiment import ExperimentConfig
from ..schemas.measures import BoundaryPoint, QuadrantPoint
from ..services.duality import (
    BOUNDARY_TEST_POINTS,
    QUADRANT_TEST_POINTS,
    ComplexEstimate,
    duality_residual_samples,
    g2_closed_form,
    g_k_evaluate,
    harmonicity_residual,
    stationary_fdd_check,
    summarize_duality,
)
from ..services.dynamics import simulate_batch
from ..services.replicas import block_rng
from ..services.statistics import combined_se
from ..storage import config_from_mapping
from .common import RunContext, manifest_on_error, parse_point

logger = logging.getLogger(__name__)

AUX_STREAM = 5
CHECKS = ("harmonicity", "residual", "g2", "fdd")


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "duality",
        help="duality-function checks",
        description="Monte Carlo checks of the F-transform identities.",
    )
    parser.add_argument("--check", required=True, choices=CHECKS)
    parser.add_argument("--samples", type=int, default=10_000, help="Monte Carlo samples or replicas")
    parser.add_argument("--theta", type=parse_point, metavar="x1:x2", default=None)
    parser.add_argument("--n-sites", type=int, dest="n_sites", default=10)
    parser.add_argument("--t", type=float, default=0.5, help="warm-up time before the residual window")
    parser.add_argument("--s", type=float, default=2.0, help="duality window or last time of the grid")
    parser.set_defaults(handler=handle)


def _theta(args) -> Optional[QuadrantPoint]:
    return None if args.theta is None else QuadrantPoint(x1=args.theta[0], x2=args.theta[1])


def _estimate_row(label: str, est: ComplexEstimate, **extra) -> dict:
    return {
        "quantity": label, **extra,
        "re": est.estimate.real, "im": est.estimate.imag, "se": est.standard_error, "n": est.n,
    }


def check_harmonicity(args, ctx: RunContext, config: ExperimentConfig):
    runner = ctx.runner(config)
    thetas = [_theta(args)] if args.theta is not None else list(QUADRANT_TEST_POINTS)
    rows, reports = [], []
    for j, theta in enumerate(thetas):
        for m, y in enumerate(BOUNDARY_TEST_POINTS):
            rng = block_rng(runner.master_seed, 10 * j + m, stream=AUX_STREAM)
            est = harmonicity_residual(theta, y, args.samples, rng)
            rows.append(_estimate_row(
                "harmonicity", est, theta_x1=theta.x1, theta_x2=theta.x2, y_x1=y.coords[0], y_x2=y.coords[1],
            ))
            reports.append(TestReport.judge(
                f"harmonicity_{j}_{m}", est.modulus, 3.0 * est.standard_error, n=args.samples,
            ))
    return rows, reports


def check_residual(args, ctx: RunContext, config: ExperimentConfig):
    runner = ctx.runner(config)
    n_sites = args.n_sites
    marks = [(0, BoundaryPoint.type1(1.0)), (n_sites - 1, BoundaryPoint.type2(1.0))]
    state = SystemState.half_half(n_sites)
    params = SimParams(h=ctx.settings.step_size, horizon=args.t, seed=runner.master_seed)
    theta = _theta(args)

    def block(b, rng):
        start = simulate_batch(state, params, rng, n_replicas=b.size).final_coords
        return duality_residual_samples(start, params, args.s, theta, marks, rng)

    parts = runner.map_blocks(block, args.samples)
    pieces = {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}
    y_sum = sum(np.array(y.coords) for _, y in marks)
    result = summarize_duality(pieces, args.s, float(np.linalg.norm(y_sum)))
    rows = [
        _estimate_row("lhs", result.lhs),
        _estimate_row("rhs_main", result.rhs_main),
        _estimate_row("rhs_remainder", result.rhs_remainder),
        _estimate_row("residual", result.residual),
    ]
    reports = [
        TestReport.judge(
            "duality_residual", result.residual.modulus, 3.0 * result.residual.standard_error,
            n=args.samples, remainder_bound=result.remainder_bound,
        ),
        TestReport.judge(
            "duality_remainder_bound", result.rhs_remainder.modulus,
            result.remainder_bound + 3.0 * result.rhs_remainder.standard_error, n=args.samples,
        ),
    ]
    return rows, reports


def check_g2(args, ctx: RunContext, config: ExperimentConfig):
    theta = _theta(args) or QuadrantPoint(x1=1.0, x2=1.0)
    y1, y2 = BoundaryPoint.type1(1.0), BoundaryPoint.type2(0.5)
    rng = block_rng(ctx.effective_seed(config), 0, stream=AUX_STREAM + 1)
    nested = g_k_evaluate(theta, [y1, y2], [0.0, args.s], args.samples, rng)
    closed = g2_closed_form(theta, y1, y2, 0.0, args.s, args.samples, rng)
    gap = abs(nested.estimate - closed.estimate)
    se = combined_se(nested.standard_error, closed.standard_error)
    rows = [_estimate_row("g2_nested", nested), _estimate_row("g2_closed_form", closed)]
    return rows, [TestReport.judge("g2_agreement", gap, 3.0 * se, n=args.samples)]


def check_fdd(args, ctx: RunContext, config: ExperimentConfig):
    theta = _theta(args) or QuadrantPoint(x1=1.0, x2=1.0)
    s_grid = [0.0, args.s / 2.0, args.s]
    z_list = list(BOUNDARY_TEST_POINTS[: len(s_grid)])
    rng = block_rng(ctx.effective_seed(config), 0, stream=AUX_STREAM + 2)
    path_side, transform_side, residual = stationary_fdd_check(
        theta, s_grid, z_list, args.samples, rng
    )
    rows = [
        _estimate_row("fdd_paths", path_side),
        _estimate_row("fdd_transform", transform_side),
        _estimate_row("fdd_residual", residual),
    ]
    report = TestReport.judge(
        "stationary_fdd", residual.modulus, 3.0 * residual.standard_error, n=args.samples,
    )
    return rows, [report]


CHECK_RUNNERS = {
    "harmonicity": check_harmonicity,
    "residual": check_residual,
    "g2": check_g2,
    "fdd": check_fdd,
}


def handle(args: argparse.Namespace, ctx: RunContext) -> int:
    config = ctx.config or config_from_mapping({
        "run": {"master_seed": ctx.effective_seed(), "n_sites": args.n_sites,
                "block_size": ctx.settings.block_size},
        "output": {"out_dir": str(ctx.out_dir)},
    })
    store = ctx.store(config)
    with manifest_on_error(store):
        rows, reports = CHECK_RUNNERS[args.check](args, ctx, config)
        store.write_rows(f"duality_{args.check}", rows)
        store.write_reports(f"duality_{args.check}_reports", reports)
    for report in reports:
        print(f"{report.verdict.value:4s} {report.name} {report.statistic!r} <= {report.threshold!r}")
    return 0 if all(r.passed for r in reports) else 1
