"""
measures: closed-form tables of the jump measure nu and Monte Carlo
moments of the harmonic measure.
"""

import argparse
import logging
import math
import sys

import numpy as np
from scipy import integrate

from ..schemas.measures import Axis, BoundaryPoint, JumpMark, TruncationWindow
from ..services.duality import QUADRANT_TEST_POINTS
from ..services.measures import (
    FOUR_OVER_PI,
    harmonic_pth_moment,
    jump_tail_bound_check,
    nu_axis2_second_moment_bound,
    nu_density,
    nu_mean_axis2,
    nu_pv_mean_axis1,
    nu_pv_mean_axis1_closed_form,
    nu_restricted_mean_axis1,
    nu_tail_bounds,
    nu_truncated_second_moment,
    nu_window_second_moment,
    quadrature_interval_mass,
)
from ..services.replicas import block_rng
from ..storage import config_from_mapping
from ..storage.artifact_store import TableWriter
from .common import RunContext, manifest_on_error

logger = logging.getLogger(__name__)

EPS_GRID = (0.1, 0.5, 1.0, 2.0, 10.0)
DELTA_GRID = (0.01, 0.1, 0.5, 0.9)
P_GRID = (1.1, 1.5, 1.9)
HARMONIC_STREAM = 5


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "measures",
        help="tabulate nu and harmonic-measure quantities",
        description="Writes one table as CSV to the output directory and to stdout.",
    )
    parser.add_argument("--table", required=True, choices=sorted(TABLES))
    parser.add_argument(
        "--samples", type=int, default=100_000, help="harmonic draws per point (harmonic-moments)"
    )
    parser.set_defaults(handler=handle)


def nu_moment_rows(args=None, ctx=None) -> list[dict]:
    """Closed forms next to their quadrature (or exact) counterparts."""
    rows = []

    def add(quantity, x, closed_form, check):
        rows.append({"quantity": quantity, "x": x, "closed_form": closed_form, "check": check})

    for eps in EPS_GRID:
        axis2_tail, _, axis1_complement, _ = nu_tail_bounds(eps)
        add("axis2_tail", eps, axis2_tail, quadrature_interval_mass(Axis.AXIS2, eps, math.inf))
        check = quadrature_interval_mass(Axis.AXIS1, 1.0 + eps, math.inf)
        if eps < 1.0:
            check += quadrature_interval_mass(Axis.AXIS1, 0.0, 1.0 - eps)
        add("axis1_complement", eps, axis1_complement, check)
        # (y1 - 1)^2 cancels the pole of the Axis1 density
        add(
            "axis1_second_moment", eps, nu_truncated_second_moment(Axis.AXIS1, eps),
            integrate.quad(lambda y: FOUR_OVER_PI * y / (1.0 + y) ** 2, 0.0, eps)[0],
        )
        add(
            "axis2_second_moment", eps, nu_truncated_second_moment(Axis.AXIS2, eps),
            integrate.quad(lambda y: FOUR_OVER_PI * y ** 3 / (1.0 + y * y) ** 2, 0.0, eps)[0],
        )
    add("axis2_mean", math.inf, 1.0, nu_mean_axis2(cross_check=True))
    for delta in DELTA_GRID:
        window = TruncationWindow(delta=delta)
        add("axis1_pv_mean", delta, nu_pv_mean_axis1_closed_form(delta), nu_pv_mean_axis1(window))
        restricted = nu_restricted_mean_axis1(window)
        add("axis1_restricted_mean", delta, restricted, 2.0 / math.pi - nu_pv_mean_axis1(window))
    return rows


def nu_density_rows(args=None, ctx=None) -> list[dict]:
    rows = []
    for y in np.round(np.linspace(0.05, 3.0, 60), 10):
        for axis in (Axis.AXIS1, Axis.AXIS2):
            if axis == Axis.AXIS1 and y == 1.0:
                continue
            mark = JumpMark(axis=axis, value=float(y))
            rows.append({"axis": axis.value, "y": float(y), "density": nu_density(mark)})
    return rows


def nu_bound_rows(args=None, ctx=None) -> list[dict]:
    rows = []
    for eps in EPS_GRID:
        axis2_tail, axis2_bound, axis1_complement, axis1_bound = nu_tail_bounds(eps)
        rows.append({"quantity": "axis2_tail", "x": eps, "value": axis2_tail, "bound": axis2_bound})
        rows.append({"quantity": "axis1_complement", "x": eps, "value": axis1_complement, "bound": axis1_bound})
    for delta in DELTA_GRID:
        value, bound = nu_window_second_moment(delta)
        rows.append({"quantity": "window_second_moment", "x": delta, "value": value, "bound": bound})
    for x in (2.0, 10.0, 100.0):
        value, bound = nu_axis2_second_moment_bound(x)
        rows.append({"quantity": "axis2_second_moment", "x": x, "value": value, "bound": bound})
    for point in (BoundaryPoint.type1(1.0), BoundaryPoint.type2(2.0)):
        for L in (0.5, 1.0, 2.0, 10.0):
            mass, bound = jump_tail_bound_check(L, point)
            rows.append({
                "quantity": f"jump_tail_{point.kind.value}_{point.magnitude:g}",
                "x": L, "value": mass, "bound": bound,
            })
    return rows


def harmonic_moment_rows(args, ctx: RunContext) -> list[dict]:
    rows = []
    key = 0
    for p in P_GRID:
        for x in QUADRANT_TEST_POINTS:
            for i in (1, 2):
                key += 1
                rng = block_rng(ctx.effective_seed(ctx.config), key, stream=HARMONIC_STREAM)
                moment = harmonic_pth_moment(x, p, i, args.samples, rng)
                rows.append({
                    "p": p, "x1": x.x1, "x2": x.x2, "i": i,
                    "estimate": moment.estimate, "se": moment.standard_error,
                    "bound": moment.bound, "sharp_bound": moment.sharp_bound,
                })
    return rows


TABLES = {
    "nu-moments": nu_moment_rows,
    "nu-density": nu_density_rows,
    "nu-bounds": nu_bound_rows,
    "harmonic-moments": harmonic_moment_rows,
}


def handle(args: argparse.Namespace, ctx: RunContext) -> int:
    config = ctx.config or config_from_mapping({
        "run": {"master_seed": ctx.effective_seed()},
        "output": {"out_dir": str(ctx.out_dir)},
    })
    store = ctx.store(config)
    with manifest_on_error(store):
        rows = TABLES[args.table](args, ctx)
        store.write_rows(args.table.replace("-", "_"), rows)
    columns: list[str] = []
    for row in rows:
        columns.extend(k for k in row if k not in columns)
    TableWriter(sys.stdout, columns).write_many(rows)
    return 0
