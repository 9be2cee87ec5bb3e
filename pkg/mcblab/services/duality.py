"""
Duality Toolkit

The lozenge product, F = exp(lozenge), the harmonicity of F(., y) for
y on E, the approximate duality relation for the mean-field system and
the iterated transforms G_k of the stationary Y^theta process.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from ..errors import ParameterError, PreconditionError
from ..schemas.duality import ComplexValue
from ..schemas.dynamics import SimParams, SystemState
from ..schemas.measures import BoundaryPoint, QuadrantPoint
from .dynamics import MeanFieldSimulator, simulate_batch
from .measures import harmonic_sample_array
from .reference import stationary_paths
from .statistics import combined_se, complex_mean_and_se

logger = logging.getLogger(__name__)

Point = Union[QuadrantPoint, BoundaryPoint]

BOUNDARY_TEST_POINTS: tuple[BoundaryPoint, ...] = tuple(
    point
    for m in (0.25, 1.0, 4.0)
    for point in (BoundaryPoint.type1(m), BoundaryPoint.type2(m))
)
QUADRANT_TEST_POINTS: tuple[QuadrantPoint, ...] = (
    QuadrantPoint(x1=1.0, x2=0.0),
    QuadrantPoint(x1=0.0, x2=1.0),
    QuadrantPoint(x1=1.0, x2=1.0),
    QuadrantPoint(x1=0.5, x2=2.0),
)


def _xy(point) -> np.ndarray:
    if isinstance(point, BoundaryPoint):
        return np.array(point.coords)
    if isinstance(point, QuadrantPoint):
        return np.array(point.as_tuple())
    return np.asarray(point, dtype=float)


# ---------------------------------------------------------------------------
# Lozenge product and F
# ---------------------------------------------------------------------------

def lozenge_array(x, y) -> np.ndarray:
    """-(x1 + x2)(y1 + y2) + i (x1 - x2)(y1 - y2), broadcast over (..., 2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    re = -(x[..., 0] + x[..., 1]) * (y[..., 0] + y[..., 1])
    im = (x[..., 0] - x[..., 1]) * (y[..., 0] - y[..., 1])
    return re + 1j * im


def F_array(x, y) -> np.ndarray:
    """exp(x lozenge y); large negative real parts underflow to 0."""
    with np.errstate(under="ignore"):
        return np.exp(lozenge_array(x, y))


def lozenge(x: Point, y: Point) -> ComplexValue:
    return ComplexValue.from_complex(complex(lozenge_array(_xy(x), _xy(y))))


def F(x: Point, y: Point) -> ComplexValue:
    return ComplexValue.from_complex(complex(F_array(_xy(x), _xy(y))))


@dataclass(frozen=True)
class ComplexEstimate:
    """Monte Carlo estimate of a complex quantity with the SE of its modulus."""

    estimate: complex
    standard_error: float
    n: int

    @property
    def value(self) -> ComplexValue:
        return ComplexValue.from_complex(self.estimate)

    @property
    def modulus(self) -> float:
        return abs(self.estimate)

    def within(self, k: float = 3.0) -> bool:
        return self.modulus <= k * self.standard_error


def _estimate(samples) -> ComplexEstimate:
    mean, se = complex_mean_and_se(samples)
    return ComplexEstimate(estimate=mean, standard_error=se, n=int(np.size(samples)))


# ---------------------------------------------------------------------------
# Harmonicity
# ---------------------------------------------------------------------------

def harmonicity_residual(
    theta: QuadrantPoint, y: Point, n_samples: int, rng: np.random.Generator
) -> ComplexEstimate:
    """Monte Carlo estimate of int Q_theta(dx) F(x, y) - F(theta, y) for y on E."""
    yy = _xy(y)
    if yy[0] > 0.0 and yy[1] > 0.0:
        raise PreconditionError("F(., y) is harmonic only for y on the boundary E")
    if theta.on_boundary:
        return ComplexEstimate(estimate=0j, standard_error=0.0, n=n_samples)
    th = np.array(theta.as_tuple())
    draws = harmonic_sample_array(np.broadcast_to(th, (n_samples, 2)), rng)
    return _estimate(F_array(draws, yy) - complex(F_array(th, yy)))


def transform_separation(
    points_a: np.ndarray, points_b: np.ndarray, test_points: Sequence[Point] = BOUNDARY_TEST_POINTS
) -> tuple[float, Point]:
    """Largest |difference| / SE of the F-transforms of two samples over the test points."""
    best, best_point = 0.0, test_points[0]
    for point in test_points:
        yy = _xy(point)
        mean_a, se_a = complex_mean_and_se(F_array(points_a, yy))
        mean_b, se_b = complex_mean_and_se(F_array(points_b, yy))
        se = combined_se(se_a, se_b)
        gap = abs(mean_a - mean_b)
        if se > 0.0:
            ratio = gap / se
        else:
            ratio = math.inf if gap > 0.0 else 0.0
        if ratio > best:
            best, best_point = ratio, point
    return best, best_point


# ---------------------------------------------------------------------------
# Approximate duality for the mean-field system
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DualityResidual:
    """The three sides of the approximate duality relation and its residual."""

    lhs: ComplexEstimate
    rhs_main: ComplexEstimate
    rhs_remainder: ComplexEstimate
    residual: ComplexEstimate
    remainder_bound: float

    @property
    def balanced(self) -> bool:
        return self.residual.within(3.0)


def duality_residual_samples(
    coords: np.ndarray,
    params: SimParams,
    s: float,
    theta: Optional[QuadrantPoint],
    marks: Sequence[tuple[int, Point]],
    rng: np.random.Generator,
) -> dict[str, np.ndarray]:
    """Per-replica pieces of the duality relation started from states at time t.

    `coords` has shape (B, N, 2). With theta None each replica uses its own
    total mass at time t. The remainder is the step-wise compensator
    sum_n M(r_n) (exp((1 - e^{-h}) e^{r_{n+1} - s} (Z_{r_n} - theta) <> sum y) - 1)
    of M(r) = prod_j F(X_r(k_j), e^{r-s} y(j)) F(theta, (1 - e^{r-s}) y(j)),
    which tends to the time integral as h -> 0.
    """
    if s < 0.0:
        raise ParameterError(f"s must be nonnegative, got {s}")
    sites = [k for k, _ in marks]
    if len(set(sites)) != len(sites):
        raise ParameterError("duality marks must sit on distinct sites")
    ys = np.array([_xy(y) for _, y in marks])          # (n, 2)
    y_sum = ys.sum(axis=0)

    x = np.array(coords, dtype=float)
    z = x.mean(axis=1)                                   # (B, 2)
    th = z.copy() if theta is None else np.broadcast_to(_xy(theta), z.shape).copy()

    def m_value(x_now, r):
        w = math.exp(r - s)
        sel = x_now[:, sites, :]                         # (B, n, 2)
        return np.prod(
            F_array(sel, w * ys) * F_array(th[:, None, :], (1.0 - w) * ys), axis=1
        )

    main = m_value(x, 0.0)
    remainder = np.zeros(x.shape[0], dtype=complex)
    # running sup over time of |Z_r - theta|, per replica
    sup_dev = np.linalg.norm(z - th, axis=1)

    simulator = MeanFieldSimulator(params)
    n_steps = max(1, int(math.ceil(s / params.h - 1e-9))) if s > 0 else 0
    r = 0.0
    for step in range(1, n_steps + 1):
        r_next = s if step == n_steps else step * params.h
        h = r_next - r
        exponent = (1.0 - math.exp(-h)) * math.exp(r_next - s) * lozenge_array(z - th, y_sum)
        with np.errstate(under="ignore"):
            remainder += m_value(x, r) * np.expm1(exponent)
        x = simulator.step(x, z, h, rng, clock=r)
        z = x.mean(axis=1)
        np.maximum(sup_dev, np.linalg.norm(z - th, axis=1), out=sup_dev)
        r = r_next

    lhs = np.prod(F_array(x[:, sites, :], ys), axis=1)
    return {"lhs": lhs, "main": main, "remainder": remainder, "sup_dev": sup_dev}


def summarize_duality(pieces: dict[str, np.ndarray], s: float, y_sum_norm: float) -> DualityResidual:
    """Aggregate per-replica pieces (possibly concatenated over blocks)."""
    residual = pieces["lhs"] - pieces["main"] - pieces["remainder"]
    sup_dev = float(np.mean(pieces["sup_dev"]))
    # |x <> y| <= 2 |x| |y| and the time weights integrate to 1 - e^{-s}
    # mean of per-replica sups estimates E sup_r |Z_r - theta|
    bound = 2.0 * y_sum_norm * (1.0 - math.exp(-s)) * sup_dev
    return DualityResidual(
        lhs=_estimate(pieces["lhs"]),
        rhs_main=_estimate(pieces["main"]),
        rhs_remainder=_estimate(pieces["remainder"]),
        residual=_estimate(residual),
        remainder_bound=bound,
    )


def duality_residual(
    config: SystemState,
    t: float,
    s: float,
    theta: Optional[QuadrantPoint],
    marks: Sequence[tuple[int, Point]],
    params: SimParams,
    n_replicas: int,
    rng: np.random.Generator,
) -> DualityResidual:
    """Both sides of the approximate duality relation on shared replicas."""
    if t < 0.0:
        raise ParameterError(f"t must be nonnegative, got {t}")
    for k, _ in marks:
        if not 0 <= k < config.n_sites:
            raise ParameterError(f"site {k} outside 0..{config.n_sites - 1}")
    warm = params.model_copy(update={"horizon": t})
    start = simulate_batch(config, warm, rng, n_replicas=n_replicas).final_coords
    pieces = duality_residual_samples(start, params, s, theta, marks, rng)
    y_sum = np.array([_xy(y) for _, y in marks]).sum(axis=0)
    result = summarize_duality(pieces, s, float(np.linalg.norm(y_sum)))
    logger.info(
        "duality residual |%.3g| vs SE %.3g over %d replicas",
        result.residual.modulus, result.residual.standard_error, n_replicas,
    )
    return result


# ---------------------------------------------------------------------------
# G_k transforms of Y^theta
# ---------------------------------------------------------------------------

def _g_k_samples(theta, z_list, s_grid, n_samples, rng) -> np.ndarray:
    th = _xy(theta)
    zs = [np.broadcast_to(_xy(z), (n_samples, 2)).astype(float) for z in z_list]
    s_grid = list(s_grid)
    weight = np.ones(n_samples, dtype=complex)
    for k in range(len(zs) - 1, 0, -1):
        a = math.exp(s_grid[k - 1] - s_grid[k])
        w = harmonic_sample_array(zs[k], rng)
        weight *= F_array(th, (1.0 - a) * w)
        zs[k - 1] = zs[k - 1] + a * w
    w = harmonic_sample_array(zs[0], rng)
    return weight * F_array(th, w)


def g_k_evaluate(
    theta: QuadrantPoint,
    z_list: Sequence[Point],
    s_grid: Sequence[float],
    n_samples: int,
    rng: np.random.Generator,
) -> ComplexEstimate:
    """Nested Monte Carlo of the iterated transform G_k, one harmonic draw per level."""
    if len(z_list) != len(s_grid) or not z_list:
        raise ParameterError("z_list and s_grid must be nonempty and of equal length")
    if any(b <= a for a, b in zip(s_grid, list(s_grid)[1:])):
        raise ParameterError("s_grid must be increasing")
    return _estimate(_g_k_samples(theta, z_list, s_grid, n_samples, rng))


def g2_closed_form(
    theta: QuadrantPoint,
    y1: Point,
    y2: Point,
    s1: float,
    s2: float,
    n_samples: int = 0,
    rng: Optional[np.random.Generator] = None,
) -> ComplexEstimate:
    """F(theta, (1 - a) y2) int Q_{y1 + a y2}(dz) F(theta, z) with a = e^{s1 - s2}.

    The remaining integral is exact when theta lies on E or y1 + a y2 does;
    otherwise it is a single-level Monte Carlo average.
    """
    if s2 <= s1:
        raise ParameterError("need s1 < s2")
    th = _xy(theta)
    a = math.exp(s1 - s2)
    start = _xy(y1) + a * _xy(y2)
    prefactor = complex(F_array(th, (1.0 - a) * _xy(y2)))
    if (th[0] == 0.0 or th[1] == 0.0) or (start[0] == 0.0 or start[1] == 0.0):
        return ComplexEstimate(
            estimate=prefactor * complex(F_array(th, start)), standard_error=0.0, n=0
        )
    if rng is None or n_samples < 2:
        raise ParameterError("an interior start needs n_samples >= 2 and an rng")
    w = harmonic_sample_array(np.broadcast_to(start, (n_samples, 2)), rng)
    return _estimate(prefactor * F_array(th, w))


def stationary_fdd_check(
    theta: QuadrantPoint,
    s_grid: Sequence[float],
    z_list: Sequence[Point],
    n_samples: int,
    rng: np.random.Generator,
) -> tuple[ComplexEstimate, ComplexEstimate, ComplexEstimate]:
    """Product-F expectation along stationary paths against G_m.

    Returns (path_side, transform_side, residual) with the residual SE
    combining both sides.
    """
    paths = stationary_paths(theta, s_grid, n_samples, rng)           # (n, m, 2)
    zs = np.array([_xy(z) for z in z_list])
    path_side = _estimate(np.prod(F_array(paths, zs[None, :, :]), axis=1))
    transform_side = g_k_evaluate(theta, z_list, s_grid, n_samples, rng)
    residual = ComplexEstimate(
        estimate=path_side.estimate - transform_side.estimate,
        standard_error=combined_se(path_side.standard_error, transform_side.standard_error),
        n=n_samples,
    )
    return path_side, transform_side, residual
