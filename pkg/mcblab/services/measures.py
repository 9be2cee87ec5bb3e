"""
Jump Measure and Harmonic Measure Service

Densities, closed-form masses and moments, exact samplers and bounds for
the jump measure nu on E and for the harmonic measure Q_x of planar
Brownian motion in the quadrant.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from ..config import get_settings
from ..errors import InfiniteMassError, ParameterError, PoleError
from ..schemas.measures import (
    Axis,
    BoundaryPoint,
    JumpMark,
    PointKind,
    QuadrantPoint,
    TruncationWindow,
)

logger = logging.getLogger(__name__)

TWO_OVER_PI = 2.0 / math.pi
FOUR_OVER_PI = 4.0 / math.pi
AXIS2_MASS = TWO_OVER_PI


# ---------------------------------------------------------------------------
# Densities and antiderivatives
# ---------------------------------------------------------------------------

def _axis1_density(y):
    return FOUR_OVER_PI * y / ((1.0 - y) ** 2 * (1.0 + y) ** 2)


def _axis2_density(y):
    return FOUR_OVER_PI * y / (1.0 + y * y) ** 2


def axis_density(axis: Axis) -> Callable:
    """Density of nu on one axis, vectorized over y."""
    return _axis1_density if axis == Axis.AXIS1 else _axis2_density


def nu_density(mark: JumpMark) -> float:
    """Lebesgue density of nu at a mark."""
    if mark.axis == Axis.AXIS1 and mark.value == 1.0:
        raise PoleError("nu has a non-integrable pole at y1 = 1")
    return float(axis_density(mark.axis)(mark.value))


def _axis1_antiderivative(y: float) -> float:
    # (2/pi) / (1 - y^2), valid separately on [0, 1) and (1, inf]
    if math.isinf(y):
        return 0.0
    return TWO_OVER_PI / (1.0 - y * y)


def _axis2_cdf(x: float) -> float:
    if math.isinf(x):
        return AXIS2_MASS
    return TWO_OVER_PI * x * x / (1.0 + x * x)


def nu_interval_mass(axis: Axis, a: float, b: float) -> float:
    """Exact nu-mass of the interval (a, b) on one axis; b may be infinite."""
    if not (0.0 <= a < b):
        raise ParameterError(f"need 0 <= a < b, got a={a}, b={b}")
    if axis == Axis.AXIS2:
        return _axis2_cdf(b) - _axis2_cdf(a)
    if a <= 1.0 <= b:
        raise InfiniteMassError(f"Axis1 interval ({a}, {b}) reaches the pole at 1")
    return _axis1_antiderivative(b) - _axis1_antiderivative(a)


def nu_axis1_complement_mass(eps: float) -> float:
    """Axis1 mass outside (1 - eps, 1 + eps)."""
    if eps <= 0.0:
        raise ParameterError(f"eps must be positive, got {eps}")
    upper = nu_interval_mass(Axis.AXIS1, 1.0 + eps, math.inf)
    if eps >= 1.0:
        return upper
    return nu_interval_mass(Axis.AXIS1, 0.0, 1.0 - eps) + upper


def nu_tail_bounds(eps: float) -> tuple[float, float, float, float]:
    """Tail masses of nu together with their power-law bounds.

    Returns (axis2_tail, axis2_bound, axis1_complement, axis1_bound) where
    axis2_tail is the mass of Axis2 values above eps and axis1_complement
    the Axis1 mass outside the eps-window around the pole.
    """
    if eps <= 0.0:
        raise ParameterError(f"eps must be positive, got {eps}")
    axis2_tail = nu_interval_mass(Axis.AXIS2, eps, math.inf)
    axis2_bound = TWO_OVER_PI * min(1.0, eps ** -2)
    axis1_complement = nu_axis1_complement_mass(eps)
    axis1_bound = TWO_OVER_PI * min(1.0 / eps, eps ** -2)
    return axis2_tail, axis2_bound, axis1_complement, axis1_bound


def restricted_masses(window: TruncationWindow) -> tuple[float, float, float]:
    """Masses of (0, 1-delta) and (1+delta, inf) on Axis1 and of Axis2."""
    delta = window.delta
    below = nu_interval_mass(Axis.AXIS1, 0.0, 1.0 - delta)
    above = nu_interval_mass(Axis.AXIS1, 1.0 + delta, math.inf)
    return below, above, AXIS2_MASS


def restricted_total_mass(window: TruncationWindow) -> float:
    return sum(restricted_masses(window))


# ---------------------------------------------------------------------------
# Moments
# ---------------------------------------------------------------------------

def nu_truncated_second_moment(axis: Axis, x: float) -> float:
    """Second moment of the jump multiplier over values in (0, x).

    Axis1 integrates (y1 - 1)^2, Axis2 integrates y2^2.
    """
    if x < 0.0:
        raise ParameterError(f"x must be nonnegative, got {x}")
    if x == 0.0:
        return 0.0
    if axis == Axis.AXIS1:
        return FOUR_OVER_PI * (math.log1p(x) - x / (1.0 + x))
    x2 = x * x
    return TWO_OVER_PI * (math.log1p(x2) - x2 / (1.0 + x2))


def nu_window_second_moment(delta: float) -> tuple[float, float]:
    """Second moment of (y1 - 1) inside the window, with its linear bound."""
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta must lie in (0, 1), got {delta}")
    value = FOUR_OVER_PI * (
        math.log((2.0 + delta) / (2.0 - delta)) - 2.0 * delta / (4.0 - delta * delta)
    )
    return value, TWO_OVER_PI * delta


def nu_axis2_second_moment_bound(x: float) -> tuple[float, float]:
    """Truncated Axis2 second moment and its logarithmic bound, x >= 2."""
    if x < 2.0:
        raise ParameterError(f"the logarithmic bound needs x >= 2, got {x}")
    return nu_truncated_second_moment(Axis.AXIS2, x), FOUR_OVER_PI * math.log(x)


def nu_mean_axis2(cross_check: bool = False) -> float:
    """First moment of nu on Axis2, which is exactly 1.

    With `cross_check` the value is recomputed by adaptive quadrature
    over (0, 1) and the inverted tail (1, inf).
    """
    if not cross_check:
        return 1.0

    def integrand(y):
        return y * _axis2_density(y)

    return _quad(integrand, 0.0, 1.0) + _tail_quad(integrand, 1.0)


def nu_pv_mean_axis1(window: TruncationWindow) -> float:
    """Principal value of the signed first moment of (y1 - 1) inside the window.

    Integrates (4/pi)[f(u) + f(-u)] with f(u) = (1 + u) / (u (2 + u)^2) over
    (0, delta); the odd parts cancel to (8/pi) u^2 / (4 - u^2)^2.
    """
    delta = window.delta
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta must lie in (0, 1), got {delta}")

    def symmetrized(u):
        return (2.0 * FOUR_OVER_PI) * u * u / (4.0 - u * u) ** 2

    return _quad(symmetrized, 0.0, delta)


def nu_pv_mean_axis1_closed_form(delta: float) -> float:
    return (
        4.0 * delta / (4.0 - delta * delta) - math.log((2.0 + delta) / (2.0 - delta))
    ) / math.pi


def nu_restricted_mean_axis1(window: TruncationWindow) -> float:
    """First moment of (y1 - 1) over Axis1 outside the window."""
    delta = window.delta
    return (
        math.log((2.0 + delta) / (2.0 - delta)) + 2.0 - 4.0 * delta / (4.0 - delta * delta)
    ) / math.pi


# ---------------------------------------------------------------------------
# Jump map
# ---------------------------------------------------------------------------

def jump_displacement(mark: JumpMark, x: BoundaryPoint) -> tuple[float, float]:
    """The jump map J(y, x): displacement of x caused by the mark y."""
    m = x.magnitude
    if x.kind == PointKind.ORIGIN:
        return (0.0, 0.0)
    if x.kind == PointKind.TYPE1:
        if mark.axis == Axis.AXIS1:
            return ((mark.value - 1.0) * m, 0.0)
        return (-m, mark.value * m)
    if mark.axis == Axis.AXIS1:
        return (0.0, (mark.value - 1.0) * m)
    return (mark.value * m, -m)


def jump_tail_bound_check(
    L: float, x: Optional[BoundaryPoint] = None
) -> tuple[float, float]:
    """nu-mass of {y : |J(y, x)| >= L} and the bound 2 |x|^2 / L^2."""
    if L <= 0.0:
        raise ParameterError(f"L must be positive, got {L}")
    x = x or BoundaryPoint.type1(1.0)
    m = x.magnitude
    bound = 2.0 * m * m / (L * L)
    if m == 0.0:
        return 0.0, bound

    ratio = L / m
    # Axis1 marks move x by m |y1 - 1|
    mass = nu_axis1_complement_mass(ratio)
    # Axis2 marks move x by m sqrt(1 + y2^2)
    if ratio <= 1.0:
        mass += AXIS2_MASS
    else:
        mass += nu_interval_mass(Axis.AXIS2, math.sqrt(ratio * ratio - 1.0), math.inf)
    return mass, bound


def large_jump_first_moment_bound(
    x: BoundaryPoint, scale: float
) -> tuple[float, float]:
    """First moment of the scaled jumps larger than 1, and its quadratic bound."""
    if scale <= 0.0:
        raise ParameterError(f"scale must be positive, got {scale}")
    m = x.magnitude
    rhs = 8.0 * m * m * scale * scale
    if m == 0.0:
        return 0.0, rhs

    c = scale * m
    threshold = 1.0 / c

    def axis1_term(y):
        return c * abs(y - 1.0) * _axis1_density(y)

    def axis2_term(y):
        return c * math.sqrt(1.0 + y * y) * _axis2_density(y)

    lhs = _tail_quad(axis1_term, 1.0 + threshold)
    if threshold < 1.0:
        lhs += _quad(axis1_term, 0.0, 1.0 - threshold)
    lower = 0.0 if threshold <= 1.0 else math.sqrt(threshold * threshold - 1.0)
    split = max(lower, 1.0)
    lhs += _quad(axis2_term, lower, split) + _tail_quad(axis2_term, split)
    return lhs, rhs


def x_log_x_bound(x: float, p: float) -> tuple[float, float]:
    """|x log x| and its bound 1 + x^p / (p - 1) for p > 1."""
    if x < 0.0 or p <= 1.0:
        raise ParameterError(f"need x >= 0 and p > 1, got x={x}, p={p}")
    lhs = 0.0 if x == 0.0 else abs(x * math.log(x))
    return lhs, 1.0 + x ** p / (p - 1.0)


# ---------------------------------------------------------------------------
# Sampling nu
# ---------------------------------------------------------------------------

def axis2_inverse_cdf(u):
    """Axis2 value whose nu-mass below it equals u, u in [0, 2/pi)."""
    u = np.asarray(u, dtype=float)
    return np.sqrt(u / (AXIS2_MASS - u))


def axis1_inverse_cdf_below(u):
    """Axis1 value in (0, 1) whose nu-mass below it equals u."""
    s = np.asarray(u, dtype=float) / TWO_OVER_PI
    return np.sqrt(s / (1.0 + s))


def axis1_inverse_tail(v):
    """Axis1 value in (1, inf) whose nu-mass above it equals v > 0."""
    return np.sqrt(1.0 + TWO_OVER_PI / np.asarray(v, dtype=float))


class TruncatedJumpSampler:
    """Exact inverse-CDF sampler of nu restricted outside the Axis1 window.

    The restricted measure is laid out as [Axis1 below | Axis1 above | Axis2]
    and a single uniform on (0, total mass) is inverted piecewise.
    """

    def __init__(self, window: TruncationWindow):
        self.window = window
        self.mass_below, self.mass_above, self.mass_axis2 = restricted_masses(window)
        self.axis1_mass = self.mass_below + self.mass_above
        self.total_mass = self.axis1_mass + self.mass_axis2

    def sample(self, size, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Draw `size` marks; returns (is_axis2, value) arrays."""
        u = rng.random(size) * self.total_mass
        is_below = u < self.mass_below
        is_axis2 = u >= self.axis1_mass
        values = np.empty_like(u)

        values[is_below] = axis1_inverse_cdf_below(u[is_below])
        above = ~is_below & ~is_axis2
        values[above] = axis1_inverse_tail(self.axis1_mass - u[above])
        w = np.minimum(u[is_axis2] - self.axis1_mass, np.nextafter(self.mass_axis2, 0.0))
        values[is_axis2] = axis2_inverse_cdf(w)
        return is_axis2, values

    def sample_mark(self, rng: np.random.Generator) -> JumpMark:
        is_axis2, values = self.sample(1, rng)
        axis = Axis.AXIS2 if is_axis2[0] else Axis.AXIS1
        return JumpMark(axis=axis, value=float(values[0]))


def sample_nu(window: TruncationWindow, rng: np.random.Generator) -> JumpMark:
    """One exact draw from nu restricted to Axis2 and Axis1 outside the window."""
    return TruncatedJumpSampler(window).sample_mark(rng)


# ---------------------------------------------------------------------------
# Harmonic measure of the quadrant
# ---------------------------------------------------------------------------

def harmonic_sample_array(points, rng: np.random.Generator) -> np.ndarray:
    """Exact draws from Q_x for an array of quadrant points of shape (..., 2).

    z -> z^2 maps the quadrant onto the upper half-plane, where the exit
    law from w = (a, b) is Cauchy with center a and scale b. Points already
    on the boundary are returned unchanged.
    """
    pts = np.asarray(points, dtype=float)
    x1, x2 = pts[..., 0], pts[..., 1]
    center = x1 * x1 - x2 * x2
    scale = 2.0 * x1 * x2
    u = center + scale * rng.standard_cauchy(center.shape)

    out = np.zeros_like(pts)
    positive = u >= 0.0
    out[..., 0] = np.where(positive, np.sqrt(np.abs(u)), 0.0)
    out[..., 1] = np.where(positive, 0.0, np.sqrt(np.abs(u)))
    on_boundary = (scale == 0.0)[..., None]
    return np.where(on_boundary, pts, out)


def harmonic_sample(x: QuadrantPoint, rng: np.random.Generator) -> BoundaryPoint:
    """One exact draw from the harmonic measure Q_x."""
    y1, y2 = harmonic_sample_array(np.array([x.x1, x.x2]), rng)
    return BoundaryPoint.from_coords(y1, y2)


@dataclass(frozen=True)
class HarmonicMoment:
    """Monte Carlo p-th moment of Q_x with its closed-form bounds."""

    estimate: float
    standard_error: float
    bound: float
    sharp_bound: float
    n_samples: int

    @property
    def within_bound(self) -> bool:
        return self.estimate <= self.bound + 3.0 * self.standard_error


def harmonic_pth_moment(
    x: QuadrantPoint,
    p: float,
    i: int,
    n_samples: int,
    rng: np.random.Generator,
) -> HarmonicMoment:
    """Estimate the p-th moment of coordinate i under Q_x, 0 < p < 2."""
    if not 0.0 < p < 2.0:
        raise ParameterError(f"p must lie in (0, 2), got {p}")
    if i not in (1, 2):
        raise ParameterError(f"coordinate index must be 1 or 2, got {i}")
    if n_samples < 2:
        raise ParameterError("need at least two samples")

    start = np.broadcast_to(np.array([x.x1, x.x2]), (n_samples, 2))
    draws = harmonic_sample_array(start, rng)[:, i - 1] ** p
    estimate = float(draws.mean())
    standard_error = float(draws.std(ddof=1) / math.sqrt(n_samples))

    bound = 2.0 / (2.0 - p) * (x.x1 ** p + x.x2 ** p)
    sharp = math.pi * math.sin(p / 2.0) / math.sin(math.pi * p / 2.0) * (
        x.x1 ** 2 + x.x2 ** 2
    ) ** (p / 2.0)
    return HarmonicMoment(
        estimate=estimate,
        standard_error=standard_error,
        bound=bound,
        sharp_bound=sharp,
        n_samples=n_samples,
    )


# ---------------------------------------------------------------------------
# Quadrature helpers
# ---------------------------------------------------------------------------

def _quad(f: Callable[[float], float], a: float, b: float) -> float:
    if b <= a:
        return 0.0
    settings = get_settings()
    value, err = integrate.quad(
        f, a, b, epsabs=settings.quad_abs_tol, epsrel=1e-12, limit=settings.quad_limit
    )
    logger.debug("quad on (%r, %r): %r +- %r", a, b, value, err)
    return value


def _tail_quad(f: Callable[[float], float], a: float) -> float:
    """Integral of f over (a, inf) with a > 0, via y -> 1/y."""
    if a <= 0.0:
        raise ParameterError("tail quadrature needs a positive lower limit")
    return _quad(lambda t: f(1.0 / t) / (t * t) if t > 0.0 else 0.0, 0.0, 1.0 / a)


def quadrature_interval_mass(axis: Axis, a: float, b: float) -> float:
    """nu-mass of (a, b) by adaptive quadrature; cross-check of the closed form."""
    density = axis_density(axis)
    if axis == Axis.AXIS1 and a <= 1.0 <= b:
        raise InfiniteMassError(f"Axis1 interval ({a}, {b}) reaches the pole at 1")
    if math.isinf(b):
        split = max(a, 1.0) if axis == Axis.AXIS2 else max(a, 2.0)
        return _quad(density, a, split) + _tail_quad(density, split)
    return _quad(density, a, b)
