"""
Reference Processes

The finite-rate system MCB(gamma), the limiting total-mass diffusion with
branching rate 8/pi, and the single-colony processes Y^theta (exact) and
Y^{theta,gamma} (Euler). Every simulator has a vectorised batch form over a
leading replica axis.
"""

import logging
import math
from typing import Sequence

import numpy as np

from ..errors import ParameterError
from ..schemas.dynamics import BatchPath, PathRecord
from ..schemas.measures import BoundaryPoint, QuadrantPoint
from ..schemas.reference import DiffusionState, GammaParams
from .measures import harmonic_sample_array

logger = logging.getLogger(__name__)

LIMIT_BRANCHING_RATE = 8.0 / math.pi


def _time_grid(h: float, horizon: float) -> list[float]:
    if h <= 0.0:
        raise ParameterError(f"step size must be positive, got {h}")
    if horizon < 0.0:
        raise ParameterError(f"horizon must be nonnegative, got {horizon}")
    n_steps = max(1, int(math.ceil(horizon / h - 1e-9))) if horizon > 0 else 0
    grid = [min(j * h, horizon) for j in range(n_steps)]
    return grid + [horizon] if n_steps else [0.0]


# ---------------------------------------------------------------------------
# MCB(gamma)
# ---------------------------------------------------------------------------

def mcb_gamma_batch(
    coords: np.ndarray,
    gamma: float,
    h: float,
    horizon: float,
    rng: np.random.Generator,
    record_every: int = 1,
    first_replica: int = 0,
) -> BatchPath:
    """Euler-Maruyama for B replicas of N sites, clamped at 0 after each step."""
    if gamma <= 0.0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    x = np.array(coords, dtype=float)
    grid = _time_grid(h, horizon)
    times, totals = [0.0], [x.mean(axis=1)]
    for step in range(1, len(grid)):
        dt = grid[step] - grid[step - 1]
        z = x.mean(axis=1, keepdims=True)
        noise = np.sqrt(gamma * x[..., 0] * x[..., 1] * dt)[..., None]
        x = x + (z - x) * dt + noise * rng.standard_normal(x.shape)
        np.maximum(x, 0.0, out=x)
        if step % record_every == 0 or step == len(grid) - 1:
            times.append(grid[step])
            totals.append(x.mean(axis=1))
    return BatchPath(
        times=np.array(times),
        totals=np.stack(totals, axis=1),
        n_sites=x.shape[1],
        final_coords=x,
        first_replica=first_replica,
    )


def simulate_mcb_gamma(
    initial: Sequence[QuadrantPoint], params: GammaParams, horizon: float
) -> PathRecord:
    """One MCB(gamma) replica from a configuration in the quadrant."""
    coords = np.array([p.as_tuple() for p in initial], dtype=float)[None, ...]
    rng = np.random.default_rng(params.seed)
    return mcb_gamma_batch(coords, params.gamma, params.h, horizon, rng).record(0)


def interior_fraction(coords: np.ndarray, level: float = 0.05) -> float:
    """Fraction of sites whose smaller coordinate exceeds `level`."""
    coords = np.asarray(coords, dtype=float)
    return float(np.mean(np.minimum(coords[..., 0], coords[..., 1]) > level))


# ---------------------------------------------------------------------------
# Limiting diffusion
# ---------------------------------------------------------------------------

def limit_diffusion_batch(
    z0: np.ndarray,
    h: float,
    horizon: float,
    rng: np.random.Generator,
    record_every: int = 1,
    first_replica: int = 0,
) -> BatchPath:
    """Euler-Maruyama for dZ^i = sqrt((8/pi) Z^1 Z^2) dB^i on B replicas.

    Coordinates are clamped at 0; a path with a vanished coordinate has zero
    noise and stays frozen.
    """
    z = np.array(z0, dtype=float).reshape(-1, 2)
    grid = _time_grid(h, horizon)
    times, totals = [0.0], [z.copy()]
    for step in range(1, len(grid)):
        dt = grid[step] - grid[step - 1]
        noise = np.sqrt(LIMIT_BRANCHING_RATE * z[:, 0] * z[:, 1] * dt)[:, None]
        z = np.maximum(z + noise * rng.standard_normal(z.shape), 0.0)
        if step % record_every == 0 or step == len(grid) - 1:
            times.append(grid[step])
            totals.append(z.copy())
    return BatchPath(
        times=np.array(times),
        totals=np.stack(totals, axis=1),
        n_sites=1,
        first_replica=first_replica,
    )


def simulate_limit_diffusion(
    z0: DiffusionState, h: float, horizon: float, seed: int
) -> PathRecord:
    rng = np.random.default_rng(seed)
    return limit_diffusion_batch(np.array([z0.as_tuple()]), h, horizon, rng).record(0)


# ---------------------------------------------------------------------------
# Y^theta and Y^{theta,gamma}
# ---------------------------------------------------------------------------

def y_theta_step_array(y, theta, s: float, rng: np.random.Generator) -> np.ndarray:
    """Exact transition of Y^theta over time s for an array of states (..., 2)."""
    if s < 0.0:
        raise ParameterError(f"s must be nonnegative, got {s}")
    a = math.exp(-s)
    return harmonic_sample_array(
        a * np.asarray(y, dtype=float) + (1.0 - a) * np.asarray(theta, dtype=float), rng
    )


def y_theta_step(
    y: BoundaryPoint, theta: QuadrantPoint, s: float, rng: np.random.Generator
) -> BoundaryPoint:
    """Draw from Q_{e^{-s} y + (1 - e^{-s}) theta}."""
    y1, y2 = y_theta_step_array(y.coords, theta.as_tuple(), s, rng)
    return BoundaryPoint.from_coords(y1, y2)


def stationary_paths(
    theta: QuadrantPoint, times: Sequence[float], n_paths: int, rng: np.random.Generator
) -> np.ndarray:
    """`n_paths` stationary Y^theta paths on a time grid, shape (n_paths, T, 2)."""
    times = np.asarray(times, dtype=float)
    if times.size == 0 or np.any(np.diff(times) <= 0.0):
        raise ParameterError("times must be a nonempty increasing grid")
    th = np.array(theta.as_tuple())
    out = np.empty((n_paths, times.size, 2))
    out[:, 0] = harmonic_sample_array(np.broadcast_to(th, (n_paths, 2)), rng)
    for j in range(1, times.size):
        out[:, j] = y_theta_step_array(out[:, j - 1], th, times[j] - times[j - 1], rng)
    return out


def sample_stationary_path(
    theta: QuadrantPoint, times: Sequence[float], rng: np.random.Generator
) -> list[BoundaryPoint]:
    """One path of the stationary Y^theta process started from Q_theta."""
    path = stationary_paths(theta, times, 1, rng)[0]
    return [BoundaryPoint.from_coords(y1, y2) for y1, y2 in path]


def y_theta_gamma_step_array(
    y, theta, gamma: float, h: float, rng: np.random.Generator
) -> np.ndarray:
    if gamma <= 0.0 or h <= 0.0:
        raise ParameterError(f"gamma and h must be positive, got {gamma}, {h}")
    y = np.asarray(y, dtype=float)
    noise = np.sqrt(gamma * y[..., 0] * y[..., 1] * h)[..., None]
    drift = (np.asarray(theta, dtype=float) - y) * h
    return np.maximum(y + drift + noise * rng.standard_normal(y.shape), 0.0)


def y_theta_gamma_step(
    y: QuadrantPoint, theta: QuadrantPoint, gamma: float, h: float, rng: np.random.Generator
) -> QuadrantPoint:
    """One Euler-Maruyama step of Y^{theta,gamma}, clamped at 0."""
    y1, y2 = y_theta_gamma_step_array(y.as_tuple(), theta.as_tuple(), gamma, h, rng)
    return QuadrantPoint(x1=float(y1), x2=float(y2))


def y_theta_gamma_endpoint(
    y0, theta: QuadrantPoint, gamma: float, h: float, horizon: float, rng: np.random.Generator
) -> np.ndarray:
    """Run Y^{theta,gamma} to `horizon` from states y0 of shape (B, 2)."""
    y = np.array(y0, dtype=float).reshape(-1, 2)
    th = theta.as_tuple()
    grid = _time_grid(h, horizon)
    for step in range(1, len(grid)):
        y = y_theta_gamma_step_array(y, th, gamma, grid[step] - grid[step - 1], rng)
    return y


def mean_reversion_target(y: QuadrantPoint, theta: QuadrantPoint, t: float) -> tuple[float, float]:
    """E[Y_t] = e^{-t} y + (1 - e^{-t}) theta for both Y^theta and Y^{theta,gamma}."""
    a = math.exp(-t)
    return (a * y.x1 + (1.0 - a) * theta.x1, a * y.x2 + (1.0 - a) * theta.x2)
