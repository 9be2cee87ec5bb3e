"""
Mean-Field MCB(inf) Dynamics

Simulates N sites on the boundary E of the quadrant, coupled through the
mean-field migration operator, with either a tau-leaping discretisation
of the jump equation or exact per-step harmonic resampling of the heat
flow. Everything runs vectorised over a leading replica axis.
"""

import dataclasses
import logging
import math
from typing import Optional, Sequence, Union

import numpy as np

from ..config import get_settings
from ..errors import NoJumpError, ParameterError, ResourceLimitError
from ..schemas.dynamics import (
    BatchPath,
    JumpEvent,
    PathRecord,
    RecordMode,
    Scheme,
    SimParams,
    SystemState,
)
from ..schemas.measures import Axis, BoundaryPoint, JumpMark, PointKind, QuadrantPoint
from .measures import TruncatedJumpSampler, harmonic_sample_array, nu_pv_mean_axis1

logger = logging.getLogger(__name__)

# marks drawn at once when applying Poisson jump counts
MARK_CHUNK = 1_000_000


def beta_n(n_sites: int) -> float:
    """Time scale N / log N."""
    if n_sites < 2:
        raise ParameterError(f"beta_n needs N >= 2, got {n_sites}")
    return n_sites / math.log(n_sites)


# ---------------------------------------------------------------------------
# Single-site operations
# ---------------------------------------------------------------------------

def mean_field_drift(state: SystemState, k: int) -> tuple[float, float]:
    """Action of the mean-field operator on site k: z - x(k)."""
    x1, x2 = state.coords[k]
    return (state.z1 - float(x1), state.z2 - float(x2))


def jump_rate(state: SystemState, k: int) -> float:
    """Jump intensity of site k per unit nu-mass: opposite mean over magnitude."""
    x1, x2 = state.coords[k]
    if x1 > 0.0:
        return state.z2 / float(x1)
    if x2 > 0.0:
        return state.z1 / float(x2)
    return 0.0


def apply_jump(x: BoundaryPoint, mark: JumpMark) -> BoundaryPoint:
    """Move x by one mark: Axis1 rescales, Axis2 rescales and switches type."""
    if x.kind == PointKind.ORIGIN:
        raise NoJumpError("the origin has jump rate zero and cannot jump")
    magnitude = x.magnitude * mark.value
    keep_type = mark.axis == Axis.AXIS1
    is_type1 = (x.kind == PointKind.TYPE1) == keep_type
    if is_type1:
        return BoundaryPoint.from_coords(magnitude, 0.0)
    return BoundaryPoint.from_coords(0.0, magnitude)


def lemma27_identity(state: SystemState) -> float:
    """Largest deviation of x_i(k) * I(k) from 1{x_i(k) != 0} * Z^{3-i}."""
    worst = 0.0
    for k in range(state.n_sites):
        rate = jump_rate(state, k)
        for i in (0, 1):
            x = float(state.coords[k, i])
            expected = state.z[1 - i] if x != 0.0 else 0.0
            worst = max(worst, abs(x * rate - expected))
    return worst


def log_moment_statistic(state: SystemState, i: int) -> float:
    """(2/N) sum_k x_i(k) (2 + |log x_i(k)|) with 0 log 0 = 0."""
    if i not in (1, 2):
        raise ParameterError(f"coordinate index must be 1 or 2, got {i}")
    x = state.coords[:, i - 1]
    with np.errstate(divide="ignore"):
        logs = np.where(x > 0.0, np.abs(np.log(np.where(x > 0.0, x, 1.0))), 0.0)
    return float(2.0 * np.mean(x * (2.0 + logs)))


# ---------------------------------------------------------------------------
# Heat flow and time change
# ---------------------------------------------------------------------------

def heat_flow_array(coords: np.ndarray, t: float) -> np.ndarray:
    """e^{-t} x(k) + (1 - e^{-t}) mean(x) over the site axis (second to last)."""
    if t < 0.0:
        raise ParameterError(f"t must be nonnegative, got {t}")
    coords = np.asarray(coords, dtype=float)
    if t == 0.0:
        return coords.copy()
    a = math.exp(-t)
    return a * coords + (1.0 - a) * coords.mean(axis=-2, keepdims=True)


def heat_flow(x0: Sequence[QuadrantPoint], t: float) -> list[QuadrantPoint]:
    """Deterministic mean-field semigroup applied to a configuration."""
    coords = np.array([p.as_tuple() for p in x0], dtype=float).reshape(-1, 2)
    flowed = np.maximum(heat_flow_array(coords, t), 0.0)
    return [QuadrantPoint(x1=float(a), x2=float(b)) for a, b in flowed]


def rescaled_view(record: PathRecord, n_sites: int) -> PathRecord:
    """Reindex a path by rescaled time t / beta^N."""
    if n_sites < 3:
        raise ParameterError(f"rescaled time needs N >= 3, got {n_sites}")
    beta = beta_n(n_sites)
    return PathRecord(
        times=record.model_times / beta,
        totals=record.totals,
        n_sites=record.n_sites,
        snapshots=record.snapshots,
        events=record.events,
        time_scale=beta,
        replica=record.replica,
    )


def rescaled_batch(batch: BatchPath, n_sites: int) -> BatchPath:
    """Batch form of rescaled_view."""
    if n_sites < 3:
        raise ParameterError(f"rescaled time needs N >= 3, got {n_sites}")
    beta = beta_n(n_sites)
    return dataclasses.replace(
        batch, times=batch.times * batch.time_scale / beta, time_scale=beta
    )


# ---------------------------------------------------------------------------
# Vectorised simulator
# ---------------------------------------------------------------------------

class MeanFieldSimulator:
    """Steps blocks of replicas of shape (B, N, 2) forward in model time."""

    def __init__(self, params: SimParams):
        self.params = params
        self.settings = get_settings()
        self.tau_leap = params.scheme == Scheme.TAU_LEAP
        if self.tau_leap:
            self.sampler = TruncatedJumpSampler(params.window)
            self.pv_mean = nu_pv_mean_axis1(params.window)
        else:
            self.sampler = None
            self.pv_mean = 0.0
        self.clamped = 0

    # -- steppers ---------------------------------------------------------

    def step(
        self,
        coords: np.ndarray,
        z: np.ndarray,
        h: float,
        rng: np.random.Generator,
        clock: float = 0.0,
        events: Optional[list[JumpEvent]] = None,
        first_replica: int = 0,
    ) -> np.ndarray:
        if self.tau_leap:
            return self._tau_leap(coords, z, h, rng, clock, events, first_replica)
        return self._harmonic_split(coords, z, h, rng)

    def _harmonic_split(self, coords, z, h, rng):
        a = math.exp(-h)
        target = coords + (1.0 - a) * (z[:, None, :] - coords)
        return harmonic_sample_array(target, rng)

    def jump_intensity(self, coords: np.ndarray, z: np.ndarray, h: float) -> np.ndarray:
        """Poisson means h * I^N(k) * M_delta per site, I^N(k) = Z^opp / x(k); 0 at the origin."""
        x1, x2 = coords[..., 0], coords[..., 1]
        type1 = x1 > 0.0
        magnitude = np.where(type1, x1, x2)
        opposite = np.where(type1, z[:, 1:2], z[:, 0:1])
        jumping = magnitude > 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            rate = np.where(jumping, opposite / np.where(jumping, magnitude, 1.0), 0.0)
        return h * rate * self.sampler.total_mass

    def _tau_leap(self, coords, z, h, rng, clock, events, first_replica):
        x1, x2 = coords[..., 0], coords[..., 1]
        z1, z2 = z[:, 0:1], z[:, 1:2]
        type1 = x1 > 0.0
        type2 = x2 > 0.0
        origin = ~type1 & ~type2
        # rates frozen at the step-start state
        counts = rng.poisson(self.jump_intensity(coords, z, h))

        # drift minus the compensator of the simulated jumps; the off-type
        # coordinate receives exactly zero
        new = coords.copy()
        new[..., 0] = np.where(type1, x1 + h * ((z1 - x1) + z2 * self.pv_mean), x1)
        new[..., 1] = np.where(type2, x2 + h * ((z2 - x2) + z1 * self.pv_mean), x2)
        new[..., 0] = np.where(origin, h * z1, new[..., 0])
        new[..., 1] = np.where(origin, h * z2, new[..., 1])

        negative = new < 0.0
        if negative.any():
            count = int(negative.sum())
            self.clamped += count
            logger.warning("clamped %d negative coordinates to 0 (h=%r)", count, h)
            new[negative] = 0.0

        # jumps act multiplicatively on the drifted magnitude
        magnitude = np.where(type1, new[..., 0], np.where(type2, new[..., 1], 0.0))
        flat_counts = counts.ravel()
        factor = np.ones(flat_counts.size)
        flips = np.zeros(flat_counts.size, dtype=np.int64)
        total = int(flat_counts.sum())
        if total:
            site_index = np.repeat(np.arange(flat_counts.size), flat_counts)
            flat_magnitude, flat_type1 = magnitude.ravel(), type1.ravel()
            for start in range(0, total, MARK_CHUNK):
                idx = site_index[start:start + MARK_CHUNK]
                is_axis2, values = self.sampler.sample(idx.size, rng)
                if events is not None:
                    self._log_jumps(
                        idx, is_axis2, values,
                        flat_magnitude[idx] * factor[idx], flips[idx], flat_type1,
                        coords.shape[1], clock + h, events, first_replica,
                    )
                np.multiply.at(factor, idx, values)
                np.add.at(flips, idx, is_axis2.astype(np.int64))

        factor = factor.reshape(magnitude.shape)
        odd = (flips.reshape(magnitude.shape) % 2) == 1
        ends_type1 = type1 ^ odd
        final = magnitude * factor
        new[..., 0] = np.where(origin, new[..., 0], np.where(ends_type1, final, 0.0))
        new[..., 1] = np.where(origin, new[..., 1], np.where(ends_type1, 0.0, final))

        # project interior points back onto E
        interior = (new[..., 0] > 0.0) & (new[..., 1] > 0.0)
        if interior.any():
            new[interior] = harmonic_sample_array(new[interior], rng)
        return new

    def _log_jumps(
        self, site_index, is_axis2, values, base, base_flips, type1,
        n_sites, time, events, first_replica,
    ):
        """Log one chunk of marks (sorted by site).

        `base` and `base_flips` are each entry's site magnitude and type
        switches accumulated before the chunk.
        """
        threshold = self.params.jump_log_threshold
        seg_start = np.searchsorted(site_index, site_index, side="left")
        logs = np.log(np.maximum(values, np.finfo(float).tiny))
        before_logs = np.cumsum(logs) - logs
        before = base * np.exp(before_logs - before_logs[seg_start])
        switches = np.cumsum(is_axis2) - is_axis2
        parity = (base_flips + switches - switches[seg_start]) % 2 == 1
        was_type1 = type1[site_index] ^ parity

        size = np.where(
            is_axis2, before * np.sqrt(1.0 + values * values), before * np.abs(values - 1.0)
        ) / n_sites
        for j in np.flatnonzero(size >= threshold):
            b, y = float(before[j]), float(values[j])
            if is_axis2[j]:
                mark = JumpMark(axis=Axis.AXIS2, value=y)
                displacement = (-b, y * b) if was_type1[j] else (y * b, -b)
            else:
                mark = JumpMark(axis=Axis.AXIS1, value=y)
                displacement = ((y - 1.0) * b, 0.0) if was_type1[j] else (0.0, (y - 1.0) * b)
            flat = int(site_index[j])
            events.append(
                JumpEvent(
                    time=time,
                    site=flat % n_sites,
                    mark=mark,
                    displacement=displacement,
                    replica=first_replica + flat // n_sites,
                )
            )

    # -- driver -----------------------------------------------------------

    def run(
        self,
        coords: np.ndarray,
        rng: np.random.Generator,
        first_replica: int = 0,
    ) -> BatchPath:
        params = self.params
        coords = np.array(coords, dtype=float)
        n_replicas, n_sites = coords.shape[0], coords.shape[1]
        z = coords.mean(axis=1)
        since_recompute = 0

        keep_snapshots = params.record_mode == RecordMode.FULL_CONFIG
        events: Optional[list[JumpEvent]] = (
            [] if params.record_mode == RecordMode.JUMP_LOG else None
        )
        times = [0.0]
        totals = [z.copy()]
        snapshots = [coords.copy()] if keep_snapshots else None
        max_coordinate = coords.max(axis=(1, 2))

        n_steps = params.n_steps
        budget = self.settings.max_steps
        clock = 0.0
        for step in range(1, min(n_steps, budget) + 1):
            h = params.horizon - clock if step == n_steps else params.h
            new = self.step(coords, z, h, rng, clock, events, first_replica)
            if self.tau_leap:
                z = z + (new.sum(axis=1) - coords.sum(axis=1)) / n_sites
                since_recompute += 1
                if since_recompute >= params.recompute_period:
                    z = new.mean(axis=1)
                    since_recompute = 0
            else:
                z = new.mean(axis=1)
            coords = new
            clock = params.horizon if step == n_steps else step * params.h
            np.maximum(max_coordinate, coords.max(axis=(1, 2)), out=max_coordinate)

            if step % params.record_every == 0 or step == n_steps:
                times.append(clock)
                totals.append(z.copy())
                if keep_snapshots:
                    snapshots.append(coords.copy())

        path = BatchPath(
            times=np.array(times),
            totals=np.stack(totals, axis=1),
            n_sites=n_sites,
            final_coords=coords,
            snapshots=None if snapshots is None else np.stack(snapshots, axis=1),
            events=events,
            max_coordinate=max_coordinate,
            first_replica=first_replica,
            extras={"clamped": self.clamped},
        )
        if n_steps > budget:
            logger.warning(
                "step budget %d exhausted before the horizon (%d steps needed)",
                budget, n_steps,
            )
            raise ResourceLimitError(
                f"simulation needs {n_steps} steps but the budget is {budget}",
                partial=path,
            )
        logger.debug(
            "simulated %d replicas x %d sites for %d steps (%s)",
            n_replicas, n_sites, n_steps, params.scheme.value,
        )
        return path


# ---------------------------------------------------------------------------
# Public entry points
# ---------------------------------------------------------------------------

def _as_state_array(state: SystemState) -> tuple[np.ndarray, np.ndarray]:
    return state.coords[None, ...], state.z[None, :]


def step_tau_leap(
    state: SystemState, params: SimParams, rng: np.random.Generator
) -> SystemState:
    """One tau-leaping step of size params.h."""
    simulator = MeanFieldSimulator(params.model_copy(update={"scheme": Scheme.TAU_LEAP}))
    return _advance(simulator, state, params.h, rng)


def step_harmonic_split(
    state: SystemState, params: SimParams, rng: np.random.Generator
) -> SystemState:
    """One step of harmonic resampling of the heat-flowed state."""
    simulator = MeanFieldSimulator(
        params.model_copy(update={"scheme": Scheme.HARMONIC_SPLIT})
    )
    return _advance(simulator, state, params.h, rng)


def _advance(simulator, state, h, rng) -> SystemState:
    coords, z = _as_state_array(state)
    new = simulator.step(coords, z, h, rng, clock=state.clock)[0]
    result = SystemState(
        coords=new,
        z=state.z.copy(),
        clock=state.clock + h,
        steps_since_recompute=state.steps_since_recompute + 1,
    )
    if not simulator.tau_leap:
        result.recompute_totals()
        return result
    result.z = state.z + (new.sum(axis=0) - state.coords.sum(axis=0)) / state.n_sites
    if result.steps_since_recompute >= simulator.params.recompute_period:
        result.recompute_totals()
    return result


def simulate_batch(
    initial: Union[SystemState, np.ndarray],
    params: SimParams,
    rng: np.random.Generator,
    n_replicas: Optional[int] = None,
    first_replica: int = 0,
) -> BatchPath:
    """Simulate B replicas; `initial` is one state (broadcast) or an array (B, N, 2)."""
    if isinstance(initial, SystemState):
        coords = np.broadcast_to(
            initial.coords, (n_replicas or 1,) + initial.coords.shape
        ).copy()
    else:
        coords = np.asarray(initial, dtype=float)
        if coords.ndim != 3 or coords.shape[-1] != 2:
            raise ParameterError(f"initial coordinates must have shape (B, N, 2), got {coords.shape}")
    return MeanFieldSimulator(params).run(coords, rng, first_replica=first_replica)


def simulate(initial: SystemState, params: SimParams) -> PathRecord:
    """Simulate one replica seeded by params.seed."""
    rng = np.random.default_rng(params.seed)
    try:
        batch = simulate_batch(initial, params, rng)
    except ResourceLimitError as exc:
        exc.partial = exc.partial.record(0) if exc.partial is not None else None
        raise
    return batch.record(0)


def max_coordinate(batch: BatchPath) -> np.ndarray:
    """Largest site coordinate seen along each replica path."""
    if batch.max_coordinate is None:
        raise ParameterError("batch path carries no max-coordinate diagnostic")
    return batch.max_coordinate
