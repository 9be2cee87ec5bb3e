"""
Path Analysis Service

Closed-form rate calculators for the half/half configuration, estimators
of the jump and quadratic-variation characteristics of simulated total
masses, and the moment checks that turn Monte Carlo output into
TestReports.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ParameterError, PreconditionError
from ..schemas.analysis import HeuristicRates, TestReport
from ..schemas.dynamics import BatchPath, PathRecord
from ..schemas.measures import Axis
from .measures import (
    FOUR_OVER_PI,
    TWO_OVER_PI,
    harmonic_sample_array,
    nu_truncated_second_moment,
    nu_window_second_moment,
)
from .statistics import combined_se, mean_and_se

logger = logging.getLogger(__name__)

LIMIT_QV_RATE = 8.0 / math.pi
DOOB_CONSTANT = 1218.0


def _axis1_window_second_moment(c: float) -> float:
    # second moment of (y1 - 1) over |y1 - 1| < c
    if c < 1.0:
        return nu_window_second_moment(c)[0]
    return nu_truncated_second_moment(Axis.AXIS1, 1.0 + c)


def heuristic_rates(n_sites: int, eps: float, z1: float, z2: float) -> HeuristicRates:
    """Large-jump rate bounds and small-jump QV rates of Z^1 for the half/half state."""
    if n_sites < 3:
        raise ParameterError(f"N must be at least 3, got {n_sites}")
    if eps <= 0.0 or z1 < 0.0 or z2 < 0.0:
        raise ParameterError("need eps > 0 and nonnegative means")
    log_n = math.log(n_sites)
    product = z1 * z2
    if product == 0.0:
        return HeuristicRates(
            large_jump_rate_case1=0.0,
            large_jump_rate_case2=0.0,
            qv_rate_case1=0.0,
            qv_rate_case2=0.0,
        )

    large = TWO_OVER_PI * product / (log_n * eps * eps)
    cut1 = eps * n_sites / (2.0 * z1)
    cut2 = eps * n_sites / (2.0 * z2)
    return HeuristicRates(
        large_jump_rate_case1=large,
        large_jump_rate_case2=large,
        qv_rate_case1=product * _axis1_window_second_moment(cut1) / log_n,
        qv_rate_case2=product * nu_truncated_second_moment(Axis.AXIS2, cut2) / log_n,
        qv_asymptotic_case1=product * FOUR_OVER_PI * math.log(cut1) / log_n,
        qv_asymptotic_case2=product * FOUR_OVER_PI * math.log(cut2) / log_n,
    )


def lemma28_constant(n_sites: int) -> float:
    """N^2 / (N^{p_N} log N) / (2 - p_N) with p_N = 2 - 1/log N; equals e."""
    if n_sites < 3:
        raise ParameterError(f"N must be at least 3, got {n_sites}")
    n = float(n_sites)
    log_n = math.log(n)
    p = 2.0 - 1.0 / log_n
    return n * n / (n ** p * log_n) / (2.0 - p)


def log_bound_check(x: float, a: float, y: Optional[float] = None) -> tuple[float, float]:
    """|log(x + y)| against a + |log x| for 0 <= y <= a.

    Without `y` the worst pair over a grid of y in [0, a] is returned.
    """
    if x <= 0.0 or a < 0.0:
        raise ParameterError(f"need x > 0 and a >= 0, got x={x}, a={a}")
    rhs = a + abs(math.log(x))
    if y is not None:
        if not 0.0 <= y <= a:
            raise ParameterError(f"y must lie in [0, a], got {y}")
        return abs(math.log(x + y)), rhs
    lhs = max(abs(math.log(x + v)) for v in np.linspace(0.0, a, 101))
    return lhs, rhs


# ---------------------------------------------------------------------------
# Characteristics estimated from paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RealizedQV:
    """Cumulative realized quadratic variation against (8/pi) int z1 z2 ds."""

    times: np.ndarray
    qv1: np.ndarray
    qv2: np.ndarray
    compensator: np.ndarray

    @property
    def ratio(self) -> float:
        total = self.compensator[-1]
        if total == 0.0:
            return 0.0
        return float((self.qv1[-1] + self.qv2[-1]) / 2.0 / total * LIMIT_QV_RATE)


def _check_uniform(times: np.ndarray) -> None:
    if times.size < 2:
        raise PreconditionError("realized QV needs at least two samples")
    steps = np.diff(times)
    if not np.allclose(steps[:-1], steps[0], rtol=1e-9, atol=0.0) or steps[-1] > steps[0] * (1 + 1e-9):
        raise PreconditionError("realized QV needs a uniform sampling grid")


def realized_qv(record: PathRecord) -> RealizedQV:
    """Sum of squared increments of each total mass and its limit compensator."""
    times = np.asarray(record.times, dtype=float)
    _check_uniform(times)
    inc = np.diff(record.totals, axis=0)
    product = record.totals[:, 0] * record.totals[:, 1]
    area = np.concatenate([[0.0], np.cumsum((product[1:] + product[:-1]) / 2.0 * np.diff(times))])
    return RealizedQV(
        times=times,
        qv1=np.concatenate([[0.0], np.cumsum(inc[:, 0] ** 2)]),
        qv2=np.concatenate([[0.0], np.cumsum(inc[:, 1] ** 2)]),
        compensator=LIMIT_QV_RATE * area,
    )


def realized_qv_ratio(batch: BatchPath) -> tuple[float, float]:
    """Replica-averaged realized QV per coordinate over (8/pi) int z1 z2 ds, times 8/pi.

    Returns (ratio, per-replica standard error of the QV average); a value
    near 8/pi means the QV grows at the limiting branching rate.
    """
    times = np.asarray(batch.times, dtype=float)
    _check_uniform(times)
    inc = np.diff(batch.totals, axis=1)
    qv = (inc ** 2).sum(axis=1).mean(axis=1)                        # (B,)
    product = batch.totals[..., 0] * batch.totals[..., 1]
    area = ((product[:, 1:] + product[:, :-1]) / 2.0 * np.diff(times)).sum(axis=1)
    mean_area = float(area.mean())
    if mean_area == 0.0:
        return 0.0, 0.0
    mean_qv, se_qv = mean_and_se(qv)
    return mean_qv / mean_area, se_qv / mean_area


def _census_counts(events, n_sites: int, eps: float, horizon: float, n_replicas: int, first: int) -> np.ndarray:
    counts = np.zeros(n_replicas)
    for e in events:
        size = math.hypot(*e.displacement) / n_sites
        if size > eps and e.time <= horizon * (1.0 + 1e-12):
            counts[e.replica - first] += 1
    return counts


def jump_census(record: PathRecord, eps: float, n_sites: int, t: float) -> tuple[int, float]:
    """Number of total-mass jumps larger than eps up to rescaled time t, and the bound."""
    if record.events is None:
        raise PreconditionError("jump census needs a path recorded with a jump log")
    if n_sites < 3:
        raise ParameterError(f"N must be at least 3, got {n_sites}")
    beta = n_sites / math.log(n_sites)
    count = _census_counts(record.events, n_sites, eps, t * beta, 1, record.replica)[0]
    z1, z2 = record.totals[0]
    bound = 4.0 * t / math.log(n_sites) / (eps * eps) * z1 * z2
    return int(count), float(bound)


def jump_census_check(
    batch: BatchPath, eps: float, n_sites: int, t: float, log_threshold: float = 0.0
) -> TestReport:
    """Mean census count over replicas against (4t/log N) eps^-2 E[Z1_0 Z2_0] + 3 SE.

    `log_threshold` is the jump_log_threshold the batch was simulated with.
    """
    if batch.events is None:
        raise PreconditionError("jump census needs a batch recorded with a jump log")
    if eps < log_threshold:
        raise PreconditionError(
            f"jump log keeps jumps >= {log_threshold}, cannot census eps={eps}"
        )
    beta = n_sites / math.log(n_sites)
    counts = _census_counts(
        batch.events, n_sites, eps, t * beta, batch.n_replicas, batch.first_replica
    )
    mean_count, se = mean_and_se(counts)
    mixed = float(np.mean(batch.totals[:, 0, 0] * batch.totals[:, 0, 1]))
    bound = 4.0 * t / math.log(n_sites) / (eps * eps) * mixed
    return TestReport.judge(
        "jump_census", mean_count, bound + 3.0 * se, n=batch.n_replicas,
        n_sites=n_sites, eps=eps, t=t, bound=bound,
    )


# ---------------------------------------------------------------------------
# Moment checks
# ---------------------------------------------------------------------------

def _time_index(batch: BatchPath, t: float) -> int:
    idx = int(np.argmin(np.abs(batch.times * batch.time_scale - t)))
    if not math.isclose(batch.times[idx] * batch.time_scale, t, rel_tol=1e-9, abs_tol=1e-12):
        raise ParameterError(f"time {t} is not on the recorded grid")
    return idx


def martingale_check(batch: BatchPath, t: float, k_se: float = 3.0) -> list[TestReport]:
    """|mean(Z^i_t) - mean(Z^i_0)| <= k SE for both coordinates (model time t)."""
    idx = _time_index(batch, t)
    reports = []
    for i in (0, 1):
        diff = batch.totals[:, idx, i] - batch.totals[:, 0, i]
        mean, se = mean_and_se(diff)
        reports.append(
            TestReport.judge(
                f"martingale_z{i + 1}", abs(mean), k_se * se, n=batch.n_replicas,
                t=t, n_sites=batch.n_sites,
            )
        )
    return reports


def mixed_moment_check(batch: BatchPath, t: float, k_se: float = 3.0) -> TestReport:
    """mean(Z1_t Z2_t) <= mean(Z1_0 Z2_0) + k SE."""
    idx = _time_index(batch, t)
    diff = (
        batch.totals[:, idx, 0] * batch.totals[:, idx, 1]
        - batch.totals[:, 0, 0] * batch.totals[:, 0, 1]
    )
    mean, se = mean_and_se(diff)
    return TestReport.judge(
        "mixed_moment", mean, k_se * se, n=batch.n_replicas, t=t, n_sites=batch.n_sites
    )


def one_point_moment_check(
    final_coords: np.ndarray,
    initial_coords: np.ndarray,
    t: float,
    p: float,
    rng: np.random.Generator,
    n_oracle: Optional[int] = None,
    k_se: float = 3.0,
) -> TestReport:
    """E[X^i_t(k)^p] from simulation against the p-th moment of Q at the heat flow.

    `final_coords` holds (B, N, 2) simulated states at model time t from the
    deterministic configuration `initial_coords` (N, 2). The statistic is the
    largest standardised deviation over sites and coordinates.
    """
    if not 0.0 < p < 2.0:
        raise ParameterError(f"p must lie in (0, 2), got {p}")
    initial = np.asarray(initial_coords, dtype=float)
    a = math.exp(-t)
    flowed = a * initial + (1.0 - a) * initial.mean(axis=0)
    n_replicas = final_coords.shape[0]
    n_oracle = n_oracle or n_replicas
    oracle = harmonic_sample_array(
        np.broadcast_to(flowed, (n_oracle,) + flowed.shape), rng
    )
    worst = 0.0
    for k in range(initial.shape[0]):
        for i in (0, 1):
            sim_mean, sim_se = mean_and_se(final_coords[:, k, i] ** p)
            ref_mean, ref_se = mean_and_se(oracle[:, k, i] ** p)
            se = combined_se(sim_se, ref_se)
            gap = abs(sim_mean - ref_mean)
            z = gap / se if se > 0.0 else (math.inf if gap > 1e-12 else 0.0)
            worst = max(worst, z)
    return TestReport.judge(
        "one_point_moment", worst, k_se, n=n_replicas, p=p, t=t, n_sites=initial.shape[0]
    )


def lemma29_check(batch: BatchPath, n_sites: int, horizon: float) -> TestReport:
    """E[sup_{t<=T} |Z~_t - Z~_0|^{p_N}] <= 1218 T E[Z1_0 Z2_0 + Z1_0 + Z2_0].

    `batch` is sampled in rescaled time (time_scale = beta^N).
    """
    if n_sites < 3:
        raise ParameterError(f"N must be at least 3, got {n_sites}")
    p_n = 2.0 - 1.0 / math.log(n_sites)
    mask = batch.times <= horizon * (1.0 + 1e-12)
    dev = np.abs(batch.totals[:, mask, :] - batch.totals[:, :1, :]).max(axis=1)   # (B, 2)
    statistic = float(np.max(np.mean(dev ** p_n, axis=0)))
    z0 = batch.totals[:, 0, :]
    bound = DOOB_CONSTANT * horizon * float(np.mean(z0[:, 0] * z0[:, 1] + z0[:, 0] + z0[:, 1]))
    return TestReport.judge(
        "lemma29", statistic, bound, n=batch.n_replicas, n_sites=n_sites, p_n=p_n, T=horizon
    )


def doob_check(batch: BatchPath, level: float, i: int = 1, k_se: float = 3.0) -> TestReport:
    """P[sup_t Z^i_t >= K] <= E[Z^i_0] / K, on the recorded grid."""
    if level <= 0.0:
        raise ParameterError(f"level must be positive, got {level}")
    hits = (batch.totals[:, :, i - 1].max(axis=1) >= level).astype(float)
    freq = float(hits.mean())
    se = math.sqrt(max(freq * (1.0 - freq), 0.0) / batch.n_replicas)
    bound = float(batch.totals[:, 0, i - 1].mean()) / level
    return TestReport.judge(
        f"doob_z{i}", freq, bound + k_se * se, n=batch.n_replicas, level=level
    )


def log_moment_profile(batch: BatchPath) -> np.ndarray:
    """Replica mean of (2/N) sum x_i (2 + |log x_i|) per coordinate at each snapshot."""
    if batch.snapshots is None:
        raise PreconditionError("log moments need full-configuration snapshots")
    x = batch.snapshots
    with np.errstate(divide="ignore"):
        logs = np.where(x > 0.0, np.abs(np.log(np.where(x > 0.0, x, 1.0))), 0.0)
    stat = 2.0 * (x * (2.0 + logs)).mean(axis=2)         # (B, T, 2)
    return stat.mean(axis=0)
