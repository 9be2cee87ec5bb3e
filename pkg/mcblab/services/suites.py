"""
Convergence Suites and the Acceptance Battery

Harnesses that turn simulations into TestReports: the gamma -> infinity
comparison, the total-mass limit, the finite systems scheme via
F-transforms, and the numbered acceptance items run by `verify`.

Trend acceptance: a sequence of distances passes when no successive
increase exceeds its slack (the 1% KS critical value for KS trends, two
combined standard errors for transform trends).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..config import get_settings
from ..errors import ParameterError
from ..schemas.analysis import TestReport
from ..schemas.dynamics import BatchPath, RecordMode, Scheme, SimParams, SystemState
from ..schemas.measures import Axis, BoundaryPoint, QuadrantPoint, TruncationWindow
from ..storage.artifact_store import render_batch_csv
from .analysis import (
    jump_census_check,
    lemma28_constant,
    lemma29_check,
    martingale_check,
    mixed_moment_check,
    one_point_moment_check,
    realized_qv_ratio,
)
from .duality import (
    BOUNDARY_TEST_POINTS,
    QUADRANT_TEST_POINTS,
    F_array,
    _xy,
    duality_residual_samples,
    harmonicity_residual,
    summarize_duality,
    transform_separation,
)
from .dynamics import beta_n, heat_flow_array, rescaled_batch, simulate_batch
from .measures import (
    TruncatedJumpSampler,
    harmonic_pth_moment,
    harmonic_sample_array,
    jump_tail_bound_check,
    large_jump_first_moment_bound,
    nu_interval_mass,
    nu_mean_axis2,
    nu_tail_bounds,
    nu_truncated_second_moment,
    quadrature_interval_mass,
)
from .reference import LIMIT_BRANCHING_RATE, limit_diffusion_batch, mcb_gamma_batch
from .replicas import ReplicaRunner, block_rng
from .statistics import (
    combined_se,
    complex_mean_and_se,
    ks_critical_value,
    ks_distance,
    mean_and_se,
    quantile_agreement,
)

logger = logging.getLogger(__name__)

# independent random streams per harness component
STREAM_MCB = 0
STREAM_LIMIT = 1
STREAM_GAMMA = 2
STREAM_CENSUS = 3
STREAM_ORACLE = 4
STREAM_AUX = 5

CENSUS_EPS = 0.25


@dataclass
class SuiteResult:
    """Reports of one harness plus the rows behind its tables and plots."""

    name: str
    reports: list[TestReport] = field(default_factory=list)
    tables: dict[str, list[dict]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def extend(self, other: "SuiteResult") -> None:
        self.reports.extend(other.reports)
        for key, rows in other.tables.items():
            self.tables.setdefault(key, []).extend(rows)


def _half_half_coords(n_sites: int, magnitude: float = 1.0) -> np.ndarray:
    return SystemState.half_half(n_sites, magnitude).coords


def _mcb_batch(
    runner: ReplicaRunner,
    initial: SystemState,
    params: SimParams,
    replicas: int,
    stream: int = STREAM_MCB,
) -> BatchPath:
    def block(b, rng):
        return simulate_batch(initial, params, rng, n_replicas=b.size, first_replica=b.first)

    return runner.run_batches(block, replicas, stream)


def _trend_report(name: str, values: Sequence[float], slacks: Sequence[float], **metadata) -> TestReport:
    """Largest increase beyond its slack; passes when <= 0."""
    values = list(values)
    if len(values) < 2:
        return TestReport.judge(name, 0.0, 0.0, n=len(values), **metadata)
    excess = max(b - a - s for a, b, s in zip(values, values[1:], slacks))
    return TestReport.judge(name, excess, 0.0, n=len(values), values=values, **metadata)


def _aux_rng(runner: ReplicaRunner, key: int) -> np.random.Generator:
    """Single stream for checks that are not split into replica blocks."""
    return block_rng(runner.master_seed, key, stream=STREAM_AUX)


def _mean_report(name: str, sample: np.ndarray, target: float, k_se: float = 3.0, **metadata) -> TestReport:
    mean, se = mean_and_se(sample)
    return TestReport.judge(name, abs(mean - target), k_se * se, n=len(sample), **metadata)


# ---------------------------------------------------------------------------
# MCB(gamma) -> MCB(inf)
# ---------------------------------------------------------------------------

def theorem0_suite(
    gamma_grid: Sequence[float],
    n_sites: int,
    t: float,
    replicas: int,
    seed: int,
    runner: Optional[ReplicaRunner] = None,
    final_ks: Optional[float] = 0.08,
) -> SuiteResult:
    """Total-mass KS distance between MCB(gamma) and MCB(inf) at model time t."""
    if any(b <= a for a, b in zip(gamma_grid, list(gamma_grid)[1:])):
        raise ParameterError("gamma_grid must be increasing")
    settings = get_settings()
    runner = runner or ReplicaRunner(master_seed=seed)
    coords = _half_half_coords(n_sites)
    z0 = coords.mean(axis=0)

    params = SimParams(h=settings.step_size, horizon=t, seed=seed)
    infinite = _mcb_batch(runner, SystemState.from_coords(coords), params, replicas)
    result = SuiteResult(name="theorem0")
    critical = ks_critical_value(replicas, replicas)

    ks = {0: [], 1: []}
    for g_index, gamma in enumerate(gamma_grid):
        def block(b, rng, gamma=gamma):
            start = np.broadcast_to(coords, (b.size,) + coords.shape)
            return mcb_gamma_batch(
                start, gamma, settings.reference_step_size, t, rng, first_replica=b.first
            )

        finite = runner.run_batches(block, replicas, stream=STREAM_GAMMA + 10 * g_index)
        row = {"gamma": gamma, "n_sites": n_sites, "t": t}
        for i in (0, 1):
            d = ks_distance(finite.totals[:, -1, i], infinite.totals[:, -1, i])
            ks[i].append(d)
            row[f"ks_z{i + 1}"] = d
            result.reports.append(
                _mean_report(
                    f"theorem0_mean_z{i + 1}_gamma{gamma:g}", finite.totals[:, -1, i], z0[i],
                    gamma=gamma,
                )
            )
        separation, _ = transform_separation(
            finite.final_coords[:, 0, :], infinite.final_coords[:, 0, :]
        )
        row["site_transform_separation"] = separation
        result.tables.setdefault("theorem0", []).append(row)
        logger.info("theorem0 gamma=%g: KS %.4f / %.4f", gamma, ks[0][-1], ks[1][-1])

    for i in (0, 1):
        result.reports.append(
            _trend_report(
                f"theorem0_ks_trend_z{i + 1}", ks[i], [critical] * len(ks[i]), slack=critical
            )
        )
        if final_ks is not None:
            result.reports.append(
                TestReport.judge(f"theorem0_final_ks_z{i + 1}", ks[i][-1], final_ks, n=replicas)
            )
    for i in (0, 1):
        result.reports.append(
            _mean_report(f"theorem0_mean_z{i + 1}_infinite", infinite.totals[:, -1, i], z0[i])
        )
    return result


# ---------------------------------------------------------------------------
# Total masses -> limit diffusion
# ---------------------------------------------------------------------------

def _record_every(n_sites: int, h: float, per_unit: int = 100) -> int:
    return max(1, int(round(beta_n(n_sites) / (per_unit * h))))


def theorem1_suite(
    n_grid: Sequence[int],
    t: float,
    replicas: int,
    seed: int,
    runner: Optional[ReplicaRunner] = None,
    magnitude: float = 1.0,
    census_replicas: Optional[int] = None,
) -> SuiteResult:
    """Rescaled MCB(inf) total masses against the diffusion with rate 8/pi."""
    if any(n < 3 for n in n_grid) or any(b <= a for a, b in zip(n_grid, list(n_grid)[1:])):
        raise ParameterError("n_grid must be increasing with every N >= 3")
    settings = get_settings()
    runner = runner or ReplicaRunner(master_seed=seed)
    result = SuiteResult(name="theorem1")
    critical = ks_critical_value(replicas, replicas)

    z0 = _half_half_coords(max(n_grid[0], 2), magnitude).mean(axis=0)

    def limit_block(b, rng):
        start = np.broadcast_to(z0, (b.size, 2))
        return limit_diffusion_batch(
            start, settings.reference_step_size, t, rng, first_replica=b.first
        )

    limit = runner.run_batches(limit_block, replicas, STREAM_LIMIT)
    limit_qv, _ = realized_qv_ratio(limit)

    ks = {0: [], 1: []}
    census_replicas = census_replicas or max(10, replicas // 50)
    for n_index, n_sites in enumerate(n_grid):
        beta = beta_n(n_sites)
        h = settings.step_size
        params = SimParams(
            h=h, horizon=t * beta, seed=seed, record_every=_record_every(n_sites, h)
        )
        state = SystemState.half_half(n_sites, magnitude)
        batch = rescaled_batch(
            _mcb_batch(runner, state, params, replicas, STREAM_MCB + 10 * n_index), n_sites
        )
        row = {"n_sites": n_sites, "t": t, "beta": beta}
        for i in (0, 1):
            d = ks_distance(batch.totals[:, -1, i], limit.totals[:, -1, i])
            ks[i].append(d)
            row[f"ks_z{i + 1}"] = d
            result.reports.append(
                _mean_report(
                    f"theorem1_mean_z{i + 1}_N{n_sites}", batch.totals[:, -1, i],
                    state.z[i], n_sites=n_sites,
                )
            )
        ratio, ratio_se = realized_qv_ratio(batch)
        row.update(qv_ratio=ratio, qv_ratio_se=ratio_se, limit_qv_ratio=limit_qv)

        census_params = SimParams(
            scheme=Scheme.TAU_LEAP,
            h=h,
            window=TruncationWindow(delta=settings.delta),
            horizon=t * beta,
            seed=seed,
            record_mode=RecordMode.JUMP_LOG,
            record_every=params.record_every,
            jump_log_threshold=CENSUS_EPS,
        )
        census_batch = _mcb_batch(
            runner, state, census_params, census_replicas, STREAM_CENSUS + 10 * n_index
        )
        census = jump_census_check(
            census_batch, CENSUS_EPS, n_sites, t, log_threshold=CENSUS_EPS
        )
        result.reports.append(census.model_copy(update={"name": f"theorem1_census_N{n_sites}"}))
        row.update(census_mean=census.statistic, census_bound=census.metadata["bound"])
        result.tables.setdefault("theorem1", []).append(row)
        logger.info(
            "theorem1 N=%d: KS %.4f / %.4f, QV ratio %.3f", n_sites, ks[0][-1], ks[1][-1], ratio
        )

    for i in (0, 1):
        result.reports.append(
            _trend_report(f"theorem1_ks_trend_z{i + 1}", ks[i], [critical] * len(ks[i]), slack=critical)
        )
    last_ratio = result.tables["theorem1"][-1]["qv_ratio"]
    result.reports.append(
        TestReport.judge(
            "theorem1_qv_ratio",
            abs(last_ratio - LIMIT_BRANCHING_RATE) / LIMIT_BRANCHING_RATE,
            0.25,
            n=replicas,
            ratio=last_ratio,
            n_sites=n_grid[-1],
        )
    )
    return result


# ---------------------------------------------------------------------------
# Finite systems scheme via F-transforms
# ---------------------------------------------------------------------------

def _transform_pairs(points: Sequence[QuadrantPoint]) -> list[tuple[QuadrantPoint, BoundaryPoint]]:
    return [(q, b) for q in points for b in BOUNDARY_TEST_POINTS]


def theorem2_suite(
    n_grid: Sequence[int],
    t: float,
    points: Sequence[QuadrantPoint],
    replicas: int,
    seed: int,
    runner: Optional[ReplicaRunner] = None,
    s: float = 1.0,
    magnitude: float = 1.0,
) -> SuiteResult:
    """F-transforms of (total mass, two sites) against the limit mixture, and a two-time check.

    For each pair (y, b) the MCB side is E[F(Z~_t, y) F(X~_t(0), b)
    F(X~_t(N-1), b)], the target E[F(Z_t, y) F(Z_t, b)^2] with Z the limit
    diffusion (the site laws are Q_{Z_t} and F(., b) is harmonic).
    """
    settings = get_settings()
    runner = runner or ReplicaRunner(master_seed=seed)
    result = SuiteResult(name="theorem2")
    pairs = _transform_pairs(points)
    z0 = _half_half_coords(max(n_grid[0], 2), magnitude).mean(axis=0)

    def limit_block(b, rng):
        return limit_diffusion_batch(
            np.broadcast_to(z0, (b.size, 2)), settings.reference_step_size, t, rng,
            first_replica=b.first,
        )

    limit_z = runner.run_batches(limit_block, replicas, STREAM_LIMIT).totals[:, -1, :]
    targets = []
    for y, b in pairs:
        yy, bb = _xy(y), _xy(b)
        targets.append(complex_mean_and_se(F_array(limit_z, yy) * F_array(limit_z, bb) ** 2))

    gaps: list[list[float]] = [[] for _ in pairs]
    ses: list[list[float]] = [[] for _ in pairs]
    site_pair_batches = {}
    y1, y2 = BoundaryPoint.type1(1.0), BoundaryPoint.type2(1.0)
    for n_index, n_sites in enumerate(n_grid):
        beta = beta_n(n_sites)
        state = SystemState.half_half(n_sites, magnitude)
        params = SimParams(h=settings.step_size, horizon=t * beta, seed=seed)
        follow = SimParams(h=settings.step_size, horizon=s, seed=seed)

        def block(blk, rng):
            first = simulate_batch(state, params, rng, n_replicas=blk.size, first_replica=blk.first)
            later = simulate_batch(first.final_coords, follow, rng, first_replica=blk.first)
            return np.stack([first.final_coords, later.final_coords], axis=1)   # (B, 2, N, 2)

        snaps = runner.map_arrays(block, replicas, STREAM_MCB + 10 * n_index)
        at_t = snaps[:, 0]
        z_t = at_t.mean(axis=1)
        site_pair_batches[n_sites] = snaps
        for j, (y, b) in enumerate(pairs):
            yy, bb = _xy(y), _xy(b)
            values = F_array(z_t, yy) * F_array(at_t[:, 0, :], bb) * F_array(at_t[:, -1, :], bb)
            mean, se = complex_mean_and_se(values)
            target, target_se = targets[j]
            gaps[j].append(abs(mean - target))
            ses[j].append(combined_se(se, target_se))
            result.tables.setdefault("theorem2", []).append({
                "n_sites": n_sites,
                "y1": yy[0], "y2": yy[1],
                "b1": bb[0], "b2": bb[1],
                "gap": gaps[j][-1], "se": ses[j][-1],
            })
        logger.info("theorem2 N=%d: largest transform gap %.4f", n_sites, max(g[-1] for g in gaps))

    worst = 0.0
    for j in range(len(pairs)):
        slacks = [2.0 * combined_se(a, b) for a, b in zip(ses[j], ses[j][1:])]
        report = _trend_report("transform", gaps[j], slacks)
        worst = max(worst, report.statistic)
    result.reports.append(
        TestReport.judge("theorem2_transform_trend", worst, 0.0, n=replicas, pairs=len(pairs))
    )

    # two-time check of one site at the largest N
    snaps = site_pair_batches[n_grid[-1]]
    theta = snaps[:, 0].mean(axis=1)                       # per-replica Z~_t
    sim = F_array(snaps[:, 0, 0, :], _xy(y1)) * F_array(snaps[:, 1, 0, :], _xy(y2))
    sim_mean, sim_se = complex_mean_and_se(sim)
    a = math.exp(-s)
    aux = runner.map_arrays(
        lambda blk, rng: harmonic_sample_array(
            np.broadcast_to(_xy(y1) + a * _xy(y2), (blk.size, 2)), rng
        ),
        replicas,
        STREAM_AUX,
    )
    g2 = F_array(theta, (1.0 - a) * _xy(y2)) * F_array(theta, aux)
    g2_mean, g2_se = complex_mean_and_se(g2)
    result.reports.append(
        TestReport.judge(
            "theorem2_two_time_g2",
            abs(sim_mean - g2_mean),
            3.0 * combined_se(sim_se, g2_se),
            n=replicas,
            n_sites=n_grid[-1],
            s=s,
        )
    )
    return result


# ---------------------------------------------------------------------------
# Walk-on-spheres oracle for the harmonic measure
# ---------------------------------------------------------------------------

def walk_on_spheres_exit(
    x: QuadrantPoint,
    n_samples: int,
    rng: np.random.Generator,
    tolerance: float = 1e-3,
    max_rounds: int = 100_000,
) -> np.ndarray:
    """Brute-force exit points of planar Brownian motion from the quadrant.

    Each walker jumps to a uniform point on the largest circle inside the
    quadrant around it and is absorbed once within tolerance * min(x1, x2)
    of an axis, then snapped to that axis. Returns (n_samples, 2).
    """
    start = np.array(x.as_tuple(), dtype=float)
    if x.on_boundary:
        return np.broadcast_to(start, (n_samples, 2)).copy()
    eps = tolerance * float(start.min())
    pos = np.broadcast_to(start, (n_samples, 2)).copy()
    alive = np.ones(n_samples, dtype=bool)
    for _ in range(max_rounds):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        radius = pos[idx].min(axis=1)
        angle = rng.uniform(0.0, 2.0 * math.pi, idx.size)
        pos[idx, 0] += radius * np.cos(angle)
        pos[idx, 1] += radius * np.sin(angle)
        alive[idx] = pos[idx].min(axis=1) > eps
    else:
        raise ParameterError("walk-on-spheres oracle did not absorb every walker")
    out = np.zeros_like(pos)
    type1 = pos[:, 1] <= pos[:, 0]
    out[type1, 0] = pos[type1, 0]
    out[~type1, 1] = pos[~type1, 1]
    return out


def _signed(points: np.ndarray) -> np.ndarray:
    """Type1 magnitudes positive, Type2 magnitudes negative."""
    return points[:, 0] - points[:, 1]


# ---------------------------------------------------------------------------
# Acceptance battery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BatterySizes:
    replicas: int
    sampler_draws: int
    oracle_samples: int
    harmonic_samples: int
    n_grid: tuple[int, ...]
    gamma_grid: tuple[float, ...]


FULL_SIZES = BatterySizes(
    replicas=10_000,
    sampler_draws=1_000_000,
    oracle_samples=100_000,
    harmonic_samples=100_000,
    n_grid=(32, 128, 512),
    gamma_grid=(10.0, 50.0, 200.0),
)
QUICK_SIZES = BatterySizes(
    replicas=1_000,
    sampler_draws=200_000,
    oracle_samples=10_000,
    harmonic_samples=20_000,
    n_grid=(8, 16, 32),
    gamma_grid=(10.0, 50.0, 200.0),
)

ACCEPTANCE_ITEMS = {
    1: "closed forms",
    2: "sampler vs closed form",
    3: "harmonic sampler vs oracle",
    4: "moment bounds",
    5: "dynamics trivial exactness",
    6: "one-point moment identity",
    7: "martingale and mixed moment",
    8: "Doob-type inequality with constant 1218",
    9: "gamma -> infinity trend",
    10: "total-mass limit trend",
    11: "finite systems scheme trend",
    12: "duality identity",
    13: "determinism",
}

RELATIVE_TOL = 1e-9


def _relative(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def item_closed_forms(sizes: BatterySizes, runner: ReplicaRunner) -> SuiteResult:
    result = SuiteResult(name="item1")
    grid = (0.1, 0.5, 1.0, 2.0, 10.0)
    worst = 0.0
    for eps in grid:
        axis2_tail, _, axis1_complement, _ = nu_tail_bounds(eps)
        worst = max(worst, _relative(axis2_tail, (2.0 / math.pi) / (1.0 + eps * eps)))
        if eps < 1.0:
            expected = (8.0 / math.pi) / (eps * (4.0 - eps * eps)) - 2.0 / math.pi
        else:
            expected = (2.0 / math.pi) / (eps * (2.0 + eps))
        worst = max(worst, _relative(axis1_complement, expected))
        worst = max(
            worst,
            _relative(nu_interval_mass(Axis.AXIS2, 0.0, eps), quadrature_interval_mass(Axis.AXIS2, 0.0, eps)),
            _relative(
                nu_interval_mass(Axis.AXIS1, 1.0 + eps, math.inf),
                quadrature_interval_mass(Axis.AXIS1, 1.0 + eps, math.inf),
            ),
            _relative(
                nu_truncated_second_moment(Axis.AXIS1, eps),
                (4.0 / math.pi) * (math.log1p(eps) - eps / (1.0 + eps)),
            ),
            _relative(
                nu_truncated_second_moment(Axis.AXIS2, eps),
                (2.0 / math.pi) * (math.log1p(eps * eps) - eps * eps / (1.0 + eps * eps)),
            ),
        )
    worst = max(worst, abs(nu_mean_axis2(cross_check=True) - 1.0))
    result.reports.append(TestReport.judge("item1_nu_closed_forms", worst, RELATIVE_TOL, n=len(grid)))
    lemma28 = max(abs(lemma28_constant(n) - math.e) for n in (3, 10, 1000, 10 ** 6))
    result.reports.append(TestReport.judge("item1_lemma28_constant", lemma28, 1e-12, n=4))
    return result


def item_sampler(sizes: BatterySizes, runner: ReplicaRunner) -> SuiteResult:
    """Restricted nu draws at delta = 0.5 against tail masses and truncated moments."""
    result = SuiteResult(name="item2")
    window = TruncationWindow(delta=0.5)
    sampler = TruncatedJumpSampler(window)
    draws = runner.map_blocks(
        lambda b, rng: sampler.sample(b.size, rng), sizes.sampler_draws, STREAM_AUX
    )
    is_axis2 = np.concatenate([d[0] for d in draws])
    values = np.concatenate([d[1] for d in draws])
    total = sampler.total_mass
    n = values.size

    def second_axis1(x: float) -> float:
        g = lambda v: nu_truncated_second_moment(Axis.AXIS1, v)   # noqa: E731
        lo, hi = 1.0 - window.delta, 1.0 + window.delta
        return g(x) - (g(min(x, hi)) - g(min(x, lo)))

    checks = [
        ("axis2_tail_1", np.where(is_axis2 & (values > 1.0), 1.0, 0.0), 1.0 / math.pi),
        ("axis1_tail_2", np.where(~is_axis2 & (values > 2.0), 1.0, 0.0), nu_interval_mass(Axis.AXIS1, 2.0, math.inf)),
    ]
    for x in (0.5, 1.0, 2.0):
        checks.append((
            f"axis2_second_moment_{x:g}",
            np.where(is_axis2 & (values < x), values ** 2, 0.0),
            nu_truncated_second_moment(Axis.AXIS2, x),
        ))
        checks.append((
            f"axis1_second_moment_{x:g}",
            np.where(~is_axis2 & (values < x), (values - 1.0) ** 2, 0.0),
            second_axis1(x),
        ))
    for name, sample, exact in checks:
        estimate = total * float(sample.mean())
        result.reports.append(
            TestReport.judge(f"item2_{name}", _relative(estimate, exact), 0.01, n=n, exact=exact)
        )
        result.tables.setdefault("nu_sampler", []).append(
            {"quantity": name, "estimate": estimate, "exact": exact}
        )
    return result


def item_harmonic(sizes: BatterySizes, runner: ReplicaRunner) -> SuiteResult:
    result = SuiteResult(name="item3")
    for k, start in enumerate((QuadrantPoint(x1=1.0, x2=1.0), QuadrantPoint(x1=2.0, x2=0.5))):
        n = sizes.oracle_samples
        th = np.array(start.as_tuple())
        exact = runner.map_arrays(
            lambda b, rng: harmonic_sample_array(np.broadcast_to(th, (b.size, 2)), rng),
            n, STREAM_AUX + 10 * k,
        )
        oracle = runner.map_arrays(
            lambda b, rng: walk_on_spheres_exit(start, b.size, rng), n, STREAM_ORACLE + 10 * k
        )
        p_exact = float(np.mean(exact[:, 0] > 0.0))
        p_oracle = float(np.mean(oracle[:, 0] > 0.0))
        se = math.sqrt(p_exact * (1 - p_exact) / n + p_oracle * (1 - p_oracle) / n)
        label = f"{start.x1:g}_{start.x2:g}"
        result.reports.append(
            TestReport.judge(f"item3_type_probability_{label}", abs(p_exact - p_oracle), 3.0 * se, n=n)
        )
        for q in (0.1, 0.5, 0.9):
            stat, q_se = quantile_agreement(_signed(exact), _signed(oracle), q)
            result.reports.append(
                TestReport.judge(f"item3_quantile_{q:g}_{label}", stat, 3.0 * q_se, n=n)
            )

    n = sizes.harmonic_samples
    for j, theta in enumerate(QUADRANT_TEST_POINTS):
        for m, y in enumerate(BOUNDARY_TEST_POINTS):
            residual = harmonicity_residual(theta, y, n, _aux_rng(runner, 1000 + 10 * j + m))
            result.reports.append(
                TestReport.judge(
                    f"item3_harmonicity_{j}_{m}", residual.modulus, 3.0 * residual.standard_error, n=n
                )
            )
    return result


def item_moment_bounds(sizes: BatterySizes, runner: ReplicaRunner) -> SuiteResult:
    result = SuiteResult(name="item4")
    key = 0
    for p in (1.1, 1.5, 1.9):
        for x in QUADRANT_TEST_POINTS:
            for i in (1, 2):
                key += 1
                moment = harmonic_pth_moment(x, p, i, sizes.harmonic_samples, _aux_rng(runner, 2000 + key))
                result.reports.append(
                    TestReport.judge(
                        f"item4_harmonic_moment_p{p:g}_{x.x1:g}_{x.x2:g}_i{i}",
                        moment.estimate,
                        moment.bound + 3.0 * moment.standard_error,
                        n=moment.n_samples,
                        sharp_bound=moment.sharp_bound,
                    )
                )
                result.tables.setdefault("harmonic_moments", []).append({
                    "p": p, "x1": x.x1, "x2": x.x2, "i": i,
                    "estimate": moment.estimate, "se": moment.standard_error,
                    "bound": moment.bound, "sharp_bound": moment.sharp_bound,
                })
    for x in BOUNDARY_TEST_POINTS:
        for scale in (0.1, 1.0):
            lhs, rhs = large_jump_first_moment_bound(x, scale)
            result.reports.append(
                TestReport.judge(
                    f"item4_large_jumps_{x.kind.value}_{x.magnitude:g}_{scale:g}", lhs, rhs
                )
            )
    for L in (0.5, 1.0, 2.0, 10.0):
        mass, bound = jump_tail_bound_check(L)
        result.reports.append(TestReport.judge(f"item4_jump_tail_{L:g}", mass, bound))
    return result


def item_trivial_dynamics(sizes: BatterySizes, runner: ReplicaRunner) -> SuiteResult:
    result = SuiteResult(name="item5")
    settings = get_settings()
    single = SystemState.from_coords([[2.0, 0.0]])
    single_type = SystemState.from_coords([[m, 0.0] for m in (1.0, 2.0, 3.0, 4.0, 5.0)])
    expected = heat_flow_array(single_type.coords, 1.0)
    for k, scheme in enumerate((Scheme.HARMONIC_SPLIT, Scheme.TAU_LEAP)):
        params = SimParams(
            scheme=scheme, h=settings.step_size, horizon=1.0,
            window=TruncationWindow(delta=settings.delta),
        )
        frozen = simulate_batch(single, params, _aux_rng(runner, 3000 + k), n_replicas=4)
        drift = float(np.max(np.abs(frozen.totals - frozen.totals[:, :1, :])))
        result.reports.append(TestReport.judge(f"item5_frozen_{scheme.value}", drift, 0.0, n=4))

        flowed = simulate_batch(single_type, params, _aux_rng(runner, 3100 + k), n_replicas=4)
        error = float(np.max(np.abs(flowed.final_coords - expected)))
        if scheme == Scheme.HARMONIC_SPLIT:
            tolerance = 1e-6
        else:
            spread = float(np.max(np.abs(single_type.coords - single_type.z)))
            tolerance = settings.step_size * spread
        result.reports.append(
            TestReport.judge(f"item5_heat_flow_{scheme.value}", error, tolerance, n=4)
        )
    return result


def item_one_point(sizes: BatterySizes, runner: ReplicaRunner) -> SuiteResult:
    result = SuiteResult(name="item6")
    settings = get_settings()
    state = SystemState.half_half(4)
    t, p = 0.5, 1.5
    for k, scheme in enumerate((Scheme.HARMONIC_SPLIT, Scheme.TAU_LEAP)):
        params = SimParams(
            scheme=scheme, h=settings.step_size, horizon=t,
            window=TruncationWindow(delta=settings.delta),
        )
        batch = _mcb_batch(runner, state, params, sizes.replicas, STREAM_MCB + 10 * k)
        report = one_point_moment_check(
            batch.final_coords, state.coords, t, p, _aux_rng(runner, 4000 + k)
        )
        result.reports.append(report.model_copy(update={"name": f"item6_{scheme.value}"}))
    return result


def item_martingale(sizes: BatterySizes, runner: ReplicaRunner) -> SuiteResult:
    result = SuiteResult(name="item7")
    settings = get_settings()
    for n_index, n_sites in enumerate((10, 50)):
        for k, scheme in enumerate((Scheme.HARMONIC_SPLIT, Scheme.TAU_LEAP)):
            params = SimParams(
                scheme=scheme, h=settings.step_size, horizon=1.0,
                window=TruncationWindow(delta=settings.delta),
            )
            batch = _mcb_batch(
                runner, SystemState.half_half(n_sites), params, sizes.replicas,
                STREAM_MCB + 100 * n_index + 10 * k,
            )
            for t in (0.5, 1.0):
                tag = f"N{n_sites}_{scheme.value}_t{t:g}"
                for report in martingale_check(batch, t):
                    result.reports.append(report.model_copy(update={"name": f"item7_{report.name}_{tag}"}))
                mixed = mixed_moment_check(batch, t)
                result.reports.append(mixed.model_copy(update={"name": f"item7_mixed_{tag}"}))
    return result


def item_lemma29(sizes: BatterySizes, runner: ReplicaRunner) -> SuiteResult:
    result = SuiteResult(name="item8")
    settings = get_settings()
    for n_index, n_sites in enumerate(sizes.n_grid[:2]):
        h = settings.step_size
        params = SimParams(
            h=h, horizon=beta_n(n_sites), record_every=_record_every(n_sites, h, per_unit=200)
        )
        batch = rescaled_batch(
            _mcb_batch(runner, SystemState.half_half(n_sites), params, sizes.replicas,
                       STREAM_MCB + 10 * n_index),
            n_sites,
        )
        report = lemma29_check(batch, n_sites, 1.0)
        result.reports.append(report.model_copy(update={"name": f"item8_N{n_sites}"}))
    return result


def item_theorem0(sizes: BatterySizes, runner: ReplicaRunner) -> SuiteResult:
    critical = ks_critical_value(sizes.replicas, sizes.replicas)
    return theorem0_suite(
        sizes.gamma_grid, 10, 1.0, sizes.replicas, runner.master_seed,
        runner=runner, final_ks=max(0.08, critical),
    )


def item_theorem1(sizes: BatterySizes, runner: ReplicaRunner) -> SuiteResult:
    return theorem1_suite(sizes.n_grid, 1.0, sizes.replicas, runner.master_seed, runner=runner)


def item_theorem2(sizes: BatterySizes, runner: ReplicaRunner) -> SuiteResult:
    return theorem2_suite(
        sizes.n_grid, 1.0, QUADRANT_TEST_POINTS, sizes.replicas, runner.master_seed, runner=runner
    )


def item_duality(sizes: BatterySizes, runner: ReplicaRunner) -> SuiteResult:
    result = SuiteResult(name="item12")
    settings = get_settings()
    n_sites, t, s = 10, 0.5, 2.0
    marks = [(0, BoundaryPoint.type1(1.0)), (n_sites - 1, BoundaryPoint.type2(1.0))]
    state = SystemState.half_half(n_sites)
    warm = SimParams(h=settings.step_size, horizon=t)

    def block(b, rng):
        start = simulate_batch(state, warm, rng, n_replicas=b.size).final_coords
        return duality_residual_samples(start, warm, s, None, marks, rng)

    parts = runner.map_blocks(block, sizes.replicas, STREAM_MCB)
    pieces = {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}
    y_sum = sum(np.array(y.coords) for _, y in marks)
    residual = summarize_duality(pieces, s, float(np.linalg.norm(y_sum)))
    result.reports.append(
        TestReport.judge(
            "item12_duality_residual",
            residual.residual.modulus,
            3.0 * residual.residual.standard_error,
            n=sizes.replicas,
            remainder=abs(residual.rhs_remainder.estimate),
            remainder_bound=residual.remainder_bound,
        )
    )
    result.reports.append(
        TestReport.judge(
            "item12_remainder_bound",
            residual.rhs_remainder.modulus,
            residual.remainder_bound + 3.0 * residual.rhs_remainder.standard_error,
            n=sizes.replicas,
        )
    )
    return result


def item_determinism(sizes: BatterySizes, runner: ReplicaRunner) -> SuiteResult:
    """The same run on one and on several workers renders byte-identical CSV."""
    result = SuiteResult(name="item13")
    settings = get_settings()
    params = SimParams(h=settings.step_size, horizon=0.5, record_every=10)
    state = SystemState.half_half(10)
    replicas = 4 * runner.block_size
    texts = []
    for workers in (1, max(2, runner.workers)):
        other = ReplicaRunner(
            master_seed=runner.master_seed, workers=workers, block_size=runner.block_size
        )
        batch = _mcb_batch(other, state, params, replicas)
        texts.append(render_batch_csv(batch, config_hash="determinism", seed=runner.master_seed))
    result.reports.append(
        TestReport.judge("item13_byte_identical", 0.0 if texts[0] == texts[1] else 1.0, 0.0, n=2)
    )
    return result


ITEM_RUNNERS: dict[int, Callable[[BatterySizes, ReplicaRunner], SuiteResult]] = {
    1: item_closed_forms,
    2: item_sampler,
    3: item_harmonic,
    4: item_moment_bounds,
    5: item_trivial_dynamics,
    6: item_one_point,
    7: item_martingale,
    8: item_lemma29,
    9: item_theorem0,
    10: item_theorem1,
    11: item_theorem2,
    12: item_duality,
    13: item_determinism,
}


def acceptance_battery(
    items: Optional[Sequence[int]] = None,
    quick: bool = False,
    runner: Optional[ReplicaRunner] = None,
    on_item: Optional[Callable[[int, SuiteResult], None]] = None,
) -> dict[int, SuiteResult]:
    """Run the selected acceptance items in order; `on_item` sees each result as it lands."""
    selected = sorted(set(items)) if items else sorted(ITEM_RUNNERS)
    unknown = [i for i in selected if i not in ITEM_RUNNERS]
    if unknown:
        raise ParameterError(f"unknown acceptance items: {unknown}")
    sizes = QUICK_SIZES if quick else FULL_SIZES
    runner = runner or ReplicaRunner()
    results: dict[int, SuiteResult] = {}
    for item in selected:
        logger.info("acceptance item %d: %s", item, ACCEPTANCE_ITEMS[item])
        outcome = ITEM_RUNNERS[item](sizes, runner)
        results[item] = outcome
        logger.info(
            "acceptance item %d %s (%d reports)",
            item, "passed" if outcome.passed else "FAILED", len(outcome.reports),
        )
        if on_item is not None:
            on_item(item, outcome)
    return results
