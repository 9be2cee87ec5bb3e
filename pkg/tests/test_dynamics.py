"""Mean-field MCB(inf) system: single-site operations, both schemes, records."""

import math

import numpy as np
import pytest

from mcblab.errors import NoJumpError, ParameterError, ResourceLimitError
from mcblab.schemas.dynamics import RecordMode, Scheme, SimParams, SystemState
from mcblab.schemas.measures import Axis, BoundaryPoint, JumpMark, QuadrantPoint, TruncationWindow
from mcblab.services import dynamics
from mcblab.services.analysis import martingale_check, mixed_moment_check
from mcblab.services.dynamics import (
    MeanFieldSimulator,
    apply_jump,
    beta_n,
    heat_flow,
    heat_flow_array,
    jump_rate,
    lemma27_identity,
    log_moment_statistic,
    max_coordinate,
    mean_field_drift,
    rescaled_batch,
    rescaled_view,
    simulate,
    simulate_batch,
    step_harmonic_split,
    step_tau_leap,
)
from mcblab.services.measures import TruncatedJumpSampler
from mcblab.services.statistics import ks_critical_value, ks_distance


def tau_params(**kwargs) -> SimParams:
    return SimParams(scheme=Scheme.TAU_LEAP, window=TruncationWindow(delta=0.05), **kwargs)


class TestSiteOperations:
    def test_drift_single_site(self):
        state = SystemState.from_coords([[2.0, 0.0]])
        assert mean_field_drift(state, 0) == (0.0, 0.0)

    def test_drift_direct_evaluation(self):
        state = SystemState.from_coords([[0.0, 2.0], [1.0, 0.0], [0.5, 0.0], [0.5, 0.0]])
        # z = (0.5, 0.5)
        assert mean_field_drift(state, 0) == pytest.approx((0.5, -1.5))

    def test_jump_rate(self):
        state = SystemState.from_coords([[2.0, 0.0], [0.0, 2.0]])
        assert jump_rate(state, 0) == pytest.approx(0.5)
        same_type = SystemState.from_coords([[2.0, 0.0], [1.0, 0.0]])
        assert jump_rate(same_type, 0) == 0.0
        assert jump_rate(SystemState.from_coords([[0.0, 0.0], [1.0, 0.0]]), 0) == 0.0

    def test_apply_jump(self):
        x = BoundaryPoint.type1(2.0)
        assert apply_jump(x, JumpMark(axis=Axis.AXIS1, value=1.5)) == BoundaryPoint.type1(3.0)
        assert apply_jump(x, JumpMark(axis=Axis.AXIS2, value=0.25)) == BoundaryPoint.type2(0.5)
        assert apply_jump(x, JumpMark(axis=Axis.AXIS1, value=1.0)) == x

    def test_origin_cannot_jump(self):
        with pytest.raises(NoJumpError):
            apply_jump(BoundaryPoint.origin(), JumpMark(axis=Axis.AXIS1, value=2.0))

    def test_lemma27_identity_is_exact(self):
        state = SystemState.from_coords([[2.0, 0.0], [0.0, 1.0], [0.5, 0.0], [0.0, 3.0]])
        assert lemma27_identity(state) == pytest.approx(0.0, abs=1e-12)

    def test_log_moment_statistic(self):
        state = SystemState.half_half(4)
        assert log_moment_statistic(state, 1) == pytest.approx(2.0)
        zero = SystemState.from_coords([[0.0, 1.0], [0.0, 1.0]])
        assert log_moment_statistic(zero, 1) == 0.0


class TestHeatFlow:
    def test_identity_at_zero(self):
        coords = np.array([[1.0, 0.0], [0.0, 3.0]])
        np.testing.assert_array_equal(heat_flow_array(coords, 0.0), coords)

    def test_two_sites_at_log_two(self):
        flowed = heat_flow([QuadrantPoint(x1=1.0, x2=0.0), QuadrantPoint(x1=0.0, x2=1.0)], math.log(2.0))
        assert flowed[0].as_tuple() == pytest.approx((0.75, 0.25))
        assert flowed[1].as_tuple() == pytest.approx((0.25, 0.75))

    def test_long_time_limit(self):
        coords = np.array([[1.0, 0.0], [0.0, 3.0], [2.0, 0.0]])
        np.testing.assert_allclose(heat_flow_array(coords, 60.0), np.tile(coords.mean(axis=0), (3, 1)))

    def test_negative_time(self):
        with pytest.raises(ParameterError):
            heat_flow_array(np.zeros((2, 2)), -1.0)


class TestTimeScale:
    def test_beta_n(self):
        assert beta_n(3) == pytest.approx(3.0 / math.log(3.0))
        assert beta_n(3) == pytest.approx(2.7307, abs=1e-4)

    def test_rescaled_view_rejects_small_n(self):
        record = simulate(SystemState.half_half(2), SimParams(h=0.1, horizon=0.2))
        with pytest.raises(ParameterError):
            rescaled_view(record, 2)

    def test_rescaled_batch_keeps_model_times(self, rng):
        batch = simulate_batch(SystemState.half_half(10), SimParams(h=0.1, horizon=1.0), rng, n_replicas=3)
        rescaled = rescaled_batch(batch, 10)
        np.testing.assert_allclose(rescaled.times * rescaled.time_scale, batch.times)
        assert rescaled.times[-1] == pytest.approx(1.0 / beta_n(10))


class TestTrivialDynamics:
    @pytest.mark.parametrize("scheme", [Scheme.HARMONIC_SPLIT, Scheme.TAU_LEAP])
    def test_single_site_is_frozen(self, scheme):
        params = SimParams(scheme=scheme, h=0.05, horizon=1.0, window=TruncationWindow(delta=0.05))
        record = simulate(SystemState.from_coords([[2.5, 0.0]]), params)
        np.testing.assert_array_equal(record.totals, np.tile([2.5, 0.0], (len(record.times), 1)))

    def test_horizon_zero_keeps_initial_state(self):
        state = SystemState.half_half(6)
        record = simulate(state, SimParams(horizon=0.0))
        assert record.times.tolist() == [0.0]
        np.testing.assert_array_equal(record.totals[0], state.z)

    def test_horizon_below_tolerance_takes_one_step(self, rng):
        batch = simulate_batch(SystemState.half_half(4), SimParams(h=1.0, horizon=1e-12), rng)
        assert batch.times.tolist() == [0.0, 1e-12]
        assert SimParams(h=1.0, horizon=1e-12).n_steps == 1

    def test_single_type_follows_heat_flow_exactly(self, rng):
        coords = np.array([[1.0, 0.0], [3.0, 0.0], [0.5, 0.0], [2.0, 0.0]])
        params = SimParams(h=0.01, horizon=1.0)
        batch = simulate_batch(coords[None], params, rng)
        np.testing.assert_allclose(batch.final_coords[0], heat_flow_array(coords, 1.0), atol=1e-9)

    def test_tau_leap_single_type_within_step_error(self, rng):
        coords = np.array([[1.0, 0.0], [3.0, 0.0], [0.5, 0.0], [2.0, 0.0]])
        h = 0.01
        batch = simulate_batch(coords[None], tau_params(h=h, horizon=1.0), rng)
        spread = coords[:, 0].max() - coords[:, 0].min()
        np.testing.assert_allclose(
            batch.final_coords[0], heat_flow_array(coords, 1.0), atol=h * spread
        )

    def test_harmonic_split_step_preserves_boundary(self, rng):
        state = SystemState.half_half(8)
        after = step_harmonic_split(state, SimParams(h=0.1), rng)
        assert np.all(np.minimum(after.coords[:, 0], after.coords[:, 1]) == 0.0)
        assert after.clock == pytest.approx(0.1)
        np.testing.assert_allclose(after.z, after.coords.mean(axis=0))

    def test_tau_leap_step_tracks_totals(self, rng):
        state = SystemState.half_half(8)
        after = step_tau_leap(state, tau_params(h=0.01), rng)
        assert np.all(after.coords >= 0.0)
        np.testing.assert_allclose(after.z, after.coords.mean(axis=0), rtol=1e-12, atol=1e-12)


class PoissonRecorder:
    """Generator stand-in that records Poisson means and draws no jumps."""

    def __init__(self):
        self.means = []

    def poisson(self, lam):
        self.means.append(np.array(lam, dtype=float))
        return np.zeros(np.shape(lam), dtype=np.int64)


class TestTauLeapStep:
    def test_poisson_means_use_step_start_state(self):
        params = tau_params(h=0.5)
        simulator = MeanFieldSimulator(params)
        coords = np.array([[[1.0, 0.0], [0.0, 3.0]]])
        z = np.array([[0.5, 1.5]])
        recorder = PoissonRecorder()
        simulator.step(coords, z, 0.5, recorder)
        mass = TruncatedJumpSampler(params.window).total_mass
        expected = 0.5 * mass * np.array([[1.5 / 1.0, 0.5 / 3.0]])
        assert len(recorder.means) == 1
        np.testing.assert_allclose(recorder.means[0], expected, rtol=1e-12)

    def test_jump_intensity_vanishes_at_origin_and_without_opposite_mass(self):
        simulator = MeanFieldSimulator(tau_params())
        coords = np.array([[[2.0, 0.0], [0.0, 0.0]]])
        intensity = simulator.jump_intensity(coords, np.array([[1.0, 0.0]]), 0.1)
        np.testing.assert_array_equal(intensity, [[0.0, 0.0]])


class TestRecords:
    def test_same_seed_same_path(self):
        params = SimParams(h=0.05, horizon=0.5, seed=7)
        a = simulate(SystemState.half_half(6), params)
        b = simulate(SystemState.half_half(6), params)
        np.testing.assert_array_equal(a.totals, b.totals)

    def test_record_every(self, rng):
        batch = simulate_batch(SystemState.half_half(4), SimParams(h=0.1, horizon=1.0, record_every=3), rng)
        np.testing.assert_allclose(batch.times, [0.0, 0.3, 0.6, 0.9, 1.0])

    def test_full_config_snapshots(self, rng):
        params = SimParams(h=0.1, horizon=0.5, record_mode=RecordMode.FULL_CONFIG)
        batch = simulate_batch(SystemState.half_half(4), params, rng, n_replicas=2)
        assert batch.snapshots.shape == (2, len(batch.times), 4, 2)
        np.testing.assert_allclose(batch.snapshots.mean(axis=2), batch.totals)

    def test_jump_log(self, rng):
        params = tau_params(h=0.01, horizon=0.5, record_mode=RecordMode.JUMP_LOG)
        batch = simulate_batch(SystemState.half_half(6), params, rng, n_replicas=2)
        assert batch.events is not None
        assert all(0 <= e.site < 6 and e.replica in (0, 1) for e in batch.events)
        assert batch.record(0).has_jump_log

    def test_max_coordinate(self, rng):
        batch = simulate_batch(SystemState.half_half(4, magnitude=2.0), SimParams(h=0.1, horizon=0.3), rng, n_replicas=3)
        assert np.all(max_coordinate(batch) >= 2.0)

    def test_step_budget(self, monkeypatch):
        from mcblab.config import get_settings

        monkeypatch.setenv("MCBLAB_MAX_STEPS", "5")
        get_settings.cache_clear()
        with pytest.raises(ResourceLimitError) as info:
            simulate(SystemState.half_half(4), SimParams(h=0.1, horizon=1.0))
        assert info.value.partial is not None
        assert len(info.value.partial.times) == 6

    def test_bad_initial_shape(self, rng):
        with pytest.raises(ParameterError):
            simulate_batch(np.zeros((4, 2)), SimParams(), rng)

    def test_jump_log_does_not_depend_on_mark_chunking(self, monkeypatch):
        params = tau_params(h=0.01, horizon=0.2, record_mode=RecordMode.JUMP_LOG)
        state = SystemState.half_half(6)
        whole = simulate_batch(state, params, np.random.default_rng(11), n_replicas=20)
        monkeypatch.setattr(dynamics, "MARK_CHUNK", 1)
        chunked = simulate_batch(state, params, np.random.default_rng(11), n_replicas=20)

        np.testing.assert_array_equal(chunked.final_coords, whole.final_coords)
        assert len(chunked.events) == len(whole.events) > 0
        for a, b in zip(chunked.events, whole.events):
            assert (a.replica, a.site, a.mark, a.time) == (b.replica, b.site, b.mark, b.time)
            assert a.displacement == pytest.approx(b.displacement, rel=1e-9, abs=1e-12)


@pytest.mark.slow
class TestMoments:
    def test_total_mass_is_a_martingale(self, rng):
        params = SimParams(h=0.01, horizon=0.5, record_every=10)
        batch = simulate_batch(SystemState.half_half(10), params, rng, n_replicas=4000)
        for report in martingale_check(batch, 0.5, k_se=4.0):
            assert report.passed, report

    def test_mixed_moment_does_not_grow(self, rng):
        params = SimParams(h=0.01, horizon=0.5, record_every=10)
        batch = simulate_batch(SystemState.half_half(10), params, rng, n_replicas=4000)
        assert mixed_moment_check(batch, 0.5, k_se=4.0).passed

    def test_schemes_agree_in_distribution(self):
        state = SystemState.half_half(4)
        split = SimParams(h=0.005, horizon=0.5)
        leap = SimParams(
            scheme=Scheme.TAU_LEAP, h=0.005, horizon=0.5, window=TruncationWindow(delta=0.02)
        )
        a = simulate_batch(state, split, np.random.default_rng(1), n_replicas=2000)
        b = simulate_batch(state, leap, np.random.default_rng(2), n_replicas=2000)
        for axis in (0, 1):
            distance = ks_distance(a.totals[:, -1, axis], b.totals[:, -1, axis])
            assert distance <= ks_critical_value(2000, 2000, alpha=0.001)
