"""Statistical helpers and reproducible replica execution."""

import math

import numpy as np
import pytest
from scipy import stats

from mcblab.errors import ParameterError, ResourceLimitError
from mcblab.schemas.dynamics import RecordMode, Scheme, SimParams, SystemState
from mcblab.schemas.measures import TruncationWindow
from mcblab.services.dynamics import simulate_batch
from mcblab.services.replicas import ReplicaRunner, block_rng, concat_batches, replica_blocks
from mcblab.services.statistics import (
    combined_se,
    complex_mean_and_se,
    ks_critical_value,
    ks_distance,
    max_increment,
    mean_and_se,
    proportion_se,
    quantile_agreement,
)
from mcblab.storage import render_batch_csv


class TestKolmogorovSmirnov:
    def test_identical_samples(self):
        a = np.arange(10.0)
        assert ks_distance(a, a) == 0.0

    def test_disjoint_samples(self):
        assert ks_distance([0.0, 1.0], [5.0, 6.0, 7.0]) == 1.0

    def test_half_overlap(self):
        assert ks_distance([1.0, 2.0, 3.0, 4.0], [3.0, 4.0, 5.0, 6.0]) == pytest.approx(0.5)

    def test_empty_sample(self):
        with pytest.raises(ParameterError):
            ks_distance([], [1.0])

    def test_critical_value(self):
        assert ks_critical_value(100, 100) == pytest.approx(1.6276 * math.sqrt(0.02), rel=1e-4)
        with pytest.raises(ParameterError):
            ks_critical_value(0, 10)

    def test_same_law_passes(self, rng):
        a, b = rng.normal(size=2000), rng.normal(size=3000)
        assert ks_distance(a, b) < ks_critical_value(2000, 3000)

    def test_matches_scipy(self, rng):
        a, b = rng.exponential(size=500), rng.exponential(size=700) * 1.2
        assert ks_distance(a, b) == pytest.approx(stats.ks_2samp(a, b).statistic, rel=1e-12)


class TestStandardErrors:
    def test_mean_and_se(self):
        mean, se = mean_and_se([1.0, 2.0, 3.0])
        assert mean == 2.0
        assert se == pytest.approx(1.0 / math.sqrt(3.0))
        with pytest.raises(ParameterError):
            mean_and_se([1.0])

    def test_combined(self):
        assert combined_se(3.0, 4.0) == 5.0

    def test_complex(self):
        mean, se = complex_mean_and_se([1.0 + 0j, 1j])
        assert mean == pytest.approx(0.5 + 0.5j)
        assert se == pytest.approx(math.sqrt(0.5))

    def test_proportion(self):
        assert proportion_se(0.5, 100) == pytest.approx(0.05)
        assert proportion_se(0.5, 0) == math.inf

    def test_quantile_agreement(self):
        a = np.arange(100.0)
        statistic, se = quantile_agreement(a, a, 0.5)
        assert statistic == pytest.approx(0.0)
        assert se > 0.0


class TestTrend:
    def test_max_increment(self):
        assert max_increment([3.0, 2.0, 2.5]) == pytest.approx(0.5)
        assert max_increment([3.0, 2.0, 1.0]) < 0.0
        assert max_increment([1.0]) == -math.inf


class TestReplicas:
    def test_blocks_cover_all_replicas(self):
        blocks = replica_blocks(10, 4)
        assert [b.size for b in blocks] == [4, 4, 2]
        assert [b.first for b in blocks] == [0, 4, 8]
        with pytest.raises(ParameterError):
            replica_blocks(0, 4)

    def test_block_streams_differ(self):
        a = block_rng(1, 0, stream=0).random(4)
        b = block_rng(1, 0, stream=1).random(4)
        c = block_rng(1, 1, stream=0).random(4)
        np.testing.assert_array_equal(a, block_rng(1, 0, stream=0).random(4))
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    @pytest.mark.parametrize("scheme", [Scheme.HARMONIC_SPLIT, Scheme.TAU_LEAP])
    def test_worker_count_does_not_change_output(self, scheme):
        params = SimParams(
            scheme=scheme, h=0.02, horizon=0.2, window=TruncationWindow(delta=0.05),
            record_mode=RecordMode.JUMP_LOG if scheme == Scheme.TAU_LEAP else RecordMode.TOTALS_ONLY,
        )
        state = SystemState.half_half(8)

        def block(b, rng):
            return simulate_batch(state, params, rng, n_replicas=b.size, first_replica=b.first)

        outputs = []
        for workers in (1, 4):
            runner = ReplicaRunner(master_seed=99, workers=workers, block_size=3)
            batch = runner.run_batches(block, 20)
            outputs.append(render_batch_csv(batch, "0" * 16, 99))
        assert outputs[0] == outputs[1]

    def test_map_arrays_keeps_block_order(self):
        runner = ReplicaRunner(master_seed=5, workers=3, block_size=2)
        firsts = runner.map_arrays(lambda b, rng: np.full(b.size, b.first), 7)
        np.testing.assert_array_equal(firsts, [0, 0, 2, 2, 4, 4, 6])

    def test_step_budget_error_carries_every_block(self, monkeypatch):
        from mcblab.config import get_settings

        monkeypatch.setenv("MCBLAB_MAX_STEPS", "3")
        get_settings.cache_clear()
        params = SimParams(h=0.01, horizon=0.1)
        state = SystemState.half_half(4)

        def block(b, rng):
            return simulate_batch(state, params, rng, n_replicas=b.size, first_replica=b.first)

        runner = ReplicaRunner(master_seed=3, workers=2, block_size=2)
        with pytest.raises(ResourceLimitError) as info:
            runner.run_batches(block, 5)
        partial = info.value.partial
        assert partial.n_replicas == 5
        np.testing.assert_allclose(partial.times, [0.0, 0.01, 0.02, 0.03])

    def test_concat_needs_batches(self):
        with pytest.raises(ParameterError):
            concat_batches([])
