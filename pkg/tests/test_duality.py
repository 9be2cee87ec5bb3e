"""Lozenge product, harmonicity of F and the duality relations."""

import cmath
import math

import numpy as np
import pytest

from mcblab.errors import ParameterError, PreconditionError
from mcblab.schemas.dynamics import SimParams, SystemState
from mcblab.schemas.measures import BoundaryPoint, QuadrantPoint
from mcblab.services.duality import (
    BOUNDARY_TEST_POINTS,
    ComplexEstimate,
    F,
    F_array,
    duality_residual,
    duality_residual_samples,
    g2_closed_form,
    g_k_evaluate,
    harmonicity_residual,
    lozenge,
    lozenge_array,
    stationary_fdd_check,
    summarize_duality,
    transform_separation,
)
from mcblab.services.statistics import combined_se

MARKS = [(0, BoundaryPoint.type1(1.0)), (5, BoundaryPoint.type2(1.0))]


class TestLozenge:
    def test_unit_axes(self):
        value = lozenge(QuadrantPoint(x1=1.0, x2=0.0), QuadrantPoint(x1=0.0, x2=1.0))
        assert value.to_complex() == pytest.approx(-1.0 - 1.0j)

    def test_symmetric(self):
        x, y = np.array([0.3, 2.0]), np.array([1.5, 0.0])
        assert lozenge_array(x, y) == pytest.approx(lozenge_array(y, x))

    def test_F_at_origin_is_one(self):
        assert F(QuadrantPoint(x1=3.0, x2=1.0), BoundaryPoint.origin()).to_complex() == 1.0

    def test_F_is_bounded(self, rng):
        x = rng.exponential(size=(1000, 2))
        y = rng.exponential(size=(1000, 2))
        assert np.all(np.abs(F_array(x, y)) <= 1.0)

    def test_F_matches_exponential(self):
        x, y = QuadrantPoint(x1=0.5, x2=0.25), BoundaryPoint.type2(2.0)
        expected = cmath.exp(lozenge(x, y).to_complex())
        assert F(x, y).to_complex() == pytest.approx(expected)


class TestHarmonicity:
    def test_interior_y_is_rejected(self, rng):
        with pytest.raises(PreconditionError):
            harmonicity_residual(QuadrantPoint(x1=1.0, x2=1.0), QuadrantPoint(x1=1.0, x2=1.0), 10, rng)

    def test_boundary_theta_is_exact(self, rng):
        result = harmonicity_residual(QuadrantPoint(x1=2.0, x2=0.0), BoundaryPoint.type1(1.0), 10, rng)
        assert result.estimate == 0j
        assert result.standard_error == 0.0

    @pytest.mark.parametrize("y", BOUNDARY_TEST_POINTS[:4])
    def test_residual_vanishes(self, rng, y):
        result = harmonicity_residual(QuadrantPoint(x1=0.5, x2=2.0), y, 20_000, rng)
        assert result.within(4.0)


class TestEstimate:
    def test_within(self):
        assert ComplexEstimate(estimate=0.1 + 0.1j, standard_error=0.05, n=10).within(3.0)
        assert not ComplexEstimate(estimate=1.0 + 0j, standard_error=0.05, n=10).within(3.0)

    def test_identical_samples_are_not_separated(self, rng):
        points = rng.exponential(size=(500, 2)) * np.array([1.0, 0.0])
        ratio, _ = transform_separation(points, points)
        assert ratio == 0.0


class TestDualityRelation:
    def test_zero_lag_has_no_residual(self, rng):
        params = SimParams(h=0.05)
        result = duality_residual(SystemState.half_half(6), 0.2, 0.0, None, MARKS, params, 200, rng)
        assert result.residual.modulus == pytest.approx(0.0, abs=1e-12)
        assert result.rhs_remainder.modulus == 0.0

    def test_residual_is_the_difference_of_sides(self, rng):
        params = SimParams(h=0.05)
        result = duality_residual(SystemState.half_half(6), 0.2, 0.5, None, MARKS, params, 200, rng)
        expected = result.lhs.estimate - result.rhs_main.estimate - result.rhs_remainder.estimate
        assert result.residual.estimate == pytest.approx(expected)
        assert result.remainder_bound >= 0.0

    def test_sup_deviation_is_kept_per_replica(self, rng):
        start = np.broadcast_to(SystemState.half_half(6).coords, (5, 6, 2)).copy()
        theta = QuadrantPoint(x1=2.0, x2=0.0)
        pieces = duality_residual_samples(start, SimParams(h=0.05), 0.3, theta, MARKS, rng)
        assert pieces["sup_dev"].shape == (5,)
        assert np.all(pieces["sup_dev"] >= math.hypot(1.5, 0.5) - 1e-12)

    def test_remainder_bound_averages_replica_sups(self):
        pieces = {
            "lhs": np.ones(4, dtype=complex),
            "main": np.ones(4, dtype=complex),
            "remainder": np.zeros(4, dtype=complex),
            "sup_dev": np.array([0.0, 1.0, 2.0, 5.0]),
        }
        result = summarize_duality(pieces, 1.0, 2.0)
        assert result.remainder_bound == pytest.approx(2.0 * 2.0 * (1.0 - math.exp(-1.0)) * 2.0)

    def test_marks_must_be_distinct(self, rng):
        marks = [(0, BoundaryPoint.type1(1.0)), (0, BoundaryPoint.type2(1.0))]
        with pytest.raises(ParameterError):
            duality_residual(SystemState.half_half(6), 0.1, 0.1, None, marks, SimParams(h=0.05), 10, rng)

    def test_marks_must_be_sites(self, rng):
        marks = [(6, BoundaryPoint.type1(1.0))]
        with pytest.raises(ParameterError):
            duality_residual(SystemState.half_half(6), 0.1, 0.1, None, marks, SimParams(h=0.05), 10, rng)


class TestTransforms:
    def test_origin_marks_give_one(self, rng):
        origin = BoundaryPoint.origin()
        result = g_k_evaluate(QuadrantPoint(x1=1.0, x2=1.0), [origin, origin], [0.0, 1.0], 100, rng)
        assert result.estimate == pytest.approx(1.0 + 0j)
        assert result.standard_error == 0.0

    def test_grid_must_increase(self, rng):
        y = BoundaryPoint.type1(1.0)
        with pytest.raises(ParameterError):
            g_k_evaluate(QuadrantPoint(x1=1.0, x2=1.0), [y, y], [1.0, 1.0], 100, rng)
        with pytest.raises(ParameterError):
            g_k_evaluate(QuadrantPoint(x1=1.0, x2=1.0), [y], [0.0, 1.0], 100, rng)

    def test_g2_is_exact_for_boundary_theta(self, rng):
        theta = QuadrantPoint(x1=1.0, x2=0.0)
        y1, y2 = BoundaryPoint.type1(1.0), BoundaryPoint.type2(0.5)
        exact = g2_closed_form(theta, y1, y2, 0.0, 1.0)
        assert exact.standard_error == 0.0
        estimate = g_k_evaluate(theta, [y1, y2], [0.0, 1.0], 20_000, rng)
        assert abs(estimate.estimate - exact.estimate) <= 4.0 * max(estimate.standard_error, 1e-12)

    def test_g2_needs_ordered_times(self):
        y = BoundaryPoint.type1(1.0)
        with pytest.raises(ParameterError):
            g2_closed_form(QuadrantPoint(x1=1.0, x2=0.0), y, y, 1.0, 1.0)

    def test_g2_interior_needs_samples(self):
        y = BoundaryPoint.type1(1.0)
        with pytest.raises(ParameterError):
            g2_closed_form(QuadrantPoint(x1=1.0, x2=1.0), y, BoundaryPoint.type2(1.0), 0.0, 1.0)

    def test_g2_interior_theta_matches_two_level_transform(self, rng):
        theta = QuadrantPoint(x1=1.0, x2=1.0)
        y1, y2 = BoundaryPoint.type1(1.0), BoundaryPoint.type2(0.5)
        closed = g2_closed_form(theta, y1, y2, 0.0, 1.0, n_samples=20_000, rng=rng)
        assert closed.standard_error > 0.0
        estimate = g_k_evaluate(theta, [y1, y2], [0.0, 1.0], 20_000, rng)
        se = combined_se(closed.standard_error, estimate.standard_error)
        assert abs(estimate.estimate - closed.estimate) <= 4.0 * se

    def test_stationary_fdd_agrees(self, rng):
        theta = QuadrantPoint(x1=1.0, x2=1.0)
        z_list = [BoundaryPoint.type1(0.5), BoundaryPoint.type2(0.5), BoundaryPoint.type1(0.25)]
        _, _, residual = stationary_fdd_check(theta, [0.0, 0.5, 1.0], z_list, 20_000, rng)
        assert residual.within(4.0)
