"""Jump measure nu and harmonic measure Q_x."""

import math

import numpy as np
import pytest

from mcblab.errors import InfiniteMassError, ParameterError, PoleError
from mcblab.schemas.measures import (
    Axis,
    BoundaryPoint,
    JumpMark,
    PointKind,
    QuadrantPoint,
    TruncationWindow,
)
from mcblab.services.measures import (
    TruncatedJumpSampler,
    axis_density,
    axis2_inverse_cdf,
    harmonic_pth_moment,
    harmonic_sample,
    harmonic_sample_array,
    jump_displacement,
    jump_tail_bound_check,
    large_jump_first_moment_bound,
    nu_axis1_complement_mass,
    nu_axis2_second_moment_bound,
    nu_density,
    nu_interval_mass,
    nu_mean_axis2,
    nu_pv_mean_axis1,
    nu_pv_mean_axis1_closed_form,
    nu_restricted_mean_axis1,
    nu_tail_bounds,
    nu_truncated_second_moment,
    nu_window_second_moment,
    quadrature_interval_mass,
    restricted_total_mass,
    sample_nu,
    x_log_x_bound,
)

REL = 1e-9


class TestBoundaryPoint:
    def test_canonical_kinds(self):
        assert BoundaryPoint.from_coords(2.0, 0.0).kind == PointKind.TYPE1
        assert BoundaryPoint.from_coords(0.0, 2.0).kind == PointKind.TYPE2
        assert BoundaryPoint.from_coords(0.0, 0.0) == BoundaryPoint.origin()

    def test_interior_rejected(self):
        with pytest.raises(ValueError):
            BoundaryPoint.from_coords(1.0, 1.0)

    def test_origin_needs_zero_magnitude(self):
        with pytest.raises(ValueError):
            BoundaryPoint(kind=PointKind.ORIGIN, magnitude=1.0)
        with pytest.raises(ValueError):
            BoundaryPoint(kind=PointKind.TYPE1, magnitude=0.0)


class TestDensity:
    def test_axis2_at_one(self):
        assert nu_density(JumpMark(axis=Axis.AXIS2, value=1.0)) == pytest.approx(1.0 / math.pi, rel=REL)

    def test_axis1_at_zero(self):
        assert nu_density(JumpMark(axis=Axis.AXIS1, value=0.0)) == 0.0

    def test_axis1_at_three(self):
        assert nu_density(JumpMark(axis=Axis.AXIS1, value=3.0)) == pytest.approx(
            3.0 / (16.0 * math.pi), rel=REL
        )

    def test_pole(self):
        with pytest.raises(PoleError):
            nu_density(JumpMark(axis=Axis.AXIS1, value=1.0))

    @pytest.mark.parametrize("axis", [Axis.AXIS1, Axis.AXIS2])
    def test_vectorized_density_matches_pointwise(self, axis):
        ys = np.array([0.0, 0.25, 0.5, 0.99, 1.01, 2.0, 10.0, 1e4])
        pointwise = [nu_density(JumpMark(axis=axis, value=float(y))) for y in ys]
        np.testing.assert_allclose(axis_density(axis)(ys), pointwise, rtol=1e-15)


class TestIntervalMass:
    def test_axis2_tail_at_one(self):
        assert nu_interval_mass(Axis.AXIS2, 1.0, math.inf) == pytest.approx(1.0 / math.pi, rel=REL)

    def test_axis1_complement_half(self):
        expected = (8.0 / math.pi) / (0.5 * 3.75) - 2.0 / math.pi
        assert nu_axis1_complement_mass(0.5) == pytest.approx(expected, rel=REL)
        assert expected == pytest.approx(0.7215043, abs=1e-7)

    def test_axis1_above_two(self):
        assert nu_interval_mass(Axis.AXIS1, 2.0, math.inf) == pytest.approx(2.0 / (3.0 * math.pi), rel=REL)

    def test_straddling_pole(self):
        with pytest.raises(InfiniteMassError):
            nu_interval_mass(Axis.AXIS1, 0.5, 1.5)

    def test_bad_interval(self):
        with pytest.raises(ParameterError):
            nu_interval_mass(Axis.AXIS2, 2.0, 1.0)

    @pytest.mark.parametrize("eps", [0.1, 0.5, 1.0, 2.0, 10.0])
    def test_closed_form_matches_quadrature(self, eps):
        assert nu_interval_mass(Axis.AXIS2, 0.0, eps) == pytest.approx(
            quadrature_interval_mass(Axis.AXIS2, 0.0, eps), rel=1e-8
        )
        assert nu_interval_mass(Axis.AXIS1, 1.0 + eps, math.inf) == pytest.approx(
            quadrature_interval_mass(Axis.AXIS1, 1.0 + eps, math.inf), rel=1e-8
        )

    @pytest.mark.parametrize("eps", [0.1, 0.5, 1.0, 2.0, 10.0])
    def test_tail_bounds_hold(self, eps):
        axis2_tail, axis2_bound, axis1_complement, axis1_bound = nu_tail_bounds(eps)
        assert axis2_tail == pytest.approx((2.0 / math.pi) / (1.0 + eps * eps), rel=REL)
        assert axis2_tail <= axis2_bound
        assert axis1_complement <= axis1_bound


class TestMoments:
    def test_axis1_second_moment_at_one(self):
        assert nu_truncated_second_moment(Axis.AXIS1, 1.0) == pytest.approx(
            (4.0 / math.pi) * (math.log(2.0) - 0.5), rel=REL
        )

    def test_axis2_second_moment_at_one(self):
        assert nu_truncated_second_moment(Axis.AXIS2, 1.0) == pytest.approx(0.1229656, abs=1e-7)

    def test_second_moment_vanishes_at_zero(self):
        assert nu_truncated_second_moment(Axis.AXIS1, 0.0) == 0.0
        assert nu_truncated_second_moment(Axis.AXIS1, 1e-8) == pytest.approx(0.0, abs=1e-14)

    def test_axis2_mean(self):
        assert nu_mean_axis2() == 1.0
        assert nu_mean_axis2(cross_check=True) == pytest.approx(1.0, abs=1e-9)

    def test_pv_mean_matches_closed_form(self):
        window = TruncationWindow(delta=0.5)
        assert nu_pv_mean_axis1(window) == pytest.approx(nu_pv_mean_axis1_closed_form(0.5), rel=1e-7)
        assert nu_pv_mean_axis1_closed_form(0.5) == pytest.approx(0.0071644, abs=1e-6)

    def test_pv_mean_monotone_and_vanishing(self):
        small = nu_pv_mean_axis1(TruncationWindow(delta=0.1))
        large = nu_pv_mean_axis1(TruncationWindow(delta=0.2))
        assert abs(small) < abs(large)
        assert nu_pv_mean_axis1(TruncationWindow(delta=1e-6)) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("delta", [0.01, 0.3, 0.9])
    def test_restricted_and_pv_sum_to_full_mean(self, delta):
        window = TruncationWindow(delta=delta)
        total = nu_restricted_mean_axis1(window) + nu_pv_mean_axis1(window)
        assert total == pytest.approx(2.0 / math.pi, rel=1e-9)

    def test_window_second_moment_bound(self):
        value, bound = nu_window_second_moment(0.5)
        assert 0.0 < value <= bound

    def test_axis2_log_bound(self):
        value, bound = nu_axis2_second_moment_bound(10.0)
        assert value <= bound
        with pytest.raises(ParameterError):
            nu_axis2_second_moment_bound(1.0)

    def test_x_log_x(self):
        for x in (0.0, 0.1, 1.0, 5.0, 50.0):
            lhs, rhs = x_log_x_bound(x, 1.5)
            assert lhs <= rhs


class TestJumpMap:
    def test_origin_does_not_move(self):
        mark = JumpMark(axis=Axis.AXIS2, value=2.0)
        assert jump_displacement(mark, BoundaryPoint.origin()) == (0.0, 0.0)

    def test_scaling(self):
        mark = JumpMark(axis=Axis.AXIS2, value=0.7)
        unit = jump_displacement(mark, BoundaryPoint.type1(1.0))
        scaled = jump_displacement(mark, BoundaryPoint.type1(3.0))
        assert scaled == pytest.approx((3.0 * unit[0], 3.0 * unit[1]))

    def test_type_symmetry(self):
        for axis in (Axis.AXIS1, Axis.AXIS2):
            mark = JumpMark(axis=axis, value=1.7)
            j1, j2 = jump_displacement(mark, BoundaryPoint.type2(2.0))
            k1, k2 = jump_displacement(mark, BoundaryPoint.type1(2.0))
            assert (j1, j2) == pytest.approx((k2, k1))

    @pytest.mark.parametrize("L", [0.5, 1.0, 2.0, 10.0])
    def test_tail_bound(self, L):
        mass, bound = jump_tail_bound_check(L)
        assert mass <= bound

    def test_tail_vanishes(self):
        mass, _ = jump_tail_bound_check(1e6)
        assert mass < 1e-10

    def test_large_jump_moment(self):
        lhs, rhs = large_jump_first_moment_bound(BoundaryPoint.type1(1.0), 1.0)
        assert rhs == 8.0 and lhs <= rhs
        lhs, rhs = large_jump_first_moment_bound(BoundaryPoint.type1(2.0), 0.1)
        assert rhs == pytest.approx(0.32) and lhs <= rhs
        assert large_jump_first_moment_bound(BoundaryPoint.origin(), 1.0)[0] == 0.0


class TestNuSampler:
    def test_inverse_cdf_midpoint(self):
        assert float(axis2_inverse_cdf(1.0 / math.pi)) == pytest.approx(1.0, rel=1e-12)

    def test_total_mass(self):
        window = TruncationWindow(delta=0.5)
        expected = (2.0 / math.pi) * (1.0 / 3.0 + 0.8 + 1.0)
        assert TruncatedJumpSampler(window).total_mass == pytest.approx(expected, rel=REL)
        assert restricted_total_mass(window) == pytest.approx(expected, rel=REL)

    def test_marks_avoid_window(self, rng):
        window = TruncationWindow(delta=0.2)
        is_axis2, values = TruncatedJumpSampler(window).sample(20_000, rng)
        axis1 = values[~is_axis2]
        assert np.all(np.abs(axis1 - 1.0) >= 0.2 - 1e-12)
        assert np.all(values >= 0.0)
        assert isinstance(sample_nu(window, rng), JumpMark)

    def test_axis2_tail_frequency(self, rng):
        window = TruncationWindow(delta=0.5)
        sampler = TruncatedJumpSampler(window)
        n = 200_000
        is_axis2, values = sampler.sample(n, rng)
        freq = float(np.mean(is_axis2 & (values > 1.0)))
        p = (1.0 / math.pi) / sampler.total_mass
        assert abs(freq - p) <= 4.0 * math.sqrt(p * (1 - p) / n)


class TestHarmonicMeasure:
    def test_boundary_start_is_fixed(self, rng):
        point = harmonic_sample(QuadrantPoint(x1=3.0, x2=0.0), rng)
        assert point == BoundaryPoint.type1(3.0)

    def test_draws_lie_on_boundary(self, rng):
        draws = harmonic_sample_array(np.full((1000, 2), [1.0, 2.0]), rng)
        assert np.all(np.minimum(draws[:, 0], draws[:, 1]) == 0.0)
        assert np.all(draws >= 0.0)

    def test_diagonal_start_is_symmetric(self, rng):
        n = 40_000
        draws = harmonic_sample_array(np.full((n, 2), [1.0, 1.0]), rng)
        p = float(np.mean(draws[:, 0] > 0.0))
        assert abs(p - 0.5) <= 4.0 * math.sqrt(0.25 / n)

    def test_boundary_moment_is_exact(self, rng):
        moment = harmonic_pth_moment(QuadrantPoint(x1=1.0, x2=0.0), 1.3, 1, 100, rng)
        assert moment.estimate == 1.0
        assert moment.standard_error == 0.0

    def test_moment_bound_value(self, rng):
        moment = harmonic_pth_moment(QuadrantPoint(x1=1.0, x2=1.0), 1.5, 1, 1000, rng)
        assert moment.bound == pytest.approx(8.0)
        assert moment.sharp_bound < moment.bound

    def test_mean_is_preserved(self, rng):
        moment = harmonic_pth_moment(QuadrantPoint(x1=1.0, x2=1.0), 1.0, 1, 100_000, rng)
        assert abs(moment.estimate - 1.0) <= 4.0 * moment.standard_error

    def test_p_out_of_range(self, rng):
        with pytest.raises(ParameterError):
            harmonic_pth_moment(QuadrantPoint(x1=1.0, x2=1.0), 2.0, 1, 10, rng)
