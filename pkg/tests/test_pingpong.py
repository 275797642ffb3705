"""
Unit tests for pingpong/ - Wall profiles, pingpong and bouncing-ball events, limit maps
"""

import json
import math

import numpy as np
import pytest

from cocycle.lattice import LatticeVector
from cocycle.system import ExtendedState
from core.errors import ArgumentError, ConfigurationError, DomainError, StallError
from pingpong.bouncing import (
    BallState,
    BouncingFlowSystem,
    ball_quotient,
    bouncing_approximation_ladder,
    bouncing_event,
    bouncing_factor_map,
    bouncing_flow,
    bouncing_limit_map,
    bouncing_map,
    check_jing_condition,
)
from pingpong.fermi_ulam import (
    FIXED,
    MOVING,
    PingpongState,
    PingpongSystem,
    approximation_ladder,
    compute_delta,
    from_limit_chart,
    hyperbolicity_check,
    limit_map,
    pingpong_event,
    pingpong_map,
    pingpong_trajectory,
    riemann_delta,
    to_limit_chart,
)
from pingpong.roots import first_root
from pingpong.walls import (
    WallMotion,
    default_corner_profile,
    shallow_corner_profile,
    parabolic_profile,
    triangle_profile,
)


def sine_velocity_wall(amplitude: float = 0.1) -> WallMotion:
    """Wall whose velocity is amplitude * sin(2 pi t)."""
    return WallMotion.harmonic(a=-amplitude / (2 * math.pi))


def circular_gap(a, b):
    return (a - b + 0.5) % 1.0 - 0.5


class TestWallMotion:
    """Test periodic piecewise profiles"""

    def test_corner_slopes(self):
        """Test one-sided slopes and sigma of the shipped profiles"""
        shallow = shallow_corner_profile()
        assert shallow.slope_right == pytest.approx(-1.0)
        assert shallow.slope_left == pytest.approx(1.0)
        assert shallow.sigma == pytest.approx(-2.0)
        corner = default_corner_profile()
        assert corner.sigma == pytest.approx(6.0)
        assert corner.minimum() == pytest.approx(1.0)
        assert np.max(corner.value(np.linspace(0, 1, 10001))) == pytest.approx(1.1875, abs=1e-6)

    def test_periodic_extension(self):
        """Test evaluation reduces time mod 1"""
        wall = default_corner_profile()
        assert wall.value(2.3) == pytest.approx(wall.value(0.3))
        assert wall.deriv(-0.7) == pytest.approx(wall.deriv(0.3))

    def test_right_continuous_at_breaks(self):
        """Test the derivative at a break comes from the piece on its right"""
        wall = triangle_profile(1.0, 0.2)
        assert wall.deriv(0.25) == pytest.approx(-0.2)
        assert wall.deriv(0.75) == pytest.approx(0.2)
        assert wall.deriv(0.5) == pytest.approx(0.2)
        assert wall.value(0.5) == pytest.approx(1.0)

    def test_vectorised_matches_scalar(self):
        """Test array evaluation"""
        wall = triangle_profile()
        t = np.array([0.1, 0.6, 1.4, -0.2])
        np.testing.assert_allclose(wall.value(t), [wall.value(float(s)) for s in t])

    def test_jump_rejected(self):
        """Test a discontinuous profile raises"""
        with pytest.raises(ConfigurationError, match="jumps"):
            WallMotion.piecewise([0.0, 0.5, 1.0], [[1.0], [2.0]])

    def test_non_periodic_rejected(self):
        """Test a profile with l(0) != l(1) raises"""
        with pytest.raises(ConfigurationError, match="not periodic"):
            WallMotion.polynomial([1.0, 1.0])

    def test_bad_breaks_rejected(self):
        """Test breaks must run from 0 to 1"""
        with pytest.raises(ConfigurationError, match="breaks must increase"):
            WallMotion.piecewise([0.0, 0.8], [[1.0]])

    def test_harmonic_velocity(self):
        """Test a harmonic wall differentiates in closed form"""
        wall = sine_velocity_wall(0.1)
        assert wall.deriv(0.25) == pytest.approx(0.1)
        assert wall.second(0.0) == pytest.approx(0.2 * math.pi)

    def test_from_json(self, tmp_path):
        """Test the JSON grammar from text and from a file"""
        text = json.dumps({"name": "shallow", "breaks": [0.0, 1.0], "pieces": [[1.0, -1.0, 1.0]]})
        wall = WallMotion.from_json(text)
        assert wall.value(0.4) == pytest.approx(shallow_corner_profile().value(0.4))
        path = tmp_path / "corner.json"
        path.write_text(text)
        assert WallMotion.from_json(path).sigma == pytest.approx(-2.0)

    def test_from_json_missing_key(self):
        """Test an incomplete profile raises"""
        with pytest.raises(ConfigurationError, match="needs 'breaks' and 'pieces'"):
            WallMotion.from_dict({"breaks": [0.0, 1.0]})

    def test_scaled(self):
        """Test scaling multiplies the profile"""
        wall = parabolic_profile(2.0)
        assert wall.scaled(3.0).value(0.3) == pytest.approx(3.0 * wall.value(0.3))

    def test_break_offsets(self):
        """Test break crossings ahead of a given time"""
        offsets = triangle_profile().break_offsets(0.3, 2.0)
        np.testing.assert_allclose(offsets, [0.2, 0.7, 1.2, 1.7])


class TestFirstRoot:
    """Test the bracketing root finder"""

    def test_linear(self):
        """Test a single descending crossing"""
        assert first_root(lambda s: 0.5 - s, lambda s: -1.0, 1.0) == pytest.approx(0.5)

    def test_no_crossing(self):
        """Test a positive function has no root"""
        assert first_root(lambda s: (s - 0.3) ** 2 + 0.01, lambda s: 2 * (s - 0.3), 1.0) is None

    def test_two_roots_inside_one_grid_cell(self):
        """Test the monotone split finds the earlier of two close roots"""
        root = first_root(lambda s: (s - 0.3) ** 2 - 1e-6, lambda s: 2 * (s - 0.3), 1.0)
        assert root == pytest.approx(0.299, abs=1e-10)

    def test_closed_gap_at_start_ignored(self):
        """Test a gap that opens from zero is not a root at zero"""
        root = first_root(lambda s: s * (0.5 - s), lambda s: 0.5 - 2 * s, 1.0)
        assert root == pytest.approx(0.5)

    def test_empty_window(self):
        """Test an empty window raises"""
        with pytest.raises(ArgumentError, match="is empty"):
            first_root(lambda s: 1.0, lambda s: 0.0, 0.0)


class TestPingpongEvent:
    """Test single pingpong collisions"""

    def test_static_walls_fixed_hit(self):
        """Test flight to the fixed wall between static walls"""
        event = pingpong_event(WallMotion.constant(1.0), 0.0, -0.5, 2.0)
        assert event.wall == FIXED
        assert event.time == pytest.approx(0.25)
        assert event.v_out == -2.0

    def test_static_walls_moving_hit(self):
        """Test flight to a wall that happens not to move"""
        event = pingpong_event(WallMotion.constant(1.0), 0.0, -0.5, -2.0)
        assert event.wall == MOVING
        assert event.time == pytest.approx(0.25, abs=1e-11)
        assert event.x == pytest.approx(-1.0)
        assert event.v_out == pytest.approx(2.0)

    def test_zero_relative_velocity(self):
        """Test a particle matching the wall velocity reaches the fixed wall first"""
        event = pingpong_event(triangle_profile(1.0, 0.2), 0.0, -0.5, 0.2)
        assert event.wall == FIXED
        assert event.time == pytest.approx(2.5)

    def test_collision_rules(self):
        """Test every event obeys the fixed-wall and moving-wall rules"""
        wall = default_corner_profile()
        events = pingpong_trajectory(wall, 0.0, -0.5, 7.0, 300)
        assert {e.wall for e in events} == {FIXED, MOVING}
        for prev, nxt in zip(events, events[1:]):
            assert nxt.v_in == prev.v_out
        for e in events:
            if e.wall == FIXED:
                assert e.v_out == -e.v_in
                assert e.x == 0.0
            else:
                assert e.v_out == pytest.approx(2 * e.wall_velocity - e.v_in)
                assert e.v_out - e.wall_velocity == pytest.approx(e.wall_velocity - e.v_in)
                assert e.x == pytest.approx(-wall.value(e.time))

    def test_outside_walls(self):
        """Test a particle outside the walls raises"""
        with pytest.raises(DomainError, match="outside the walls"):
            pingpong_event(WallMotion.constant(1.0), 0.0, 0.5, 1.0)

    def test_stall(self):
        """Test a resting particle never collides"""
        with pytest.raises(StallError, match="no collision"):
            pingpong_event(WallMotion.constant(1.0), 0.0, -0.5, 0.0)


class TestPingpongMap:
    """Test the induced map to the first moving-wall hit after an integer"""

    def test_static_wall_preserves_velocity(self):
        """Test no energy exchange with a wall at rest"""
        nxt, jump = pingpong_map(WallMotion.constant(1.0), PingpongState(0.3, 2.5))
        assert nxt.I == 2.5
        assert jump == 0
        assert nxt.phase == pytest.approx(0.1, abs=1e-9)

    def test_not_separating(self):
        """Test a state slower than the receding wall raises"""
        with pytest.raises(DomainError, match="does not leave the wall"):
            pingpong_map(shallow_corner_profile(), PingpongState(0.0, 0.5))

    def test_state_validation(self):
        """Test phase and velocity ranges"""
        with pytest.raises(DomainError, match="phase"):
            PingpongState(1.0, 2.0)
        with pytest.raises(DomainError, match="positive"):
            PingpongState(0.2, -1.0)


class TestLimitMap:
    """Test the explicit high-energy map"""

    def test_zero_delta_is_skew_shift(self):
        """Test Delta = 0 keeps I"""
        tau, I = limit_map(0.0, 0.3, 2.45)
        assert tau == pytest.approx(0.85)
        assert I == 2.45

    def test_worked_example(self):
        """Test (0.3, 2.45) with Delta = 5"""
        tau, I = limit_map(5.0, 0.3, 2.45)
        assert tau == pytest.approx(0.85)
        assert I == pytest.approx(6.70)

    def test_centered_kick(self):
        """Test the centered form subtracts Delta / 2"""
        assert limit_map(5.0, 0.3, 2.45, centered=True)[1] == pytest.approx(6.70 - 2.5)

    def test_area_preserving(self, rng):
        """Test the finite-difference Jacobian determinant is one"""
        h = 1e-6
        dets = []
        while len(dets) < 1000:
            tau, I = float(rng.random()), float(rng.uniform(0.0, 10.0))
            nxt = (tau - I) % 1.0
            if min(nxt, 1.0 - nxt) < 1e-3:
                continue
            a_p, b_p = limit_map(5.0, tau + h, I)
            a_m, b_m = limit_map(5.0, tau - h, I)
            c_p, d_p = limit_map(5.0, tau, I + h)
            c_m, d_m = limit_map(5.0, tau, I - h)
            j = np.array([
                [circular_gap(a_p, a_m), circular_gap(c_p, c_m)],
                [b_p - b_m, d_p - d_m],
            ]) / (2 * h)
            dets.append(np.linalg.det(j))
        np.testing.assert_allclose(dets, 1.0, atol=1e-4)


class TestDelta:
    """Test the corner constant"""

    def test_constant_wall(self):
        """Test no corner gives Delta = 0"""
        assert compute_delta(WallMotion.constant(1.0)) == 0.0

    def test_shallow_profile_closed_form(self):
        """Test Delta for l = 1 - t + t^2 against its closed form"""
        expected = -2.0 * (2.0 / 3.0 + 4.0 * math.pi / (9.0 * math.sqrt(3.0)))
        assert compute_delta(shallow_corner_profile()) == pytest.approx(expected, rel=1e-9)

    def test_parabolic_against_riemann_sum(self):
        """Test quadrature against a million-point midpoint sum"""
        wall = parabolic_profile(2.0)
        assert wall.sigma == pytest.approx(4.0)
        assert compute_delta(wall) == pytest.approx(riemann_delta(wall, 1_000_000), rel=1e-9)

    def test_scale_invariance(self):
        """Test Delta(c l) = Delta(l)"""
        wall = parabolic_profile(2.0)
        assert compute_delta(wall.scaled(3.0)) == pytest.approx(compute_delta(wall), rel=1e-9)

    def test_default_profile_above_four(self):
        """Test the default corner profile lands on the hyperbolic Delta >= 4.5 branch"""
        delta = compute_delta(default_corner_profile())
        assert 4.5 < delta < 5.5
        assert hyperbolicity_check(delta).hyperbolic

    def test_nonpositive_profile(self):
        """Test a profile touching zero raises"""
        with pytest.raises(DomainError, match="not strictly positive"):
            compute_delta(WallMotion.polynomial([-0.5, 1.0, -1.0]))


class TestHyperbolicity:
    """Test the Delta outside (0, 4) criterion"""

    def test_verdicts(self):
        """Test the covered, uncovered and boundary cases"""
        assert hyperbolicity_check(5.0).verdict == "hyperbolic"
        assert hyperbolicity_check(-3.0).hyperbolic
        uncovered = hyperbolicity_check(2.0)
        assert not uncovered.hyperbolic
        assert uncovered.verdict == "not covered"

    def test_zero_is_degenerate(self):
        """Test Delta = 0 is hyperbolic by the condition but flagged"""
        verdict = hyperbolicity_check(0.0)
        assert verdict.hyperbolic
        assert verdict.degenerate
        assert verdict.boundary

    def test_four_is_inconclusive(self):
        """Test the upper boundary"""
        verdict = hyperbolicity_check(4.0)
        assert verdict.boundary
        assert verdict.verdict == "inconclusive"


class TestLimitChart:
    """Test the chart from pingpong states to limit coordinates"""

    def test_inverse(self):
        """Test the inverse chart recovers the coordinates"""
        wall = shallow_corner_profile()
        state = from_limit_chart(wall, 0.4, 100.0)
        theta, M = to_limit_chart(wall, state)
        assert theta == pytest.approx(0.4, abs=1e-9)
        assert M == pytest.approx(100.0, rel=1e-12)

    def test_static_wall_chart(self):
        """Test M = u / 2 and theta = phase * u / 2 between walls at rest"""
        wall = WallMotion.constant(1.0)
        theta, M = to_limit_chart(wall, PingpongState(0.1, 4.0))
        assert M == pytest.approx(2.0)
        assert theta == pytest.approx(0.2)

    def test_approximation_improves_with_energy(self, rng):
        """Test the pingpong step approaches the limit map at high energy"""
        rows = approximation_ladder(shallow_corner_profile(), [25.0, 200.0], 40, rng)
        assert [r.level for r in rows] == [25.0, 200.0]
        assert all(r.failed == 0 for r in rows)
        assert rows[1].in_measure <= rows[0].in_measure
        assert rows[1].in_measure < 0.1

    def test_ladder_arguments(self, rng):
        """Test empty ladders raise"""
        with pytest.raises(ArgumentError, match="levels must be positive"):
            approximation_ladder(shallow_corner_profile(), [], 10, rng)


class TestPingpongSystem:
    """Test the velocity-band extension"""

    def test_band_follows_velocity(self):
        """Test the cell is floor(I) after a step"""
        system = PingpongSystem(WallMotion.constant(1.0), base_band=3)
        x = system.extended_step(system.origin())
        assert x.cell == LatticeVector((3,), 1)
        assert x.base.I == 3.5

    def test_band_too_slow(self):
        """Test bands slower than the wall are rejected"""
        with pytest.raises(ConfigurationError, match="slower than the wall"):
            PingpongSystem(default_corner_profile(), base_band=2)

    def test_sample_in_band(self, rng):
        """Test sampled velocities lie in their band"""
        system = PingpongSystem(shallow_corner_profile(), base_band=10)
        x = system.sample_from_cell_weight(LatticeVector((12,), 1), rng)
        assert 12.0 <= x.base.I < 13.0


class TestBouncingEvent:
    """Test ball collisions with the moving wall"""

    def test_static_wall_period(self):
        """Test s = 2v/g and v' = v over a resting wall"""
        event = bouncing_event(WallMotion.constant(0.0), 1.0, 0.0, 0.0, 1.5)
        assert event.time == pytest.approx(3.0, abs=1e-10)
        assert event.v_out == pytest.approx(1.5, abs=1e-10)

    def test_moving_wall_shift(self):
        """Test a wall moving at w adds 2w to the reflected speed"""
        wall = triangle_profile(1.0, 0.2)
        event = bouncing_event(wall, 2.0, 0.0, wall.value(0.0), 0.1)
        assert event.time == pytest.approx(0.3, abs=1e-10)
        assert event.wall_velocity == pytest.approx(-0.2)
        assert event.v_in == pytest.approx(-0.5, abs=1e-9)
        assert event.v_out == pytest.approx(2 * event.wall_velocity - event.v_in)

    def test_flight_energy(self, rng):
        """Test v^2/2 + g x is conserved along each flight"""
        wall = sine_velocity_wall(0.1)
        g = 1.0
        for _ in range(50):
            t, v = float(rng.random()), float(rng.uniform(0.5, 3.0))
            x = wall.value(t) + float(rng.uniform(0.0, 1.0))
            event = bouncing_event(wall, g, t, x, v)
            assert 0.5 * event.v_in ** 2 + g * event.x == pytest.approx(0.5 * v * v + g * x, abs=1e-10)

    def test_below_wall(self):
        """Test a ball under the wall raises"""
        with pytest.raises(DomainError, match="below the wall"):
            bouncing_event(WallMotion.constant(0.0), 1.0, 0.0, -0.1, 1.0)

    def test_gravity_must_be_positive(self):
        """Test g <= 0 raises"""
        with pytest.raises(ArgumentError, match="gravity must be positive"):
            bouncing_event(WallMotion.constant(0.0), 0.0, 0.0, 0.0, 1.0)


class TestBouncingMaps:
    """Test the exact and explicit bouncing-ball maps"""

    def test_limit_worked_example(self):
        """Test g = 2, v = 0.25 over a wall with velocity 0.1 sin(2 pi t)"""
        t, v = bouncing_limit_map(sine_velocity_wall(0.1), 2.0, 0.0, 0.25)
        assert t == pytest.approx(0.25)
        assert v == pytest.approx(0.45)

    def test_limit_static_wall(self):
        """Test a wall at rest keeps v"""
        t, v = bouncing_limit_map(WallMotion.constant(0.0), 1.0, 0.2, 1.3)
        assert t == pytest.approx(0.8)
        assert v == 1.3

    def test_exact_map_static_wall(self):
        """Test the exact map reduces to the explicit one over a wall at rest"""
        nxt = bouncing_map(WallMotion.constant(0.0), 1.0, BallState(0.2, 1.3))
        assert nxt.phase == pytest.approx(0.8, abs=1e-9)
        assert nxt.v == pytest.approx(1.3, abs=1e-9)

    def test_limit_area_preserving(self, rng):
        """Test the finite-difference Jacobian determinant is one"""
        wall = sine_velocity_wall(0.1)
        g, h = 2.0, 1e-6
        dets = []
        for _ in range(1000):
            t, v = float(rng.random()), float(rng.uniform(0.5, 5.0))
            a_p, b_p = bouncing_limit_map(wall, g, t + h, v)
            a_m, b_m = bouncing_limit_map(wall, g, t - h, v)
            c_p, d_p = bouncing_limit_map(wall, g, t, v + h)
            c_m, d_m = bouncing_limit_map(wall, g, t, v - h)
            j = np.array([
                [circular_gap(a_p, a_m), circular_gap(c_p, c_m)],
                [b_p - b_m, d_p - d_m],
            ]) / (2 * h)
            dets.append(np.linalg.det(j))
        np.testing.assert_allclose(dets, 1.0, atol=1e-4)

    def test_factor_map_commutes_with_quotient(self, rng):
        """Test quotient then factor map equals limit map then quotient"""
        wall = sine_velocity_wall(0.1)
        g = 2.0
        for _ in range(200):
            t, v = float(rng.random()), float(rng.uniform(0.5, 5.0))
            a = ball_quotient(g, *bouncing_limit_map(wall, g, t, v))
            b = bouncing_factor_map(wall, g, *ball_quotient(g, t, v))
            assert abs(circular_gap(a[0], b[0])) < 1e-9
            assert abs(circular_gap(a[1] / (g / 2), b[1] / (g / 2))) < 1e-9

    def test_approximation_improves_with_speed(self, rng):
        """Test the exact map approaches the explicit map for fast balls"""
        rows = bouncing_approximation_ladder(sine_velocity_wall(0.1), 8.0, [2.0, 16.0], 30, rng)
        assert rows[1].in_measure < rows[0].in_measure


class TestJingCondition:
    """Test the uniform acceleration clauses"""

    def test_convex_wall(self):
        """Test h'' = 1 satisfies the first clause"""
        verdict = check_jing_condition(WallMotion.polynomial([0.0, -0.5, 0.5]), a=2.0, eps=0.1, g=1.0)
        assert verdict.clause == "convex"
        assert verdict.verdict == "clause one"
        assert verdict.holds

    def test_free_fall_wall(self):
        """Test h'' = -a satisfies the second clause"""
        a = 3.0
        verdict = check_jing_condition(WallMotion.polynomial([0.0, a / 2, -a / 2]), a=a, eps=1e-9, g=1.0)
        assert verdict.clause == "near_free_fall"
        assert verdict.holds

    def test_neither_clause(self):
        """Test a sign-changing acceleration far from -a"""
        verdict = check_jing_condition(sine_velocity_wall(0.1), a=3.0, eps=0.1)
        assert not verdict.holds
        assert verdict.verdict == "not covered"

    def test_a_must_exceed_g(self):
        """Test the declared a > g precondition"""
        with pytest.raises(ArgumentError, match="must exceed"):
            check_jing_condition(sine_velocity_wall(0.1), a=1.0, eps=0.1, g=2.0)

    def test_missing_g_is_inconclusive(self):
        """Test a matching clause without g leaves the a > g half unchecked"""
        verdict = check_jing_condition(WallMotion.polynomial([0.0, -0.5, 0.5]), a=2.0, eps=0.1)
        assert verdict.clause == "convex"
        assert verdict.a_exceeds_g is None
        assert verdict.verdict == "inconclusive"
        assert not verdict.holds


class TestBouncingFlow:
    """Test the ball flow and its extension"""

    def test_flight_without_bounce(self):
        """Test free fall over a short time"""
        t, x, v = bouncing_flow(WallMotion.constant(0.0), 1.0, 0.0, 0.0, 1.0, 0.5)
        assert (t, x, v) == pytest.approx((0.5, 0.375, 0.5))

    def test_flight_through_bounce(self):
        """Test the state half a time unit after a bounce"""
        t, x, v = bouncing_flow(WallMotion.constant(0.0), 1.0, 0.0, 0.0, 1.0, 2.5)
        assert t == pytest.approx(2.5)
        assert x == pytest.approx(0.375, abs=1e-9)
        assert v == pytest.approx(0.5, abs=1e-9)

    def test_system_step(self):
        """Test cells track floor(gap) and floor(v)"""
        system = BouncingFlowSystem(WallMotion.constant(0.0), g=1.0, T=0.5)
        x = system.extended_step(system.origin())
        assert x.cell == LatticeVector((0, 0), 1)
        assert x.base.t == pytest.approx(0.5)
        assert x.base.gap == pytest.approx(0.625)
        assert x.base.v == pytest.approx(0.0, abs=1e-12)

    def test_system_absolute_round_trip(self):
        """Test absolute coordinates rebuild the extended state"""
        system = BouncingFlowSystem(sine_velocity_wall(0.1))
        x = system.from_absolute(0.3, sine_velocity_wall(0.1).value(0.3) + 2.25, -1.5)
        assert x.cell == LatticeVector((2, -2), 1)
        assert isinstance(x, ExtendedState)
        t, _, v = system.absolute(x)
        assert (t, v) == pytest.approx((0.3, -1.5))
