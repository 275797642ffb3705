"""
Unit tests for cocycle/ - Lattice cells, extensions, observables and cube averages
"""

import numpy as np
import pytest

from cocycle.averages import check_global_membership, cube_average
from cocycle.lattice import CubeSpec, LatticeVector
from cocycle.observables import (
    GOLDEN_ALPHA,
    base_global,
    cell_indicator_local,
    constant_global,
    cosine_wave_global,
    decompose_local,
    saturating_global,
    weighted_local,
)
from cocycle.system import CocycleSystem, ExtendedState, birkhoff_displacement, extend_step, iterate
from core.errors import ArgumentError, LatticeError


class TestLatticeVector:
    """Test integer cell arithmetic"""

    def test_addition_is_exact(self):
        """Test coordinatewise addition"""
        a = LatticeVector((3, -2), 1)
        b = LatticeVector((1, 5), 1)
        assert (a + b).coords == (4, 3)
        assert (a - b).coords == (2, -7)

    def test_negative_half_axis_rejected_as_cell(self):
        """Test cells leaving Z_+ raise a lattice error"""
        with pytest.raises(LatticeError, match="leaves Z_\\+"):
            LatticeVector((-1, 0), 1).as_cell()

    def test_displacement_may_be_negative(self):
        """Test displacements are not cells"""
        v = LatticeVector((-1, 0), 1)
        assert not v.is_cell()

    def test_split_mismatch(self):
        """Test adding vectors with different splits"""
        with pytest.raises(ArgumentError, match="split mismatch"):
            LatticeVector((1, 1), 1) + LatticeVector((1, 1), 0)


class TestCubeSpec:
    """Test integer boxes"""

    def test_volume(self):
        """Test cell count"""
        assert CubeSpec((0, -2), (9, 2)).volume == 50

    def test_empty_cube_rejected(self):
        """Test lo > hi raises"""
        with pytest.raises(ArgumentError, match="empty cube"):
            CubeSpec((3,), (2,))

    def test_half_axis_respected(self):
        """Test cube on a half-infinite axis cannot start below zero"""
        with pytest.raises(LatticeError):
            CubeSpec((-1,), (4,), d1=1)

    def test_centered_clamps_half_axis(self):
        """Test centered cube is clamped at the boundary of Z_+"""
        cube = CubeSpec.centered((0,), 10, d1=1)
        assert cube.lo == (0,)
        assert cube.sides == (10,)

    def test_scaled_box(self):
        """Test origin-anchored box rounds inward"""
        cube = CubeSpec.scaled_box((-0.5,), (1.0,), 7)
        assert cube.lo == (-3,)
        assert cube.hi == (7,)


class TestExtendStep:
    """Test T(y, z) = (f(y), z + tau(y))"""

    def test_unit_step_increments_cell(self, drift_system):
        """Test a +1 step moves z=3 to z=4"""
        x = ExtendedState(drift_system.origin().base, LatticeVector((3,)))
        assert extend_step(drift_system, x).cell.coords == (4,)

    def test_constant_drift_five_steps(self, drift_system):
        """Test tau = e1 accumulates to 5 e1"""
        x, _ = iterate(drift_system, drift_system.origin(), 5)
        assert x.cell.coords == (5,)

    def test_state_outside_lattice_rejected(self):
        """Test extended states must sit on a cell"""
        with pytest.raises(LatticeError):
            ExtendedState(0.1, LatticeVector((-2,), 1))

    def test_iterate_records_requested_steps(self, lazy_system):
        """Test recorded states agree with step-by-step iteration"""
        x0 = lazy_system.origin()
        final, seen = iterate(lazy_system, x0, 10, record=[0, 3, 10])
        x = x0
        for _ in range(3):
            x = extend_step(lazy_system, x)
        assert seen[0] == x0
        assert seen[3] == x
        assert seen[10] == final

    def test_iterate_matches_birkhoff_sum(self, lazy_system, rng):
        """Test n steps land on z0 + tau_n(y)"""
        y = lazy_system.sample_base(rng)
        z0 = LatticeVector((11,))
        x, _ = iterate(lazy_system, ExtendedState(y, z0), 40, record=[40])
        assert x.cell == z0 + birkhoff_displacement(lazy_system, y, 40)


class TestBirkhoffDisplacement:
    """Test tau_n"""

    def test_zero_iterates(self, lazy_system, rng):
        """Test tau_0 is the zero vector"""
        assert birkhoff_displacement(lazy_system, lazy_system.sample_base(rng), 0).coords == (0,)

    def test_constant_drift(self, drift_system):
        """Test tau = e1 gives 5 e1"""
        assert birkhoff_displacement(drift_system, drift_system.origin().base, 5).coords == (5,)

    def test_negative_count_rejected(self, lazy_system, rng):
        """Test n < 0 raises"""
        with pytest.raises(ArgumentError, match="nonnegative"):
            birkhoff_displacement(lazy_system, lazy_system.sample_base(rng), -1)

    def test_cocycle_identity(self, lazy_system, rng):
        """Test tau_{m+n}(y) = tau_n(y) + tau_m(f^n y) exactly"""
        for _ in range(50):
            y = lazy_system.sample_base(rng)
            m, n = int(rng.integers(0, 30)), int(rng.integers(0, 30))
            y_n, _ = lazy_system.advance(y, n)
            left = birkhoff_displacement(lazy_system, y, m + n)
            right = birkhoff_displacement(lazy_system, y, n) + birkhoff_displacement(lazy_system, y_n, m)
            assert left == right

    def test_cocycle_identity_on_rotation(self, rotation_system, rng):
        """Test the identity on a system using the default step loop"""
        y = rotation_system.sample_base(rng)
        y_7, _ = rotation_system.advance(y, 7)
        total = birkhoff_displacement(rotation_system, y, 12)
        assert total == birkhoff_displacement(rotation_system, y, 7) + birkhoff_displacement(rotation_system, y_7, 5)

    def test_simple_walk_two_steps(self, simple_system, rng):
        """Test tau_2 law {-2: 1/4, 0: 1/2, 2: 1/4} within 4 standard errors"""
        N = 20000
        values = np.array([birkhoff_displacement(simple_system, simple_system.sample_base(rng), 2)[0] for _ in range(N)])
        for cell, p in {-2: 0.25, 0: 0.5, 2: 0.25}.items():
            freq = np.mean(values == cell)
            assert abs(freq - p) <= 4 * np.sqrt(p * (1 - p) / N)

    def test_non_product_system_rejected(self):
        """Test tau_n is undefined for systems that are not skew products"""

        class Walled(CocycleSystem):
            is_skew_product = False

            def sample_base(self, rng):
                return 0.0

        with pytest.raises(ArgumentError, match="not a skew product"):
            birkhoff_displacement(Walled(), 0.0, 3)


class TestCubeAverage:
    """Test normalized cube integrals"""

    def test_constant_observable(self, lazy_system, rng):
        """Test Phi = c gives c with zero error"""
        estimate, se = cube_average(constant_global(0.7), CubeSpec((0,), (9,)), lazy_system, 100, rng)
        assert estimate == pytest.approx(0.7)
        assert se == 0.0

    def test_too_few_samples(self, lazy_system, rng):
        """Test N < 2 raises"""
        with pytest.raises(ArgumentError, match="at least 2"):
            cube_average(constant_global(1.0), CubeSpec((0,), (9,)), lazy_system, 1, rng)

    def test_cosine_wave_geometric_bound(self, lazy_system, rng):
        """Test |average of cos(2 pi alpha z)| over [0, 999] against the geometric-sum bound"""
        estimate, se = cube_average(cosine_wave_global(), CubeSpec((0,), (999,)), lazy_system, 4000, rng)
        assert abs(estimate) <= 1.0 / (1000 * np.sin(np.pi * GOLDEN_ALPHA)) + 4 * se

    def test_base_observable_matches_nu_average(self, rotation_system, rng):
        """Test Phi(y, z) = psi(y) averages to an independent nu-sample mean"""
        psi = lambda y: np.sin(2 * np.pi * y) ** 2
        estimate, se = cube_average(base_global(psi, None, 1.0), CubeSpec((-50,), (50,)), rotation_system, 4000, rng)
        direct = np.array([psi(rotation_system.sample_base(rng)) for _ in range(4000)])
        direct_se = direct.std(ddof=1) / np.sqrt(direct.size)
        assert abs(estimate - direct.mean()) <= 4 * np.hypot(se, direct_se)

    def test_linearity_under_shared_stream(self, rotation_system):
        """Test average of Phi + Psi equals the sum of averages with one seed"""
        cube = CubeSpec((0,), (200,))
        phi = cosine_wave_global()
        psi = base_global(lambda y: y, 0.5, 1.0)
        both, _ = cube_average(phi.plus(psi), cube, rotation_system, 500, np.random.default_rng(3))
        a, _ = cube_average(phi, cube, rotation_system, 500, np.random.default_rng(3))
        b, _ = cube_average(psi, cube, rotation_system, 500, np.random.default_rng(3))
        assert both == pytest.approx(a + b, abs=1e-12)

    def test_worker_count_does_not_change_result(self, lazy_system):
        """Test sequential and parallel ensembles agree bit for bit"""
        cube = CubeSpec((0,), (999,))
        one = cube_average(cosine_wave_global(), cube, lazy_system, 600, np.random.default_rng(5), workers=1)
        two = cube_average(cosine_wave_global(), cube, lazy_system, 600, np.random.default_rng(5), workers=2)
        assert one == two


class TestGlobalMembership:
    """Test G_O / G_U certificates"""

    def test_constant_passes(self, lazy_system, rng):
        """Test Phi = c passes with zero deviation"""
        report = check_global_membership(constant_global(2.0), "G_U", [10, 20], [(0,), (500,)], 50, rng, 1e-9, lazy_system)
        assert report.verdict == "pass"
        assert report.worst_deviation == [0.0, 0.0]
        assert report.average == 2.0

    def test_cosine_wave_uniform_scheme(self, lazy_system, rng):
        """Test golden-ratio wave stays within the geometric bound at every center"""
        size = 400
        bound = 1.0 / (size * np.sin(np.pi * GOLDEN_ALPHA))
        report = check_global_membership(
            cosine_wave_global(), "G_U", [100, size], [(0,), (1000,), (-5000,)], 3000, rng, bound, lazy_system
        )
        assert report.worst_deviation[-1] <= bound + 4 * report.standard_error[-1]
        assert report.verdict == "pass"

    def test_origin_scheme_uses_shapes(self, lazy_system, rng):
        """Test G_O reports the shape ladder"""
        report = check_global_membership(cosine_wave_global(), "G_O", [200, 400], [], 2000, rng, 0.05, lazy_system)
        assert report.scheme == "G_O"
        assert len(report.shapes) == 3

    def test_saturating_observable_fails(self, lazy_system, rng):
        """Test z/(1+|z|) is center dependent"""
        report = check_global_membership(
            saturating_global(), "G_U", [10, 20], [(-10000,), (10000,)], 200, rng, 0.05, lazy_system
        )
        assert report.verdict == "fail"
        assert report.worst_deviation[-1] > 0.9

    def test_undeclared_average(self, lazy_system, rng):
        """Test scheme needs Phi-bar"""
        with pytest.raises(ArgumentError, match="declared average"):
            check_global_membership(saturating_global(declared_average=None), "G_U", [10], [(0,)], 10, rng, 0.1, lazy_system)

    def test_ladder_must_increase(self, lazy_system, rng):
        """Test non-increasing size ladder raises"""
        with pytest.raises(ArgumentError, match="strictly increasing"):
            check_global_membership(constant_global(1.0), "G_U", [20, 10], [(0,)], 10, rng, 0.1, lazy_system)


class TestObservables:
    """Test observable contracts"""

    def test_global_bound_and_modulus(self, lazy_system, rng):
        """Test declared bound and modulus hold on sampled pairs"""
        phi = cosine_wave_global()
        states = [lazy_system.sample_in_cube(CubeSpec((-100,), (100,)), rng) for _ in range(200)]
        assert phi.check_bound(states)
        distance = lambda a, b: abs(a.cell[0] - b.cell[0])
        assert phi.check_modulus(zip(states, states[1:]), distance)

    def test_local_evaluates_zero_off_support(self):
        """Test weight vanishes outside the support"""
        phi = cell_indicator_local([(0,), (2,)])
        assert phi(ExtendedState(0.3, LatticeVector((2,)))) == 1.0
        assert phi(ExtendedState(0.3, LatticeVector((1,)))) == 0.0
        assert phi.mass() == 2.0

    def test_weight_above_bound_rejected(self):
        """Test cell sup must respect the declared bound"""
        phi = cell_indicator_local([(0,)], value=2.0)
        with pytest.raises(ArgumentError, match="exceeds declared bound"):
            type(phi)(cells=phi.cells, bound=1.0)


class TestDecomposeLocal:
    """Test phi = sum c_i phi_i with nonnegative unit-mass pieces"""

    def test_normalized_nonnegative_single_term(self):
        """Test an already normalized indicator is returned as is"""
        phi = cell_indicator_local([(0,)])
        pieces = decompose_local(phi)
        assert len(pieces) == 1
        assert pieces[0][0] == 1.0
        assert pieces[0][1] is phi

    def test_cancelled_observable_is_empty(self):
        """Test 1_W - 1_W decomposes to nothing"""
        phi = cell_indicator_local([(0,)])
        assert decompose_local(phi - phi) == []

    def test_unnormalized_indicator(self):
        """Test mass is moved into the coefficient"""
        pieces = decompose_local(cell_indicator_local([(0,), (1,), (5,)]))
        assert pieces[0][0] == pytest.approx(3.0)
        assert pieces[0][1].mass() == pytest.approx(1.0)

    def test_signed_weight_recombines_pointwise(self):
        """Test cosine-shaped weight, R=10: two pieces recombine to phi"""
        phi = weighted_local((0,), lambda y: np.cos(2 * np.pi * y), lipschitz=2 * np.pi, bound=1.0, mass=0.0)
        pieces = decompose_local(phi, R=10.0)
        assert len(pieces) == 2
        scale = sum(abs(c) * p.bound for c, p in pieces)
        cell = LatticeVector((0,))
        for y in np.linspace(0.0, 1.0, 1000, endpoint=False):
            x = ExtendedState(float(y), cell)
            total = sum(c * p(x) for c, p in pieces)
            assert abs(total - phi(x)) <= 8 * np.finfo(float).eps * scale
            assert all(p(x) >= 0.0 for _, p in pieces)
        for _, p in pieces:
            assert p.mass() == pytest.approx(1.0, abs=1e-6)
            assert p.lipschitz <= phi.lipschitz

    def test_unknown_mass_estimated(self, rotation_system, rng):
        """Test masses are estimated against nu when not declared"""
        phi = weighted_local((0,), lambda y: y - 0.25, lipschitz=1.0, bound=0.75)
        pieces = decompose_local(phi, system=rotation_system, rng=rng, budget=20000)
        assert len(pieces) == 2
        assert pieces[1][1].mass() == pytest.approx(1.0)

    def test_unknown_mass_without_system(self):
        """Test missing masses need a system"""
        phi = weighted_local((0,), lambda y: y, lipschitz=1.0, bound=1.0)
        with pytest.raises(ArgumentError, match="masses unknown"):
            decompose_local(phi)

    def test_small_R_rejected(self):
        """Test R < 1 raises"""
        with pytest.raises(ArgumentError, match="at least 1"):
            decompose_local(cell_indicator_local([(0,)]), R=0.5)
