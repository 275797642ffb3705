"""
Unit tests for oracles/ - Random-walk cocycles, exact pmfs, SDE sampler, distances
"""

import numpy as np
import pytest

from cocycle.system import birkhoff_displacement, iterate
from core.errors import ArgumentError, ResourceError
from oracles.distances import in_measure_distance, ks_distance
from oracles.random_walk import (
    StepDistribution,
    exact_pmf,
    lazy_walk,
    nearest_neighbour_walk,
    simple_walk,
    srw_system,
)
from oracles.sde import SdeConfig, em_k_sde


class TestStepDistribution:
    """Test step law validation and moments"""

    def test_probabilities_must_sum_to_one(self):
        """Test sum check"""
        with pytest.raises(ArgumentError, match="sum to"):
            StepDistribution.from_dict({(1,): 0.5, (-1,): 0.4})

    def test_probabilities_must_be_positive(self):
        """Test positivity check"""
        with pytest.raises(ArgumentError, match="positive"):
            StepDistribution.from_dict({(1,): 1.0, (-1,): 0.0})

    def test_lazy_variance(self):
        """Test lazy walk step variance 1/2"""
        np.testing.assert_allclose(lazy_walk().covariance(), [[0.5]])

    def test_periods(self):
        """Test simple walk has period 2, lazy walk is aperiodic"""
        assert simple_walk(1).period() == 2
        assert lazy_walk().period() == 1
        assert nearest_neighbour_walk().period() == 2


class TestSrwSystem:
    """Test the symbol-stream cocycle"""

    def test_one_step_law(self, rng):
        """Test tau_1 is distributed as the step law within 4 standard errors"""
        system = srw_system(lazy_walk(), seed=1)
        N = 20000
        values = np.array([system.displacement(system.sample_base(rng))[0] for _ in range(N)])
        for cell, p in {-1: 0.25, 0: 0.5, 1: 0.25}.items():
            assert abs(np.mean(values == cell) - p) <= 4 * np.sqrt(p * (1 - p) / N)

    def test_same_seed_same_trajectory(self):
        """Test two systems built from one seed agree step by step"""
        a = srw_system(lazy_walk(), seed=99)
        b = srw_system(lazy_walk(), seed=99)
        _, path_a = iterate(a, a.origin(), 30, record=range(31))
        _, path_b = iterate(b, b.origin(), 30, record=range(31))
        assert [x.cell for x in path_a.values()] == [x.cell for x in path_b.values()]

    def test_stream_crosses_block_boundary(self):
        """Test vectorised advance agrees with single steps across symbol blocks"""
        system = srw_system(lazy_walk(), seed=3)
        y = system.origin().base
        y = type(y)(y.key, 1000)
        stepwise = system.zero()
        z = y
        for _ in range(60):
            z, tau = system.step(z)
            stepwise = stepwise + tau
        assert system.advance(y, 60)[1] == stepwise

    def test_nearest_neighbour_return_probability(self):
        """Test P(S_2 = 0) = 1/4 for the planar walk"""
        assert exact_pmf(nearest_neighbour_walk(), 2)[(0, 0)] == pytest.approx(0.25)

    def test_base_metric(self):
        """Test stream metric is zero on equal streams and at most one otherwise"""
        system = srw_system(lazy_walk(), seed=3)
        y = system.origin().base
        assert system.base_metric(y, y) == 0.0
        assert 0.0 <= system.base_metric(y, system.base_step(y)) <= 1.0


class TestExactPmf:
    """Test convolution-exact laws of tau_n"""

    def test_simple_two_steps(self):
        """Test hand enumeration {-2: 1/4, 0: 1/2, 2: 1/4}"""
        table = exact_pmf(simple_walk(1), 2).as_dict()
        assert table.keys() == {(-2,), (0,), (2,)}
        assert table[(-2,)] == pytest.approx(0.25)
        assert table[(0,)] == pytest.approx(0.5)
        assert table[(2,)] == pytest.approx(0.25)

    def test_lazy_one_step(self):
        """Test n=1 reads off the step law"""
        table = exact_pmf(lazy_walk(), 1).as_dict()
        assert table == pytest.approx({(-1,): 0.25, (0,): 0.5, (1,): 0.25})

    def test_zero_steps_point_mass(self):
        """Test n=0 is the point mass at the origin"""
        assert exact_pmf(nearest_neighbour_walk(), 0).as_dict() == {(0, 0): 1.0}

    def test_mass_and_support(self):
        """Test total mass and Minkowski-sum support at n=128"""
        table = exact_pmf(lazy_walk(), 128)
        assert abs(table.total() - 1.0) <= 1e-12
        assert len(table.support()) == 2 * 128 + 1

    def test_convolution_budget(self):
        """Test n above the bound raises a resource error"""
        with pytest.raises(ResourceError, match="n <= 128"):
            exact_pmf(lazy_walk(), 129)

    def test_matches_simulation(self, rng):
        """Test empirical tau_16 against the exact table"""
        system = srw_system(lazy_walk(), seed=5)
        N = 20000
        table = exact_pmf(lazy_walk(), 16)
        values = np.array([birkhoff_displacement(system, system.sample_base(rng), 16)[0] for _ in range(N)])
        for cell in range(-4, 5):
            p = table[(cell,)]
            assert abs(np.mean(values == cell) - p) <= 4 * np.sqrt(p * (1 - p) / N)


class TestEmKSde:
    """Test the Galton-energy SDE sampler"""

    def test_zero_noise_is_deterministic(self, rng):
        """Test sigma=0 leaves K at its start"""
        out = em_k_sde(SdeConfig(sigma_bar=0.0, k0=1.5), 100, rng)
        np.testing.assert_array_equal(out, np.full(100, 1.5))

    @pytest.mark.parametrize("scheme", ["direct", "transformed"])
    def test_scaling_symmetry(self, scheme):
        """Test samples for sigma=2 equal twice those for sigma=1 under shared noise"""
        one = em_k_sde(SdeConfig(sigma_bar=1.0, scheme=scheme), 500, np.random.default_rng(8))
        two = em_k_sde(SdeConfig(sigma_bar=2.0, scheme=scheme), 500, np.random.default_rng(8))
        np.testing.assert_allclose(two, 2.0 * one, atol=1e-3)

    def test_schemes_agree(self):
        """Test direct and transformed schemes give close laws"""
        direct = em_k_sde(SdeConfig(scheme="direct"), 20000, np.random.default_rng(11))
        transformed = em_k_sde(SdeConfig(scheme="transformed"), 20000, np.random.default_rng(11))
        assert ks_distance(direct, transformed) <= 0.03

    def test_halving_step_shares_paths(self):
        """Test substeps=1 and substeps=2 draw the same Brownian paths"""
        coarse = em_k_sde(SdeConfig(noise_refinement=2, substeps=1), 20000, np.random.default_rng(4))
        fine = em_k_sde(SdeConfig(noise_refinement=2, substeps=2), 20000, np.random.default_rng(4))
        assert ks_distance(coarse, fine) <= 0.03

    def test_nonnegative(self, rng):
        """Test samples stay nonnegative"""
        assert np.all(em_k_sde(SdeConfig(scheme="direct"), 1000, rng) >= 0.0)

    def test_refinement_must_be_divisible(self):
        """Test substeps must divide the noise refinement"""
        with pytest.raises(ValueError, match="must divide"):
            SdeConfig(noise_refinement=3, substeps=2)

    def test_step_count_lower_bound(self):
        """Test fewer than 1000 steps is rejected"""
        with pytest.raises(ValueError):
            SdeConfig(steps=10)


class TestDistances:
    """Test KS and in-measure distances"""

    def test_identical_samples(self):
        """Test identical samples are at distance 0"""
        a = np.linspace(0, 1, 100)
        assert ks_distance(a, a) == 0.0

    def test_disjoint_supports(self):
        """Test disjoint samples are at distance 1"""
        assert ks_distance([0.0, 0.1, 0.2], [5.0, 6.0]) == 1.0

    def test_shifted_uniforms(self, rng):
        """Test U(0,1) vs U(0.5,1.5) gives 0.5"""
        a = rng.random(100000)
        b = rng.random(100000) + 0.5
        assert ks_distance(a, b) == pytest.approx(0.5, abs=0.01)

    def test_empty_sample(self):
        """Test empty input raises"""
        with pytest.raises(ArgumentError, match="nonempty"):
            ks_distance([], [1.0])

    def test_in_measure_distance(self):
        """Test inf{eps : P(d > eps) <= eps} on small samples"""
        assert in_measure_distance([0.0, 0.0, 0.0]) == 0.0
        # one large deviation out of ten costs 0.1
        assert in_measure_distance([0.01] * 9 + [5.0]) == pytest.approx(0.1)
        assert in_measure_distance([0.3] * 4) == pytest.approx(0.3)
