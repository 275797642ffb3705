"""
Pytest conftest.py - Shared fixtures and configuration for all tests
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from cocycle.lattice import LatticeVector  # noqa: E402
from cocycle.system import CocycleSystem  # noqa: E402
from oracles.random_walk import deterministic_walk, lazy_walk, simple_walk, srw_system  # noqa: E402


class CircleRotationSystem(CocycleSystem):
    """Irrational rotation of [0, 1) with tau = 1 on [0, 1/2) and -1 elsewhere."""

    d1, d2 = 0, 1
    name = "rotation"

    def __init__(self, alpha: float = (np.sqrt(5.0) - 1.0) / 2.0):
        self.alpha = alpha

    def sample_base(self, rng):
        return float(rng.random())

    def step(self, y):
        tau = LatticeVector((1 if y < 0.5 else -1,), 0)
        return (y + self.alpha) % 1.0, tau

    def base_metric(self, y1, y2):
        d = abs(y1 - y2) % 1.0
        return min(d, 1.0 - d)


@pytest.fixture
def rng():
    """Seeded generator shared by a single test"""
    return np.random.default_rng(20180501)


@pytest.fixture
def lazy_system():
    """Lazy walk (1/4, 1/2, 1/4) on Z"""
    return srw_system(lazy_walk(), seed=7)


@pytest.fixture
def simple_system():
    """Simple walk on Z, period 2"""
    return srw_system(simple_walk(1), seed=7)


@pytest.fixture
def drift_system():
    """Deterministic drift tau = e1"""
    return srw_system(deterministic_walk((1,)), seed=7)


@pytest.fixture
def rotation_system():
    """Circle rotation with a real-valued base point"""
    return CircleRotationSystem()
