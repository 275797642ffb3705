# Exact reference computations: lattice walks, the Galton-energy SDE, distribution distances
from .random_walk import StepDistribution, srw_system, exact_pmf, RandomWalkSystem, PmfTable
from .sde import SdeConfig, em_k_sde
from .distances import ks_distance

__all__ = [
    "StepDistribution",
    "srw_system",
    "exact_pmf",
    "RandomWalkSystem",
    "PmfTable",
    "SdeConfig",
    "em_k_sde",
    "ks_distance",
]
