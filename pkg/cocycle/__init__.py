# Z^d-extension framework: lattice cells, systems, observables, cube averages
from .lattice import LatticeVector, CubeSpec
from .system import CocycleSystem, ExtendedState, extend_step, birkhoff_displacement, iterate
from .observables import GlobalObservable, LocalObservable, decompose_local
from .averages import cube_average, check_global_membership, MembershipReport

__all__ = [
    "LatticeVector",
    "CubeSpec",
    "CocycleSystem",
    "ExtendedState",
    "extend_step",
    "birkhoff_displacement",
    "iterate",
    "GlobalObservable",
    "LocalObservable",
    "decompose_local",
    "cube_average",
    "check_global_membership",
    "MembershipReport",
]
