"""
Normalized cube averages and finite-size G_O / G_U membership certificates.
"""
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from core.config import settings
from core.errors import ArgumentError
from core.logging import logger
from core.parallel import batch_means, ensemble_seed, run_ensemble
from .lattice import CubeSpec
from .observables import GlobalObservable
from .system import CocycleSystem


class _CubeSample:
    def __init__(self, observable: GlobalObservable, cube: CubeSpec, system: CocycleSystem):
        self.observable = observable
        self.cube = cube
        self.system = system

    def __call__(self, index: int, rng: np.random.Generator) -> float:
        return self.observable(self.system.sample_in_cube(self.cube, rng))


def cube_average(
    observable: GlobalObservable,
    cube: CubeSpec,
    system: CocycleSystem,
    N: int,
    rng: np.random.Generator,
    workers: Optional[int] = None,
) -> Tuple[float, float]:
    """
    Monte Carlo estimate of (1/mu(V)) * integral over V of Phi d mu.

    Returns:
        (estimate, batch-means standard error)

    Raises:
        ArgumentError: N < 2
    """
    if N < 2:
        raise ArgumentError(f"cube average needs at least 2 samples, got {N}")
    if cube.dim != system.dim:
        raise ArgumentError(f"cube dimension {cube.dim} does not match system dimension {system.dim}")
    if observable.is_constant:
        return observable.constant, 0.0
    seed = ensemble_seed(rng)
    values = run_ensemble(_CubeSample(observable, cube, system), N, seed, workers)
    return batch_means(values)


class MembershipReport(BaseModel):
    scheme: str
    average: float
    sizes: List[int]
    worst_deviation: List[float]
    standard_error: List[float]
    shapes: List[List[List[float]]] = []
    centers: List[List[int]] = []
    tol: float
    verdict: str


def _default_shapes(dim: int, d1: int) -> List[Tuple[Tuple[float, ...], Tuple[float, ...]]]:
    low = tuple(0.0 if j < d1 else -1.0 for j in range(dim))
    shapes = [(low, (1.0,) * dim)]
    shapes.append((tuple(0.0 for _ in range(dim)), (1.0,) * dim))
    shapes.append((tuple(0.0 if j < d1 else -0.5 for j in range(dim)), (2.0,) * dim))
    return shapes


def check_global_membership(
    observable: GlobalObservable,
    scheme: str,
    size_ladder: Sequence[int],
    center_ladder: Sequence[Sequence[int]],
    N: int,
    rng: np.random.Generator,
    tol: float,
    system: CocycleSystem,
    shapes: Optional[Sequence[Tuple[Sequence[float], Sequence[float]]]] = None,
) -> MembershipReport:
    """
    Finite-size certificate for Phi in G_O or G_U.

    G_O averages over origin-anchored boxes prod_j [a_{j,-} s, a_{j,+} s] for a
    ladder of shapes a; G_U averages over boxes of side s at every listed
    center. The verdict compares the worst deviation at the largest size to
    ``tol`` plus the standard-error band.

    Raises:
        ArgumentError: Phi-bar undeclared, unknown scheme or non-increasing ladder
    """
    if observable.average is None:
        raise ArgumentError(f"{observable.name}: membership check needs a declared average")
    if scheme not in ("G_O", "G_U"):
        raise ArgumentError(f"scheme must be G_O or G_U, got {scheme!r}")
    sizes = [int(s) for s in size_ladder]
    if not sizes or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ArgumentError(f"size ladder must be nonempty and strictly increasing, got {sizes}")
    if scheme == "G_U" and not center_ladder:
        raise ArgumentError("G_U check needs at least one center")

    d1 = system.d1
    box_shapes = [(tuple(a), tuple(b)) for a, b in (shapes or _default_shapes(system.dim, d1))]
    worst, errors = [], []
    for size in sizes:
        if scheme == "G_O":
            cubes = [CubeSpec.scaled_box(a, b, size, d1) for a, b in box_shapes]
        else:
            cubes = [CubeSpec.centered(center, size, d1) for center in center_ladder]
        deviation, deviation_se = 0.0, 0.0
        for cube in cubes:
            estimate, se = cube_average(observable, cube, system, N, rng)
            gap = abs(estimate - observable.average)
            if gap >= deviation:
                deviation, deviation_se = gap, se
        worst.append(deviation)
        errors.append(deviation_se)

    passed = worst[-1] <= tol + settings.SE_BAND * errors[-1]
    report = MembershipReport(
        scheme=scheme,
        average=observable.average,
        sizes=sizes,
        worst_deviation=worst,
        standard_error=errors,
        shapes=[[list(a), list(b)] for a, b in box_shapes] if scheme == "G_O" else [],
        centers=[list(c) for c in center_ladder] if scheme == "G_U" else [],
        tol=tol,
        verdict="pass" if passed else "fail",
    )
    logger.info("membership_checked", observable=observable.name, scheme=scheme, verdict=report.verdict, worst=worst[-1])
    return report
