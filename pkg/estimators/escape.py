"""
Escape from bounded cell balls, and the Galton-board energy process.
"""
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from billiards.dynamics import phi_from_uniform
from billiards.geometry import BoundaryCoord
from billiards.systems import GaltonBoardSystem
from cocycle.observables import LocalObservable, cell_indicator_local, decompose_local
from cocycle.system import CocycleSystem, ExtendedState, iterate
from core.errors import ArgumentError
from core.logging import logger
from core.parallel import batch_means, ensemble_seed, run_ensemble
from .covariance import DYNAMICS_ERRORS, is_grazing
from .reports import EscapePoint, EscapeReport
from .sampling import WeightedSampler, check_acceptance


class _EscapeSample:
    def __init__(self, system: CocycleSystem, sampler: WeightedSampler, R: float, times: List[int]):
        self.system = system
        self.sampler = sampler
        self.R = R
        self.times = times

    def __call__(self, index: int, rng: np.random.Generator) -> Tuple[int, Optional[List[float]]]:
        x, proposals = self.sampler.draw_counted(rng)
        try:
            _, seen = iterate(self.system, x, max(self.times), record=self.times)
        except DYNAMICS_ERRORS:
            return proposals, None
        seen[0] = x
        if any(is_grazing(state.base) for state in seen.values()):
            return proposals, None
        return proposals, [1.0 if seen[n].cell.norm() <= self.R else 0.0 for n in self.times]


def escape_fraction(
    system: CocycleSystem,
    initial: Optional[LocalObservable],
    R: float,
    n_list: Sequence[int],
    N: int,
    rng: np.random.Generator,
    workers: Optional[int] = None,
) -> EscapeReport:
    """
    Fraction of orbits with |z(T^n x)| <= R, starts drawn from the measure
    initial * mu normalized (the zero cell when ``initial`` is None).

    Raises:
        ArgumentError: signed initial density, R < 0, bad times or N
    """
    times = sorted({int(n) for n in n_list})
    if not times or times[0] < 0:
        raise ArgumentError(f"n_list must be nonempty and nonnegative, got {list(n_list)}")
    if R < 0:
        raise ArgumentError(f"R must be nonnegative, got {R}")
    if N < 1:
        raise ArgumentError(f"sample count must be positive, got {N}")
    if initial is None:
        initial = cell_indicator_local([system.zero().coords], system.d1)
    if not initial.nonnegative:
        raise ArgumentError(f"initial density {initial.name} must be nonnegative")
    pieces = decompose_local(initial, system=system, rng=rng)
    if not pieces:
        raise ArgumentError(f"initial density {initial.name} has zero mass")
    sampler = WeightedSampler(pieces[0][1], system)

    results = run_ensemble(_EscapeSample(system, sampler, R, times), N, ensemble_seed(rng), workers)
    check_acceptance(initial.name, [proposals for proposals, _ in results])
    kept = np.array([row for _, row in results if row is not None], dtype=float).reshape(-1, len(times))
    dropped = N - kept.shape[0]
    if dropped:
        logger.warning("trajectories_dropped", system=system.name, dropped=dropped)
    if kept.shape[0] == 0:
        raise ArgumentError(f"every trajectory of {system.name} was dropped")
    points = []
    for j, n in enumerate(times):
        fraction, se = batch_means(kept[:, j])
        points.append(EscapePoint(n=n, fraction=fraction, se=se))
    fractions = [p.fraction for p in points]
    decreasing = all(b < a for a, b in zip(fractions, fractions[1:]))
    logger.info("escape_estimated", system=system.name, R=R, fractions=fractions, decreasing=decreasing)
    return EscapeReport(
        R=R,
        initial=initial.name,
        samples=kept.shape[0],
        dropped=dropped,
        points=points,
        decreasing=decreasing,
    )


@dataclass
class EnergyPaths:
    """Rescaled kinetic energy K_floor(t n) / sqrt(n) on ``t_grid``, one row per kept orbit."""
    n: int
    t_grid: np.ndarray
    paths: np.ndarray
    excluded: int

    def marginal(self, t: float) -> np.ndarray:
        j = int(np.argmin(np.abs(self.t_grid - t)))
        return self.paths[:, j]


def galton_start(system: GaltonBoardSystem, rng: np.random.Generator) -> ExtendedState:
    """Fixed point on disk 0 of cell 0, reflection angle drawn from the cos law."""
    zero = system.zero()
    return ExtendedState(BoundaryCoord(zero, 0, 0.0, phi_from_uniform(float(rng.random()))), zero)


class _EnergySample:
    def __init__(self, system: GaltonBoardSystem, n: int, indices: List[int]):
        self.system = system
        self.n = n
        self.indices = indices

    def __call__(self, index: int, rng: np.random.Generator) -> Optional[List[float]]:
        x = galton_start(self.system, rng)
        try:
            _, seen = iterate(self.system, x, max(self.indices), record=self.indices)
        except DYNAMICS_ERRORS:
            return None
        seen[0] = x
        if any(seen[k].base.grazing for k in self.indices):
            return None
        scale = math.sqrt(self.n)
        return [self.system.kinetic_energy(seen[k].base) / scale for k in self.indices]


def galton_energy_paths(
    system: GaltonBoardSystem,
    n: int,
    t_grid: Sequence[float],
    N: int,
    rng: np.random.Generator,
    workers: Optional[int] = None,
) -> EnergyPaths:
    """
    Collision kinetic energies along N orbits, rescaled to K_floor(t n) / sqrt(n).

    Trapped, stalled and grazing orbits are excluded and counted.
    """
    if n < 1:
        raise ArgumentError(f"n must be at least 1, got {n}")
    if N < 1:
        raise ArgumentError(f"sample count must be positive, got {N}")
    grid = np.asarray(t_grid, dtype=float)
    if grid.size == 0 or grid.min() < 0.0 or grid.max() > 1.0:
        raise ArgumentError(f"t_grid must be a nonempty subset of [0, 1], got {list(t_grid)}")
    indices = [int(math.floor(t * n)) for t in grid]
    results = run_ensemble(_EnergySample(system, n, indices), N, ensemble_seed(rng), workers)
    kept = [r for r in results if r is not None]
    excluded = N - len(kept)
    if excluded:
        logger.warning("energy_paths_excluded", system=system.name, excluded=excluded)
    paths = np.array(kept, dtype=float).reshape(-1, grid.size)
    logger.info("energy_paths_sampled", system=system.name, n=n, kept=len(kept))
    return EnergyPaths(n=n, t_grid=grid, paths=paths, excluded=excluded)


class _Increments:
    def __init__(self, system: GaltonBoardSystem, steps: int, block: int):
        self.system = system
        self.steps = steps
        self.block = block

    def __call__(self, index: int, rng: np.random.Generator) -> Optional[float]:
        marks = list(range(0, self.steps + 1, self.block))
        x = galton_start(self.system, rng)
        try:
            _, seen = iterate(self.system, x, marks[-1], record=marks)
        except DYNAMICS_ERRORS:
            return None
        seen[0] = x
        energies = np.array([self.system.kinetic_energy(seen[k].base) for k in marks])
        return float(np.mean(np.diff(energies) ** 2) / self.block)


def estimate_sigma_bar(
    system: GaltonBoardSystem,
    steps: int,
    N: int,
    rng: np.random.Generator,
    block: int = 10,
    workers: Optional[int] = None,
) -> float:
    """
    sigma-bar from the quadratic variation of K over blocks of ``block`` collisions.

    The drift sigma^2 / (4K) contributes O(block / K^2) per block and is ignored.
    """
    if block < 1 or steps < block:
        raise ArgumentError(f"need 1 <= block <= steps, got block={block}, steps={steps}")
    if N < 1:
        raise ArgumentError(f"sample count must be positive, got {N}")
    results = run_ensemble(_Increments(system, steps, block), N, ensemble_seed(rng), workers)
    rates = np.array([r for r in results if r is not None], dtype=float)
    if rates.size == 0:
        raise ArgumentError(f"every trajectory of {system.name} was dropped")
    sigma_bar = float(math.sqrt(rates.mean()))
    logger.info("sigma_bar_estimated", system=system.name, steps=steps, sigma_bar=sigma_bar)
    return sigma_bar
