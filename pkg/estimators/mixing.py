"""
Local-global and global-global correlation estimators.
"""
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from cocycle.lattice import CubeSpec
from cocycle.observables import GlobalObservable, LocalObservable, decompose_local
from cocycle.system import CocycleSystem, iterate
from core.config import settings
from core.errors import ArgumentError
from core.logging import logger
from core.parallel import batch_means, ensemble_seed, run_ensemble
from .covariance import DYNAMICS_ERRORS, is_grazing
from .reports import CorrelationCurve, CorrelationPoint, CubeMixCell, CubeMixReport
from .sampling import WeightedSampler, check_acceptance


def _check_times(n_list: Sequence[int]) -> List[int]:
    times = [int(n) for n in n_list]
    if not times or any(n < 0 for n in times):
        raise ArgumentError(f"n_list must be nonempty and nonnegative, got {list(n_list)}")
    return times


def _orbit_values(
    system: CocycleSystem, x, times: List[int], observable: GlobalObservable
) -> Optional[List[float]]:
    """Phi(T^n x) for every n in ``times`` along one orbit; None when a recorded state grazes."""
    _, seen = iterate(system, x, max(times), record=times)
    seen[0] = x
    if any(is_grazing(state.base) for state in seen.values()):
        return None
    return [observable(seen[n]) for n in times]


class _CorrelationSample:
    def __init__(self, system: CocycleSystem, sampler: WeightedSampler, observable: GlobalObservable, times: List[int]):
        self.system = system
        self.sampler = sampler
        self.observable = observable
        self.times = times

    def __call__(self, index: int, rng: np.random.Generator) -> Tuple[int, Optional[List[float]]]:
        x, proposals = self.sampler.draw_counted(rng)
        try:
            return proposals, _orbit_values(self.system, x, self.times, self.observable)
        except DYNAMICS_ERRORS:
            return proposals, None


def _columns(results: list, width: int) -> Tuple[np.ndarray, int]:
    kept = [r for r in results if r is not None]
    values = np.array(kept, dtype=float).reshape(-1, width)
    return values, len(results) - len(kept)


def estimate_local_global(
    system: CocycleSystem,
    phi: LocalObservable,
    Phi: GlobalObservable,
    n_list: Sequence[int],
    N: int,
    rng: np.random.Generator,
    R: float = 10.0,
    tolerance: float = 0.01,
    workers: Optional[int] = None,
) -> CorrelationCurve:
    """
    Estimate n -> integral of phi * Phi(T^n) d mu against mu(phi) * Phi-bar.

    phi is split into nonnegative unit-mass pieces; each piece gets its own
    ensemble of starts drawn from phi_i * mu and the curves are recombined with
    the decomposition coefficients.

    Raises:
        ArgumentError: Phi-bar not declared, bad times or N
        SamplerEfficiencyError: a piece cannot be sampled efficiently
    """
    times = _check_times(n_list)
    if N < 1:
        raise ArgumentError(f"sample count must be positive, got {N}")
    if Phi.average is None:
        raise ArgumentError(f"{Phi.name}: declare or pre-estimate Phi-bar before measuring correlations")
    pieces = decompose_local(phi, R, system, rng)
    mass = float(sum(c for c, _ in pieces))
    target = mass * Phi.average

    estimates = np.zeros(len(times))
    variances = np.zeros(len(times))
    total_dropped = 0
    if Phi.is_constant:
        estimates[:] = mass * Phi.constant
    else:
        for c, piece in pieces:
            sampler = WeightedSampler(piece, system)
            results = run_ensemble(_CorrelationSample(system, sampler, Phi, times), N, ensemble_seed(rng), workers)
            check_acceptance(piece.name, [proposals for proposals, _ in results])
            values, dropped = _columns([row for _, row in results], len(times))
            total_dropped += dropped
            if dropped:
                logger.warning("trajectories_dropped", system=system.name, piece=piece.name, dropped=dropped)
            if values.shape[0] == 0:
                raise ArgumentError(f"every trajectory of {system.name} was dropped")
            for j in range(len(times)):
                mean, se = batch_means(values[:, j])
                estimates[j] += c * mean
                variances[j] += (c * se) ** 2

    points = [
        CorrelationPoint(n=n, estimate=float(e), se=float(np.sqrt(v)))
        for n, e, v in zip(times, estimates, variances)
    ]
    last = points[-1]
    verdict = "pass" if abs(last.estimate - target) <= settings.SE_BAND * last.se + tolerance else "fail"
    logger.info(
        "local_global_estimated",
        system=system.name,
        phi=phi.name,
        Phi=Phi.name,
        target=target,
        estimate=last.estimate,
        verdict=verdict,
    )
    return CorrelationCurve(
        observable=Phi.name,
        target=target,
        points=points,
        tolerance=tolerance,
        verdict=verdict,
        dropped=total_dropped,
    )


class _CubeProduct:
    def __init__(self, system: CocycleSystem, Phi1: GlobalObservable, Phi2: GlobalObservable, cube: CubeSpec, times: List[int]):
        self.system = system
        self.Phi1 = Phi1
        self.Phi2 = Phi2
        self.cube = cube
        self.times = times

    def __call__(self, index: int, rng: np.random.Generator) -> Optional[List[float]]:
        x = self.system.sample_in_cube(self.cube, rng)
        first = self.Phi1(x)
        try:
            later = _orbit_values(self.system, x, self.times, self.Phi2)
        except DYNAMICS_ERRORS:
            return None
        if later is None:
            return None
        return [first * value for value in later]


def estimate_global_global(
    system: CocycleSystem,
    Phi1: GlobalObservable,
    Phi2: GlobalObservable,
    n_list: Sequence[int],
    sizes: Sequence[int],
    centers: Optional[Sequence[Sequence[int]]] = None,
    N: int = 10_000,
    rng: Optional[np.random.Generator] = None,
    tolerance: float = 0.05,
    workers: Optional[int] = None,
) -> CubeMixReport:
    """
    Normalized cube averages of Phi1 * Phi2(T^n) over a grid of (n, size, center).

    The origin deviation is read at the origin-centered cube (G_O), the uniform
    deviation is the worst center (G_U); both at the largest n and size.
    """
    times = _check_times(n_list)
    sizes = [int(s) for s in sizes]
    if not sizes or any(s < 1 for s in sizes):
        raise ArgumentError(f"cube sizes must be positive, got {sizes}")
    if N < 1:
        raise ArgumentError(f"sample count must be positive, got {N}")
    if Phi1.average is None or Phi2.average is None:
        raise ArgumentError("declare or pre-estimate both averages before measuring global-global mixing")
    rng = rng if rng is not None else np.random.default_rng(settings.DEFAULT_SEED)
    origin = tuple([0] * system.dim)
    centers = [tuple(int(c) for c in center) for center in (centers or [origin])]
    if any(len(center) != system.dim for center in centers):
        raise ArgumentError(f"centers must have {system.dim} coordinates, got {centers}")
    target = Phi1.average * Phi2.average

    table: Dict[Tuple[int, int, tuple], Tuple[float, float]] = {}
    total_dropped = 0
    for size in sizes:
        for center in centers:
            cube = CubeSpec.centered(center, size, system.d1)
            if Phi1.is_constant and Phi2.is_constant:
                for n in times:
                    table[n, size, center] = (Phi1.constant * Phi2.constant, 0.0)
                continue
            results = run_ensemble(_CubeProduct(system, Phi1, Phi2, cube, times), N, ensemble_seed(rng), workers)
            values, dropped = _columns(results, len(times))
            total_dropped += dropped
            if dropped:
                logger.warning("trajectories_dropped", system=system.name, size=size, center=center, dropped=dropped)
            if values.shape[0] == 0:
                raise ArgumentError(f"every trajectory of {system.name} was dropped")
            for j, n in enumerate(times):
                table[n, size, center] = batch_means(values[:, j])

    cells = [
        CubeMixCell(n=n, size=size, center=list(center), estimate=float(est), se=float(se))
        for (n, size, center), (est, se) in table.items()
    ]
    n_max, size_max = max(times), max(sizes)
    anchor = origin if origin in centers else centers[0]
    origin_est, origin_se = table[n_max, size_max, anchor]
    spread = [(abs(table[n_max, size_max, c][0] - target), table[n_max, size_max, c][1]) for c in centers]
    uniform_dev = max(dev for dev, _ in spread)
    se_largest = max(se for _, se in spread)
    verdict = "pass" if uniform_dev <= tolerance + settings.SE_BAND * se_largest else "fail"
    logger.info(
        "global_global_estimated",
        system=system.name,
        target=target,
        origin_deviation=abs(origin_est - target),
        uniform_deviation=uniform_dev,
        verdict=verdict,
    )
    return CubeMixReport(
        target=target,
        centering="origin" if centers == [origin] else "uniform",
        cells=cells,
        origin_deviation=abs(origin_est - target),
        uniform_deviation=uniform_dev,
        se_at_largest=se_largest,
        tolerance=tolerance,
        verdict=verdict,
        dropped=total_dropped,
    )
