"""
Mixing local limit theorem estimator.

One ensemble of trajectories serves every cell: psi1(y) * psi2(f^n y) is tallied
on the terminal cell tau_n, rescaled by L_n^d and compared with
nu(psi1) nu(psi2) p((z - shift) / L_n), where p is the Gaussian density with the
covariance estimated from the same run.
"""
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from cocycle.system import CocycleSystem
from core.config import settings
from core.errors import ArgumentError, ConfigurationError, ResourceError
from core.logging import logger
from core.parallel import ensemble_seed, run_ensemble
from oracles.random_walk import PmfTable
from .covariance import DYNAMICS_ERRORS, covariance_from_samples, gaussian_density, is_grazing, trajectory_displacement
from .reports import CovarianceEstimate, MlltCell, MlltReport, MlltWindow

MIN_SAMPLES = 10_000
PERIOD_CHECK_STEPS = 16
PERIOD_CHECK_SAMPLES = 2048
PERIOD_CANDIDATES = (2, 3, 4)
MAX_WINDOW_CELLS = 1_000_000


class _Endpoints:
    """tau_n with psi1 at the start and psi2 at the end; None for dropped orbits."""

    def __init__(
        self,
        system: CocycleSystem,
        n: int,
        psi1: Optional[Callable] = None,
        psi2: Optional[Callable] = None,
    ):
        self.system = system
        self.n = n
        self.psi1 = psi1
        self.psi2 = psi2

    def __call__(self, index: int, rng: np.random.Generator) -> Optional[Tuple[tuple, float, float]]:
        try:
            start, end, tau = trajectory_displacement(self.system, self.n, rng)
        except DYNAMICS_ERRORS:
            return None
        if is_grazing(end):
            return None
        w1 = 1.0 if self.psi1 is None else float(self.psi1(start))
        w2 = 1.0 if self.psi2 is None else float(self.psi2(end))
        return tau.coords, w1, w2


def residue_classes(taus: np.ndarray, q: int) -> np.ndarray:
    """Occupied residues of the coordinate sum of tau modulo q."""
    return np.unique(np.asarray(taus, dtype=np.int64).sum(axis=1) % q)


def check_lattice_period(
    system: CocycleSystem,
    rng: np.random.Generator,
    period: Optional[int] = None,
    samples: int = PERIOD_CHECK_SAMPLES,
    workers: Optional[int] = None,
) -> int:
    """
    Validate the declared sublattice period against tau_16.

    A declared period p > 1 must leave tau_16 on a single residue class mod p; an
    aperiodic declaration must see every class mod 2, 3 and 4 occupied.

    Returns:
        The validated period.

    Raises:
        ConfigurationError: the occupancy contradicts the declaration
    """
    declared = int(period if period is not None else system.period)
    if declared < 1:
        raise ConfigurationError(f"period must be at least 1, got {declared}")
    results = run_ensemble(_Endpoints(system, PERIOD_CHECK_STEPS), samples, ensemble_seed(rng), workers)
    taus = np.array([r[0] for r in results if r is not None], dtype=np.int64).reshape(-1, system.dim)
    if taus.shape[0] == 0:
        raise ArgumentError(f"no trajectory of {system.name} survived {PERIOD_CHECK_STEPS} steps")
    if declared > 1:
        occupied = residue_classes(taus, declared)
        if occupied.size != 1:
            raise ConfigurationError(
                f"{system.name} declared period {declared} but tau_{PERIOD_CHECK_STEPS} occupies "
                f"{occupied.size} residue classes"
            )
        return declared
    for q in PERIOD_CANDIDATES:
        occupied = residue_classes(taus, q)
        if occupied.size < q:
            raise ConfigurationError(
                f"{system.name}: tau_{PERIOD_CHECK_STEPS} occupies only residues {occupied.tolist()} mod {q}; "
                f"declare period={q} (or the sublattice) before comparing with a density"
            )
    return 1


def window_cells(shift: np.ndarray, scale: float, K: float) -> np.ndarray:
    """Lattice cells z with |z - shift| / scale <= K in the max norm, as an (m, d) array."""
    lo = np.floor(shift - K * scale).astype(np.int64)
    hi = np.ceil(shift + K * scale).astype(np.int64)
    count = int(np.prod(hi - lo + 1))
    if count > MAX_WINDOW_CELLS:
        raise ResourceError(f"MLLT window holds {count} cells, limit {MAX_WINDOW_CELLS}")
    axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
    inside = np.abs(grid - shift).max(axis=1) <= K * scale + 1e-12
    return grid[inside]


def cell_tallies(taus: np.ndarray, weights: np.ndarray, scale: float, batches: Optional[int] = None):
    """
    Per-cell rescaled weighted frequencies with batch-means SEs.

    Returns:
        (cells, empirical, se, probabilities): distinct terminal cells, L^d * mean
        weight per cell, its standard error over contiguous index batches, and the
        unweighted cell frequencies.
    """
    m, d = taus.shape
    cells, inverse = np.unique(taus, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    k = min(batches or settings.BATCH_COUNT, m)
    batch = np.arange(m) * k // m
    sizes = np.bincount(batch, minlength=k).astype(float)
    tally = np.zeros((k, cells.shape[0]))
    np.add.at(tally, (batch, inverse), weights)
    volume = scale ** d
    empirical = volume * tally.sum(axis=0) / m
    if k >= 2:
        per_batch = volume * tally / sizes[:, None]
        se = per_batch.std(axis=0, ddof=1) / np.sqrt(k)
    else:
        se = np.zeros(cells.shape[0])
    probabilities = np.bincount(inverse, minlength=cells.shape[0]) / m
    return cells, empirical, se, probabilities


def estimate_mllt(
    system: CocycleSystem,
    psi1: Optional[Callable] = None,
    psi2: Optional[Callable] = None,
    n: int = 64,
    window: Optional[MlltWindow] = None,
    N: int = MIN_SAMPLES,
    rng: Optional[np.random.Generator] = None,
    covariance: Optional[CovarianceEstimate] = None,
    period: Optional[int] = None,
    apriori_constant: Optional[float] = None,
    threshold: Optional[float] = None,
    workers: Optional[int] = None,
) -> MlltReport:
    """
    Empirical MLLT table at time n.

    Args:
        system: cocycle system; its ``period`` is the declared sublattice period
        psi1, psi2: base observables at times 0 and n (None means 1)
        n: time
        window: rescaling, comparison window, exclusion boxes and centering
        N: trajectories (at least 10**4)
        rng: source of the ensemble seed
        covariance: a prior estimate; by default Sigma and the drift come from this run
        period: overrides ``system.period``
        apriori_constant: C in max_z L^d P(tau_n = z) <= C |psi1| |psi2|
        threshold: verdict bound on the relative deviation (default from settings)

    Raises:
        ArgumentError: n < 1, N below 10**4, or nothing resolved in the window
        ConfigurationError: periodicity detected but not declared
        DomainError: the estimated covariance is singular
    """
    if n < 1:
        raise ArgumentError(f"n must be at least 1, got {n}")
    if N < MIN_SAMPLES:
        raise ArgumentError(f"MLLT needs N >= {MIN_SAMPLES}, got {N}")
    rng = rng if rng is not None else np.random.default_rng(settings.DEFAULT_SEED)
    window = window or MlltWindow()
    threshold = threshold if threshold is not None else settings.RELATIVE_DEVIATION_THRESHOLD
    d = system.dim

    p = check_lattice_period(system, rng, period, workers=workers)
    results = run_ensemble(_Endpoints(system, n, psi1, psi2), N, ensemble_seed(rng), workers)
    kept = [r for r in results if r is not None]
    dropped = N - len(kept)
    if dropped:
        logger.warning("trajectories_dropped", system=system.name, n=n, dropped=dropped)
    if len(kept) < 2:
        raise ArgumentError(f"only {len(kept)} of {N} trajectories survived")
    taus = np.array([r[0] for r in kept], dtype=np.int64).reshape(-1, d)
    w1 = np.array([r[1] for r in kept])
    w2 = np.array([r[2] for r in kept])

    estimate = covariance or covariance_from_samples(taus, n, dropped)
    sigma = np.array(estimate.covariance)
    drift = np.array(estimate.drift)
    shift = n * drift if window.shift == "drift" else np.zeros(d)
    L = window.scale_for(n)
    # covariance of (tau_n - shift) / L
    rescaled_sigma = sigma * n / L ** 2

    cells, empirical, se, probabilities = cell_tallies(taus, w1 * w2, L)
    index: Dict[tuple, int] = {tuple(int(c) for c in cell): j for j, cell in enumerate(cells)}
    nu1 = 1.0 if psi1 is None else float(w1.mean())
    nu2 = 1.0 if psi2 is None else float(w2.mean())

    grid = window_cells(shift, L, window.K)
    rescaled = (grid - shift) / L
    residue = int(np.bincount(taus.sum(axis=1) % p).argmax())
    on_coset = (grid.sum(axis=1) - residue) % p == 0
    density = np.atleast_1d(gaussian_density(rescaled, rescaled_sigma))
    reference = np.where(on_coset, p * density * nu1 * nu2, 0.0)
    floor = settings.RESOLVED_DENSITY_FRACTION * float(np.abs(reference).max(initial=0.0))

    rows: List[MlltCell] = []
    worst = 0.0
    resolved_count = 0
    for z, u, ref, coset in zip(grid, rescaled, reference, on_coset):
        key = tuple(int(c) for c in z)
        j = index.get(key)
        emp = float(empirical[j]) if j is not None else 0.0
        err = float(se[j]) if j is not None else 0.0
        excluded = window.excludes(u)
        resolved = bool(coset and abs(ref) >= floor and ref != 0.0 and not excluded)
        if resolved:
            resolved_count += 1
            worst = max(worst, abs(emp - ref) / abs(ref))
        rows.append(
            MlltCell(
                cell=list(key),
                rescaled=u.tolist(),
                empirical=emp,
                reference=float(ref),
                se=err,
                resolved=resolved,
                excluded=excluded,
            )
        )
    if resolved_count == 0:
        raise ArgumentError(f"no resolved cell in the window of {system.name} at n={n}")

    apriori_max = float(L ** d * probabilities.max())
    apriori_ok = None
    if apriori_constant is not None:
        norm1 = 1.0 if psi1 is None else float(np.abs(w1).max())
        norm2 = 1.0 if psi2 is None else float(np.abs(w2).max())
        apriori_ok = bool(apriori_max <= apriori_constant * max(norm1 * norm2, 1e-300))

    verdict = "pass" if worst <= threshold else "fail"
    report = MlltReport(
        system=system.name,
        n=n,
        samples=len(kept),
        dropped=dropped,
        scale=L,
        period=p,
        shift=shift.tolist(),
        covariance=sigma.tolist(),
        nu_psi1=nu1,
        nu_psi2=nu2,
        total_mass=float(probabilities.sum()),
        apriori_max=apriori_max,
        apriori_bound_ok=apriori_ok,
        excluded_volume=window.excluded_volume(),
        sup_relative_deviation=worst,
        threshold=threshold,
        verdict=verdict,
        cells=rows,
    )
    logger.info(
        "mllt_estimated",
        system=system.name,
        n=n,
        N=N,
        period=p,
        sup_relative_deviation=round(worst, 6),
        verdict=verdict,
    )
    return report


def pmf_agreement(report: MlltReport, pmf: PmfTable, fraction: Optional[float] = None) -> float:
    """
    Largest |empirical - L^d pmf(z)| / SE over window cells whose exact mass is
    at least ``fraction`` of the largest one; inf when such a cell has no SE.
    """
    fraction = fraction if fraction is not None else settings.RESOLVED_DENSITY_FRACTION
    peak = max((mass for _, mass in pmf.items()), default=0.0)
    volume = report.scale ** len(report.shift)
    worst = 0.0
    for row in report.cells:
        mass = pmf[row.cell]
        if mass < fraction * peak or mass == 0.0:
            continue
        gap = abs(row.empirical - volume * mass)
        if row.se == 0.0:
            if gap > 0.0:
                return float("inf")
            continue
        worst = max(worst, gap / row.se)
    return worst
