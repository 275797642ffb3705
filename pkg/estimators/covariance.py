"""
Drift and covariance of tau_n, and the Gaussian density built from them.
"""
from typing import Any, Optional

import numpy as np
from scipy import stats

from cocycle.system import CocycleSystem, iterate
from core.config import settings
from core.errors import ArgumentError, DomainError, HorizonViolationError, IntegrationError, StallError, TrapError
from core.logging import logger
from core.parallel import ensemble_seed, run_ensemble
from .reports import CovarianceEstimate

# orbit failures that drop a trajectory instead of aborting the ensemble
DYNAMICS_ERRORS = (TrapError, HorizonViolationError, IntegrationError, StallError)


def trajectory_displacement(system: CocycleSystem, n: int, rng: np.random.Generator):
    """
    (start base, end base, tau_n) for one start drawn from nu.

    Non-product systems start from the zero cell and read tau_n off the cells.
    """
    if system.is_skew_product:
        y = system.sample_base(rng)
        end, tau = system.advance(y, n)
        return y, end, tau
    x0 = system.sample_from_cell_weight(system.zero(), rng)
    xn, _ = iterate(system, x0, n)
    return x0.base, xn.base, xn.cell - x0.cell


def is_grazing(y: Any) -> bool:
    return bool(getattr(y, "grazing", False))


class _Displacement:
    def __init__(self, system: CocycleSystem, n: int):
        self.system = system
        self.n = n

    def __call__(self, index: int, rng: np.random.Generator) -> Optional[tuple]:
        try:
            _, end, tau = trajectory_displacement(self.system, self.n, rng)
        except DYNAMICS_ERRORS:
            return None
        if is_grazing(end):
            return None
        return tau.coords


def jackknife(samples: np.ndarray, statistic, blocks: Optional[int] = None):
    """Delete-one-block jackknife: (full statistic, standard error) over contiguous blocks."""
    k = min(blocks or settings.BATCH_COUNT, samples.shape[0])
    full = statistic(samples)
    if k < 2:
        return full, np.zeros_like(full)
    parts = np.array_split(np.arange(samples.shape[0]), k)
    leave_out = np.array([statistic(np.delete(samples, idx, axis=0)) for idx in parts])
    mean = leave_out.mean(axis=0)
    se = np.sqrt((k - 1) / k * ((leave_out - mean) ** 2).sum(axis=0))
    return full, se


def covariance_from_samples(taus: np.ndarray, n: int, dropped: int = 0) -> CovarianceEstimate:
    """Scaled drift E[tau_n]/n and covariance Cov(tau_n)/n from an (N, d) sample."""
    taus = np.asarray(taus, dtype=float)
    if taus.ndim == 1:
        taus = taus[:, None]
    drift, drift_se = jackknife(taus, lambda s: s.mean(axis=0) / n)
    cov, cov_se = jackknife(taus, lambda s: np.atleast_2d(np.cov(s, rowvar=False, ddof=1)) / n)
    degenerate = [j for j in range(cov.shape[0]) if cov[j, j] == 0.0]
    psd = bool(np.linalg.eigvalsh(cov).min() >= -settings.SE_BAND * float(cov_se.max(initial=0.0)))
    return CovarianceEstimate(
        n=n,
        samples=int(taus.shape[0]),
        dropped=dropped,
        drift=drift.tolist(),
        drift_se=drift_se.tolist(),
        covariance=cov.tolist(),
        covariance_se=cov_se.tolist(),
        degenerate_axes=degenerate,
        psd_within_se=psd,
    )


def estimate_covariance_drift(
    system: CocycleSystem,
    n: int,
    N: int,
    rng: np.random.Generator,
    workers: Optional[int] = None,
) -> CovarianceEstimate:
    """
    Sample drift and covariance of tau_n, scaled by 1/n, with jackknife SEs.

    Zero-variance axes are listed in ``degenerate_axes`` rather than raised.
    """
    if n < 1:
        raise ArgumentError(f"n must be at least 1, got {n}")
    if N < 100:
        raise ArgumentError(f"covariance estimate needs N >= 100, got {N}")
    results = run_ensemble(_Displacement(system, n), N, ensemble_seed(rng), workers)
    taus = np.array([r for r in results if r is not None], dtype=float).reshape(-1, system.dim)
    dropped = N - taus.shape[0]
    if dropped:
        logger.warning("trajectories_dropped", system=system.name, n=n, dropped=dropped)
    if taus.shape[0] < 2:
        raise ArgumentError(f"only {taus.shape[0]} of {N} trajectories survived")
    estimate = covariance_from_samples(taus, n, dropped)
    if estimate.degenerate_axes:
        logger.warning("degenerate_axes", system=system.name, axes=estimate.degenerate_axes)
    logger.info("covariance_estimated", system=system.name, n=n, N=N, drift=estimate.drift)
    return estimate


def gaussian_density(z, sigma) -> np.ndarray:
    """
    Centered Gaussian density with covariance sigma at z (a point or an (m, d) array).

    Raises:
        DomainError: sigma not positive definite
    """
    cov = np.atleast_2d(np.asarray(sigma, dtype=float))
    if cov.shape[0] != cov.shape[1]:
        raise DomainError(f"covariance must be square, got shape {cov.shape}")
    if np.linalg.eigvalsh(cov).min() <= 0.0:
        raise DomainError("covariance is singular or indefinite")
    law = stats.multivariate_normal(mean=np.zeros(cov.shape[0]), cov=cov)
    return law.pdf(np.asarray(z, dtype=float))
