# Monte Carlo estimators: covariance and drift, MLLT tables, correlation decay, escape
from .reports import (
    CovarianceEstimate,
    MlltWindow,
    MlltCell,
    MlltReport,
    CorrelationPoint,
    CorrelationCurve,
    CubeMixCell,
    CubeMixReport,
    EscapePoint,
    EscapeReport,
)
from .covariance import estimate_covariance_drift, covariance_from_samples, gaussian_density, jackknife
from .sampling import WeightedSampler, check_acceptance
from .mllt import estimate_mllt, check_lattice_period, pmf_agreement
from .mixing import estimate_local_global, estimate_global_global
from .escape import EnergyPaths, escape_fraction, galton_energy_paths, estimate_sigma_bar

__all__ = [
    "CovarianceEstimate",
    "MlltWindow",
    "MlltCell",
    "MlltReport",
    "CorrelationPoint",
    "CorrelationCurve",
    "CubeMixCell",
    "CubeMixReport",
    "EscapePoint",
    "EscapeReport",
    "estimate_covariance_drift",
    "covariance_from_samples",
    "gaussian_density",
    "jackknife",
    "WeightedSampler",
    "check_acceptance",
    "estimate_mllt",
    "check_lattice_period",
    "pmf_agreement",
    "estimate_local_global",
    "estimate_global_global",
    "EnergyPaths",
    "escape_fraction",
    "galton_energy_paths",
    "estimate_sigma_bar",
]
