"""
One runner per estimator kind: run the estimator, write its CSV report, return a verdict.
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np

from billiards.dynamics import collision_trajectory, nu_invariance_test, sample_nu, verify_finite_horizon
from billiards.flight import CollisionEvent
from billiards.systems import GaltonBoardSystem, LorentzFlowSystem, LorentzSystem
from billiards.trajectory_io import write_trajectory_csv
from cocycle.system import CocycleSystem
from core.config import settings
from core.errors import ConfigurationError
from core.tables import write_table
from estimators.covariance import estimate_covariance_drift
from estimators.escape import escape_fraction, estimate_sigma_bar, galton_energy_paths
from estimators.mixing import estimate_global_global, estimate_local_global
from estimators.mllt import estimate_mllt, pmf_agreement
from estimators.reports import MlltWindow
from oracles.distances import ks_distance
from oracles.random_walk import RandomWalkSystem, exact_pmf
from oracles.sde import SdeConfig, em_k_sde
from pingpong.bouncing import BouncingFlowSystem, bouncing_approximation_ladder, near_integer_velocity_global
from pingpong.fermi_ulam import PingpongSystem, approximation_ladder, compute_delta, hyperbolicity_check, riemann_delta
from .registry import base_function, global_observable, local_observable
from .schemas import EstimatorResult, EstimatorSpec

QUADRATURE_AGREEMENT = 1e-8
NONMIXING_GAP = 0.04


@dataclass
class RunContext:
    out_dir: Path
    meta: Dict[str, Any]
    rng: np.random.Generator
    workers: Optional[int]

    def table(self, spec: EstimatorSpec, report: str, fieldnames: Sequence[str], rows: List[Mapping[str, Any]]) -> str:
        path = self.out_dir / f"{spec.name}.csv"
        write_table(path, fieldnames, rows, {**self.meta, "report": report, "estimator": spec.name})
        return path.name

    def trajectory(self, spec: EstimatorSpec, events: List[CollisionEvent]) -> str:
        path = self.out_dir / f"{spec.name}.trajectory.csv"
        write_trajectory_csv(path, events, {**self.meta, "report": "trajectory", "estimator": spec.name})
        return path.name


def _require(system: Optional[CocycleSystem], kinds: tuple, spec: EstimatorSpec):
    if not isinstance(system, kinds):
        got = "no system" if system is None else type(system).__name__
        wanted = " or ".join(k.__name__ for k in kinds)
        raise ConfigurationError(f"estimator {spec.name} needs a {wanted}, got {got}")
    return system


def _need(values: Sequence, what: str, spec: EstimatorSpec) -> list:
    if not values:
        raise ConfigurationError(f"estimator {spec.name} needs a nonempty {what}")
    return list(values)


def _result(spec: EstimatorSpec, passed: bool, files: List[str], message: str = "", **summary) -> EstimatorResult:
    return EstimatorResult(
        name=spec.name,
        kind=spec.kind,
        verdict="pass" if passed else "fail",
        message=message,
        files=files,
        summary=summary,
    )


def _coords(prefix: str, values: Sequence[float]) -> Dict[str, Any]:
    return {f"{prefix}{j + 1}": v for j, v in enumerate(values)}


def _coord_names(prefix: str, dim: int) -> List[str]:
    return [f"{prefix}{j + 1}" for j in range(dim)]


def run_covariance(spec: EstimatorSpec, system: CocycleSystem, ctx: RunContext) -> EstimatorResult:
    est = estimate_covariance_drift(system, spec.n, spec.N, ctx.rng, ctx.workers)
    rows = [
        {"quantity": "drift", "i": i, "j": "", "value": v, "se": s}
        for i, (v, s) in enumerate(zip(est.drift, est.drift_se))
    ]
    for i, (row, row_se) in enumerate(zip(est.covariance, est.covariance_se)):
        rows += [{"quantity": "covariance", "i": i, "j": j, "value": v, "se": s} for j, (v, s) in enumerate(zip(row, row_se))]
    name = ctx.table(spec, "covariance", ["quantity", "i", "j", "value", "se"], rows)
    return _result(
        spec,
        est.psd_within_se,
        [name],
        drift=est.drift,
        covariance=est.covariance,
        degenerate_axes=est.degenerate_axes,
        dropped=est.dropped,
    )


def run_mllt(spec: EstimatorSpec, system: CocycleSystem, ctx: RunContext) -> EstimatorResult:
    psi1 = base_function(spec.psi1) if spec.psi1 else None
    psi2 = base_function(spec.psi2) if spec.psi2 else None
    report = estimate_mllt(
        system,
        psi1,
        psi2,
        n=spec.n,
        window=spec.window or MlltWindow(),
        N=spec.N,
        rng=ctx.rng,
        apriori_constant=spec.apriori_constant,
        threshold=spec.threshold,
        workers=ctx.workers,
    )
    passed = report.verdict == "pass"
    summary: Dict[str, Any] = {
        "sup_relative_deviation": report.sup_relative_deviation,
        "apriori_max": report.apriori_max,
        "total_mass": report.total_mass,
        "period": report.period,
        "shift": report.shift,
    }
    if spec.exact_oracle:
        walk = _require(system, (RandomWalkSystem,), spec)
        worst = pmf_agreement(report, exact_pmf(walk.steps, spec.n))
        summary["pmf_max_z"] = worst
        passed = passed and worst <= settings.SE_BAND
    if report.apriori_bound_ok is False:
        passed = False
    dim = len(report.shift)
    fields = _coord_names("z", dim) + _coord_names("u", dim) + ["empirical", "reference", "se", "resolved", "excluded"]
    rows = [
        {
            **_coords("z", row.cell),
            **_coords("u", row.rescaled),
            "empirical": row.empirical,
            "reference": row.reference,
            "se": row.se,
            "resolved": int(row.resolved),
            "excluded": int(row.excluded),
        }
        for row in report.cells
    ]
    name = ctx.table(spec, "mllt", fields, rows)
    return _result(spec, passed, [name], **summary)


def run_local_global(spec: EstimatorSpec, system: CocycleSystem, ctx: RunContext) -> EstimatorResult:
    curve = estimate_local_global(
        system,
        local_observable(spec.phi, system),
        global_observable(spec.Phi, system),
        _need(spec.n_list, "n_list", spec),
        spec.N,
        ctx.rng,
        tolerance=spec.tolerance if spec.tolerance is not None else 0.01,
        workers=ctx.workers,
    )
    rows = [{"n": p.n, "estimate": p.estimate, "se": p.se, "target": curve.target} for p in curve.points]
    name = ctx.table(spec, "correlation", ["n", "estimate", "se", "target"], rows)
    last = curve.points[-1]
    return _result(
        spec,
        curve.verdict == "pass",
        [name],
        target=curve.target,
        estimate=last.estimate,
        se=last.se,
        dropped=curve.dropped,
    )


def _cube_rows(report, dim: int):
    fields = ["n", "size"] + _coord_names("c", dim) + ["estimate", "se"]
    rows = [
        {"n": c.n, "size": c.size, **_coords("c", c.center), "estimate": c.estimate, "se": c.se} for c in report.cells
    ]
    return fields, rows


def run_global_global(spec: EstimatorSpec, system: CocycleSystem, ctx: RunContext) -> EstimatorResult:
    sizes = _need(spec.sizes, "sizes", spec)
    report = estimate_global_global(
        system,
        global_observable(spec.Phi, system),
        global_observable(spec.Phi2 or spec.Phi, system),
        _need(spec.n_list, "n_list", spec),
        sizes,
        spec.centers or None,
        spec.N,
        ctx.rng,
        tolerance=spec.tolerance if spec.tolerance is not None else 0.05,
        workers=ctx.workers,
    )
    passed = report.verdict == "pass"
    n_max = max(spec.n_list)
    anchor = list(spec.centers[0]) if spec.centers else [0] * system.dim
    along = [
        abs(c.estimate - report.target)
        for size in sorted(sizes)
        for c in report.cells
        if c.n == n_max and c.size == size and c.center == anchor
    ]
    if spec.require_decreasing:
        passed = passed and all(b < a for a, b in zip(along, along[1:]))
    fields, rows = _cube_rows(report, system.dim)
    name = ctx.table(spec, "cube_mix", fields, rows)
    return _result(
        spec,
        passed,
        [name],
        target=report.target,
        deviations_along_sizes=along,
        uniform_deviation=report.uniform_deviation,
        se_at_largest=report.se_at_largest,
        dropped=report.dropped,
    )


def run_bounce_nonmixing(spec: EstimatorSpec, system: CocycleSystem, ctx: RunContext) -> EstimatorResult:
    flow = _require(system, (BouncingFlowSystem,), spec)
    gT = flow.g * flow.T
    if abs(gT - round(gT)) <= NONMIXING_GAP:
        raise ConfigurationError(f"g*T = {gT} lies within {NONMIXING_GAP} of an integer; pick another flow time")
    Phi = near_integer_velocity_global()
    bound = spec.tolerance if spec.tolerance is not None else 1e-3
    report = estimate_global_global(
        flow,
        Phi,
        Phi,
        spec.n_list or [1],
        _need(spec.sizes, "sizes", spec),
        spec.centers or None,
        spec.N,
        ctx.rng,
        tolerance=bound,
        workers=ctx.workers,
    )
    largest = max(c.estimate for c in report.cells)
    passed = largest < bound and report.target > 0.01
    fields, rows = _cube_rows(report, flow.dim)
    name = ctx.table(spec, "cube_mix", fields, rows)
    return _result(spec, passed, [name], target=report.target, largest_estimate=largest, gT=gT, dropped=report.dropped)


def run_escape(spec: EstimatorSpec, system: CocycleSystem, ctx: RunContext) -> EstimatorResult:
    report = escape_fraction(system, None, spec.R, _need(spec.n_list, "n_list", spec), spec.N, ctx.rng, ctx.workers)
    last = report.points[-1].fraction
    passed = report.decreasing and (spec.max_fraction is None or last <= spec.max_fraction)
    rows = [{"n": p.n, "fraction": p.fraction, "se": p.se} for p in report.points]
    name = ctx.table(spec, "escape", ["n", "fraction", "se"], rows)
    return _result(spec, passed, [name], decreasing=report.decreasing, last_fraction=last, dropped=report.dropped)


def run_galton_energy(spec: EstimatorSpec, system: CocycleSystem, ctx: RunContext) -> EstimatorResult:
    galton = _require(system, (GaltonBoardSystem,), spec)
    sigma = spec.sigma_bar or estimate_sigma_bar(galton, spec.sigma_steps, min(spec.N, 1000), ctx.rng, workers=ctx.workers)
    energy = galton_energy_paths(galton, spec.n, spec.t_grid, spec.N, ctx.rng, ctx.workers)
    if energy.paths.shape[0] == 0:
        raise ConfigurationError(f"every Galton trajectory was excluded ({energy.excluded})")
    start = float(energy.paths[0, 0]) if 0.0 in spec.t_grid else 0.0
    config = (spec.sde or SdeConfig()).model_copy(update={"sigma_bar": sigma, "k0": start, "horizon": 1.0})
    reference = em_k_sde(config, spec.reference_N, ctx.rng)
    ks = ks_distance(energy.marginal(1.0), reference)
    bound = spec.tolerance if spec.tolerance is not None else 0.08
    rows = []
    for j, t in enumerate(energy.t_grid):
        column = energy.paths[:, j]
        q10, q50, q90 = np.quantile(column, [0.1, 0.5, 0.9])
        sd = column.std(ddof=1) if column.size > 1 else 0.0
        rows.append({"t": t, "mean": column.mean(), "sd": sd, "q10": q10, "q50": q50, "q90": q90})
    name = ctx.table(spec, "energy", ["t", "mean", "sd", "q10", "q50", "q90"], rows)
    return _result(spec, ks <= bound, [name], ks=ks, sigma_bar=sigma, excluded=energy.excluded)


def run_sde_consistency(spec: EstimatorSpec, system: Optional[CocycleSystem], ctx: RunContext) -> EstimatorResult:
    base = spec.sde or SdeConfig()
    direct = em_k_sde(base.model_copy(update={"scheme": "direct"}), spec.reference_N, ctx.rng)
    transformed = em_k_sde(base.model_copy(update={"scheme": "transformed"}), spec.reference_N, ctx.rng)
    ks = ks_distance(direct, transformed)
    bound = spec.tolerance if spec.tolerance is not None else 0.02
    levels = np.linspace(0.05, 0.95, 19)
    rows = [
        {"q": q, "direct": a, "transformed": b}
        for q, a, b in zip(levels, np.quantile(direct, levels), np.quantile(transformed, levels))
    ]
    name = ctx.table(spec, "quantiles", ["q", "direct", "transformed"], rows)
    return _result(spec, ks <= bound, [name], ks=ks)


def run_finite_horizon(spec: EstimatorSpec, system: CocycleSystem, ctx: RunContext) -> EstimatorResult:
    billiard = _require(system, (LorentzSystem, LorentzFlowSystem), spec)
    check = verify_finite_horizon(billiard.config, spec.N, ctx.rng)
    row = {
        "passed": int(check.passed),
        "max_flight": check.max_flight,
        "declared_bound": check.declared_bound,
        "rays": check.rays,
        "origin": "" if check.origin is None else ";".join(f"{c:.12g}" for c in check.origin),
        "direction": "" if check.direction is None else ";".join(f"{c:.12g}" for c in check.direction),
        "reason": check.reason,
    }
    name = ctx.table(spec, "horizon", list(row), [row])
    return _result(spec, check.passed == spec.expect_pass, [name], message=check.reason, max_flight=check.max_flight)


def run_invariance(spec: EstimatorSpec, system: CocycleSystem, ctx: RunContext) -> EstimatorResult:
    billiard = _require(system, (LorentzSystem,), spec)
    check = nu_invariance_test(billiard.config, billiard.field, spec.N, ctx.rng, bins=spec.bins)
    row = {"pvalue": check.pvalue, "statistic": check.statistic, "samples": check.samples, "bins": check.bins}
    files = [ctx.table(spec, "invariance", list(row), [row])]
    if spec.trajectory_events:
        start = sample_nu(billiard.config, ctx.rng)
        events = collision_trajectory(billiard.config, billiard.field, start, spec.trajectory_events)
        files.append(ctx.trajectory(spec, events))
    return _result(spec, check.passed, files, pvalue=check.pvalue)


def _ladder_rows(ladder):
    return [level.model_dump() for level in ladder]


LADDER_FIELDS = ["level", "samples", "failed", "in_measure", "max_deviation", "excluded_fraction"]


def run_pingpong_approx(spec: EstimatorSpec, system: CocycleSystem, ctx: RunContext) -> EstimatorResult:
    model = _require(system, (PingpongSystem, BouncingFlowSystem), spec)
    levels = _need(spec.levels, "levels", spec)
    bound = spec.tolerance if spec.tolerance is not None else 0.02
    summary: Dict[str, Any] = {}
    passed = True
    if isinstance(model, PingpongSystem):
        delta = compute_delta(model.wall)
        agreement = abs(delta - riemann_delta(model.wall, spec.quadrature_points))
        verdict = hyperbolicity_check(delta)
        summary.update(delta=delta, quadrature_gap=agreement, hyperbolicity=verdict.verdict)
        passed = agreement <= QUADRATURE_AGREEMENT
        ladder = approximation_ladder(model.wall, levels, spec.N, ctx.rng, ctx.workers)
    else:
        ladder = bouncing_approximation_ladder(model.h, model.g, levels, spec.N, ctx.rng, ctx.workers)
    errors = [level.in_measure for level in ladder]
    passed = passed and all(b <= a for a, b in zip(errors, errors[1:])) and errors[-1] < bound
    name = ctx.table(spec, "ladder", LADDER_FIELDS, _ladder_rows(ladder))
    return _result(spec, passed, [name], in_measure=errors, **summary)


Runner = Callable[[EstimatorSpec, Optional[CocycleSystem], RunContext], EstimatorResult]

RUNNERS: Dict[str, Runner] = {
    "covariance": run_covariance,
    "mllt": run_mllt,
    "local_global": run_local_global,
    "global_global": run_global_global,
    "escape": run_escape,
    "galton_energy": run_galton_energy,
    "finite_horizon": run_finite_horizon,
    "invariance": run_invariance,
    "pingpong_approx": run_pingpong_approx,
    "bounce_nonmixing": run_bounce_nonmixing,
    "sde_consistency": run_sde_consistency,
}

# kinds that run without a system
SYSTEMLESS = {"sde_consistency"}
