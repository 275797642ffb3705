"""
Sampling x from phi * mu for a nonnegative local observable of unit mass.

A cell is chosen with probability proportional to its mass, a candidate is
drawn from mu on that cell, and it is accepted with probability
weight(y) / envelope. The per-cell envelope is fixed at construction by scanning
the weight over a seeded grid of base points, so every worker copy of a sampler
accepts the same candidates.

Acceptance statistics are never kept on the sampler: ``draw_counted`` reports
the proposals one draw used, and ``check_acceptance`` reads those counts back in
index order once an ensemble is collected.
"""
from typing import Dict, List, Sequence, Tuple

import numpy as np

from cocycle.lattice import LatticeVector
from cocycle.observables import CellWeight, LocalObservable
from cocycle.system import CocycleSystem, ExtendedState
from core.errors import ArgumentError, SamplerEfficiencyError
from core.logging import logger

MIN_ACCEPTANCE = 1e-3
WARMUP_PROPOSALS = 1000
# a single draw that needs more proposals than this is hopeless on its own
MAX_PROPOSALS = int(WARMUP_PROPOSALS / MIN_ACCEPTANCE)
ENVELOPE_SCAN = 2048
ENVELOPE_MARGIN = 1.05
ENVELOPE_SEED = 0x5CA9


def _efficiency_error(name: str, rate: float, proposals: int) -> SamplerEfficiencyError:
    return SamplerEfficiencyError(
        f"{name}: acceptance {rate:.2e} after {proposals} proposals; "
        "the weight is far below its envelope on most of the cell, split the cell or reweight"
    )


class WeightedSampler:
    def __init__(self, phi: LocalObservable, system: CocycleSystem, scan: int = ENVELOPE_SCAN):
        """
        Raises:
            ArgumentError: signed phi, unknown or zero masses
            SamplerEfficiencyError: the scan predicts acceptance below 1e-3 on a cell
        """
        if not phi.nonnegative:
            raise ArgumentError(f"{phi.name} is signed; decompose it before sampling")
        if not phi.masses_known:
            raise ArgumentError(f"{phi.name}: cell masses unknown; call with_masses first")
        self.phi = phi
        self.system = system
        self.keys = list(phi.cells)
        masses = np.array([max(phi.cells[k].mass, 0.0) for k in self.keys])
        if masses.sum() <= 0.0:
            raise ArgumentError(f"{phi.name} has zero mass")
        self.probs = masses / masses.sum()
        self.envelopes: Dict[Tuple[int, ...], float] = {}
        for i, key in enumerate(self.keys):
            weight = phi.cells[key]
            if weight.is_constant:
                continue
            self.envelopes[key] = self._scan(i, key, weight, scan)

    def _scan(self, i: int, key: Tuple[int, ...], weight: CellWeight, scan: int) -> float:
        grid = np.random.default_rng(np.random.SeedSequence([ENVELOPE_SEED, i]))
        cell = LatticeVector(key, self.phi.d1)
        values = np.array([weight(self.system.sample_from_cell_weight(cell, grid).base) for _ in range(scan)])
        peak = float(values.max())
        rate = float(np.clip(values, 0.0, None).mean()) / peak if peak > 0.0 else 0.0
        if rate < MIN_ACCEPTANCE:
            raise _efficiency_error(f"{self.phi.name} cell {key}", rate, scan)
        envelope = max(peak, min(weight.sup, peak * ENVELOPE_MARGIN))
        logger.debug("sampler_envelope", phi=self.phi.name, cell=key, envelope=envelope, declared_sup=weight.sup)
        return envelope

    def draw_counted(self, rng: np.random.Generator) -> Tuple[ExtendedState, int]:
        """
        Returns:
            (x, number of proposals the draw used)

        Raises:
            SamplerEfficiencyError: one draw ran past 1e6 proposals
        """
        key = self.keys[int(rng.choice(len(self.keys), p=self.probs))]
        weight = self.phi.cells[key]
        cell = LatticeVector(key, self.phi.d1)
        proposals = 0
        while True:
            x = self.system.sample_from_cell_weight(cell, rng)
            proposals += 1
            if weight.is_constant or rng.uniform(0.0, self.envelopes[key]) <= weight(x.base):
                return x, proposals
            if proposals >= MAX_PROPOSALS:
                raise _efficiency_error(self.phi.name, 1.0 / proposals, proposals)

    def draw(self, rng: np.random.Generator) -> ExtendedState:
        return self.draw_counted(rng)[0]

    def draw_many(self, count: int, rng: np.random.Generator) -> List[ExtendedState]:
        return [self.draw(rng) for _ in range(count)]


def check_acceptance(name: str, proposals: Sequence[int]) -> float:
    """
    Acceptance rate of an ensemble from its per-index proposal counts.

    Raises:
        SamplerEfficiencyError: rate below 1e-3 once past the warm-up
    """
    total = int(sum(proposals))
    rate = len(proposals) / total if total else 1.0
    if total >= WARMUP_PROPOSALS and rate < MIN_ACCEPTANCE:
        raise _efficiency_error(name, rate, total)
    return rate
