"""
Billiard systems behind the common cocycle interface.
"""
import math
from dataclasses import replace
from typing import Optional

import numpy as np

from cocycle.lattice import CubeSpec, LatticeVector
from cocycle.system import CocycleSystem, ExtendedState
from core.errors import ArgumentError, ConfigurationError
from .dynamics import FlowPoint, billiard_flow, collision_map, flow_state, phi_from_uniform, sample_nu
from .fields import FieldSpec
from .geometry import BoundaryCoord, ScattererConfig


class LorentzSystem(CocycleSystem):
    """
    Billiard map on the collision space with cell displacements.

    The map is a product extension when the configuration is periodic and the
    field does not depend on absolute position; otherwise the base coordinate
    carries its true cell and ``extended_step`` drives the dynamics.
    """

    def __init__(self, config: ScattererConfig, field: Optional[FieldSpec] = None, name: Optional[str] = None):
        self.config = config
        self.field = field or FieldSpec.none()
        self.field.validate(config)
        self.d1, self.d2 = config.split
        self.is_skew_product = config.is_periodic and self.field.translation_invariant
        self.finite_horizon = config.finite_horizon
        if config.finite_horizon and self.field.variant == "none":
            self.displacement_bound = int(math.ceil(config.free_path_bound)) + 2
        self.name = name or f"lorentz[{config.name}]"

    def sample_base(self, rng: np.random.Generator) -> BoundaryCoord:
        return sample_nu(self.config, rng, self.zero())

    def step(self, y: BoundaryCoord):
        nxt, tau = collision_map(self.config, self.field, y)
        nxt = replace(nxt, cell=self.zero(), grazing=nxt.grazing or y.grazing)
        return nxt, tau

    def extended_step(self, x: ExtendedState) -> ExtendedState:
        if self.is_skew_product:
            return super().extended_step(x)
        nxt, _ = collision_map(self.config, self.field, x.base.with_cell(x.cell))
        nxt = replace(nxt, grazing=nxt.grazing or x.base.grazing)
        return ExtendedState(nxt, nxt.cell)

    def _draw_on_cell(self, cell: LatticeVector, ceiling: float, rng: np.random.Generator) -> Optional[BoundaryCoord]:
        """One rejection round against a perimeter ceiling; None when rejected."""
        anchor = self.config.from_lattice(cell)
        u = float(rng.uniform(0.0, ceiling))
        for k, disk in self.config.disks_at(anchor):
            if u < disk.perimeter:
                return BoundaryCoord(cell, k, u, phi_from_uniform(float(rng.random())))
            u -= disk.perimeter
        return None

    def _ceiling(self, cells) -> float:
        return max(sum(d.perimeter for _, d in self.config.disks_at(self.config.from_lattice(c))) for c in cells)

    def sample_in_cube(self, cube: CubeSpec, rng: np.random.Generator) -> ExtendedState:
        """mu restricted to the cube, including added and removed disks."""
        if self.config.is_periodic:
            return super().sample_in_cube(cube, rng)
        modified = [self.config.to_lattice(a) for a in self.config.local_mods if cube.contains(self.config.to_lattice(a))]
        ceiling = max([self.config.total_perimeter()] + ([self._ceiling(modified)] if modified else []))
        for _ in range(10000):
            cell = cube.sample_cell(rng)
            coord = self._draw_on_cell(cell, ceiling, rng)
            if coord is not None:
                return ExtendedState(coord if not self.is_skew_product else coord.with_cell(self.zero()), cell)
        raise ConfigurationError(f"cube {cube.lo}..{cube.hi} holds no scatterer boundary")

    def sample_from_cell_weight(self, cell: LatticeVector, rng: np.random.Generator) -> ExtendedState:
        ceiling = self._ceiling([cell])
        if ceiling == 0:
            raise ConfigurationError(f"cell {tuple(cell)} holds no scatterer")
        coord = None
        while coord is None:
            coord = self._draw_on_cell(cell, ceiling, rng)
        return ExtendedState(coord if not self.is_skew_product else coord.with_cell(self.zero()), cell)

    def origin(self) -> ExtendedState:
        coord = BoundaryCoord(self.zero(), 0, 0.0, 0.0)
        return ExtendedState(coord, self.zero())


class GaltonBoardSystem(LorentzSystem):
    """
    Particle falling through the half-plane scatterer array under constant
    gravity g along +q1, with energy H = |v|^2/2 - g q1.

    Kinetic energy at a collision is K = H + g q1.
    """

    def __init__(self, g: float = 1.0, H: float = 1.0, config: Optional[ScattererConfig] = None):
        if g <= 0:
            raise ArgumentError(f"gravity must be positive, got {g}")
        config = config or ScattererConfig.galton()
        if config.geometry != "half_plane":
            raise ConfigurationError(f"Galton board needs the half_plane geometry, got {config.geometry}")
        super().__init__(config, FieldSpec.gravity(g, (1.0, 0.0), energy=H), name=f"galton[g={g},H={H}]")
        self.g = g
        self.H = H

    def kinetic_energy(self, coord: BoundaryCoord) -> float:
        q, _ = self.config.boundary_point(coord)
        return self.H + self.g * float(q[0])


class LorentzFlowSystem(CocycleSystem):
    """Time-T map of the billiard flow, base points sampled from Liouville measure."""

    def __init__(self, config: ScattererConfig, field: Optional[FieldSpec] = None, T: float = 1.0):
        if T <= 0:
            raise ArgumentError(f"flow time must be positive, got {T}")
        self.config = config
        self.field = field or FieldSpec.none()
        self.field.validate(config)
        self.T = T
        self.d1, self.d2 = config.split
        self.is_skew_product = config.is_periodic and self.field.translation_invariant
        self.finite_horizon = config.finite_horizon
        self.name = f"flow[{config.name},T={T}]"

    def _liouville(self, anchor, rng: np.random.Generator) -> FlowPoint:
        for _ in range(10000):
            rel = rng.random(2)
            q = np.array([anchor[0] + rel[0], anchor[1] + rel[1]])
            if self.config.inside_disk(q) is None:
                angle = float(rng.uniform(0.0, 2 * math.pi))
                return FlowPoint((float(rel[0]), float(rel[1])), (math.cos(angle), math.sin(angle)))
        raise ConfigurationError(f"cell {anchor} has no free area")

    def sample_base(self, rng: np.random.Generator) -> FlowPoint:
        return self._liouville((0, 0), rng)

    def sample_from_cell_weight(self, cell: LatticeVector, rng: np.random.Generator) -> ExtendedState:
        return ExtendedState(self._liouville(self.config.from_lattice(cell), rng), cell)

    def sample_in_cube(self, cube: CubeSpec, rng: np.random.Generator) -> ExtendedState:
        return self.sample_from_cell_weight(cube.sample_cell(rng), rng)

    def step(self, y: FlowPoint):
        nxt = billiard_flow(self.config, self.field, ExtendedState(y, self.zero()), self.T)
        return nxt.base, nxt.cell

    def extended_step(self, x: ExtendedState) -> ExtendedState:
        if self.is_skew_product:
            return super().extended_step(x)
        return billiard_flow(self.config, self.field, x, self.T)

    def origin(self) -> ExtendedState:
        return flow_state(self.config, (0.5, 0.5), (1.0, 0.0))
