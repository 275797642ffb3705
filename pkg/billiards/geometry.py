"""
Scatterer configurations for periodic Sinai billiards.

Disks are anchored to unit cells: a disk with fundamental-cell center c in
[0,1)^2 anchored at cell (i, j) sits at (i, j) + c. A disk may overhang its
anchor cell by at most its radius, so every disk meeting a cell is anchored in
that cell's 3x3 neighbourhood.

Geometry flavours:
    plane       R^2, lattice Z^2
    tube        R x [0,1], walls at q2 = 0 and q2 = 1, lattice Z
    half_strip  R+ x [0,1], walls at q1 = 0, q2 = 0, q2 = 1, lattice Z+
    half_plane  R+ x R, wall at q1 = 0, lattice Z+ x Z
"""
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Literal, Mapping, Optional, Sequence, Tuple

import numpy as np

from cocycle.lattice import LatticeVector
from core.config import settings
from core.errors import ConfigurationError, DomainError

Geometry = Literal["plane", "tube", "half_strip", "half_plane"]
Anchor = Tuple[int, int]

LATTICE_SPLIT: Dict[str, Tuple[int, int]] = {
    "plane": (0, 2),
    "tube": (0, 1),
    "half_strip": (1, 0),
    "half_plane": (1, 1),
}


@dataclass(frozen=True)
class Disk:
    center: Tuple[float, float]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if not self.radius > 0:
            raise ConfigurationError(f"disk radius must be positive, got {self.radius}")
        if self.radius >= 1.0:
            raise ConfigurationError(f"disk radius {self.radius} does not fit the overhang convention (< 1)")
        if not all(0.0 <= c < 1.0 for c in self.center):
            raise ConfigurationError(f"disk center {self.center} must lie in the fundamental cell [0,1)^2")

    @property
    def perimeter(self) -> float:
        return 2 * math.pi * self.radius


@dataclass(frozen=True)
class LocalMod:
    """Changes to one cell: extra disks and periodic disk indices removed."""
    added: Tuple[Disk, ...] = ()
    removed: Tuple[int, ...] = ()


@dataclass(frozen=True)
class BoundaryCoord:
    """
    Point of the collision space: disk ``disk`` anchored at ``cell``, arclength
    ``r`` counterclockwise from angle 0 and reflection angle ``phi`` of the
    outgoing velocity, positive when the velocity is counterclockwise from the
    outward normal.
    """
    cell: LatticeVector
    disk: int
    r: float
    phi: float
    grazing: bool = False

    def __post_init__(self):
        if not abs(self.phi) <= math.pi / 2 + 1e-12:
            raise DomainError(f"reflection angle phi={self.phi} outside [-pi/2, pi/2]")
        if self.r < 0:
            raise DomainError(f"arclength r={self.r} must be nonnegative")

    def with_cell(self, cell: LatticeVector) -> "BoundaryCoord":
        return BoundaryCoord(cell, self.disk, self.r, self.phi, self.grazing)


@dataclass(frozen=True)
class ScattererConfig:
    """
    Periodic disk configuration with an optional finite window of modified cells.

    ``free_path_bound`` is the declared bound on free flights; flights beyond
    four times the bound raise a horizon violation.
    """
    disks: Tuple[Disk, ...]
    geometry: Geometry = "plane"
    local_mods: Mapping[Anchor, LocalMod] = field(default_factory=dict)
    finite_horizon: bool = True
    free_path_bound: float = 3.0
    name: str = "config"

    def __post_init__(self):
        object.__setattr__(self, "disks", tuple(self.disks))
        object.__setattr__(self, "local_mods", {tuple(int(a) for a in k): v for k, v in dict(self.local_mods).items()})
        if self.geometry not in LATTICE_SPLIT:
            raise ConfigurationError(f"unknown geometry {self.geometry!r}")
        if self.free_path_bound <= 0:
            raise ConfigurationError(f"free path bound must be positive, got {self.free_path_bound}")
        for anchor, mod in self.local_mods.items():
            if not self.anchor_in_domain(anchor):
                raise ConfigurationError(f"modified cell {anchor} lies outside the {self.geometry} domain")
            for index in mod.removed:
                if not 0 <= index < len(self.disks):
                    raise ConfigurationError(f"cell {anchor} removes unknown disk {index}")
        self._check_walls()
        self._check_disjoint()

    # construction helpers

    @classmethod
    def reference(cls) -> "ScattererConfig":
        """Finite-horizon plane configuration: r=0.4 at (0,0) plus r=0.3 at (0.5,0.5)."""
        return cls((Disk((0.0, 0.0), 0.4), Disk((0.5, 0.5), 0.3)), "plane", free_path_bound=3.0, name="reference")

    @classmethod
    def single_disk(cls, radius: float, center: Tuple[float, float] = (0.0, 0.0)) -> "ScattererConfig":
        """One disk per cell; axis corridors stay open, so the horizon is infinite."""
        return cls((Disk(center, radius),), "plane", finite_horizon=False, free_path_bound=3.0, name=f"single({radius})")

    @classmethod
    def half_strip(cls) -> "ScattererConfig":
        """Two staggered disks per unit cell of R+ x [0,1]."""
        disks = (Disk((0.25, 0.3), 0.2), Disk((0.75, 0.7), 0.2))
        return cls(disks, "half_strip", finite_horizon=False, free_path_bound=200.0, name="half_strip")

    @classmethod
    def galton(cls) -> "ScattererConfig":
        """Reference disks on the half plane R+ x R."""
        ref = cls.reference()
        # reference pair translated by (0.45, 0.25) so that no disk meets the wall
        disks = (Disk((0.45, 0.25), 0.4), Disk((0.95, 0.75), 0.3))
        return cls(disks, "half_plane", free_path_bound=ref.free_path_bound, name="galton")

    def with_removed(self, cell: Sequence[int], index: int) -> "ScattererConfig":
        anchor = (int(cell[0]), int(cell[1]) if len(cell) > 1 else 0)
        mods = dict(self.local_mods)
        old = mods.get(anchor, LocalMod())
        mods[anchor] = LocalMod(old.added, tuple(sorted(set(old.removed) | {index})))
        return ScattererConfig(self.disks, self.geometry, mods, self.finite_horizon, self.free_path_bound, f"{self.name}-mod")

    def with_added(self, cell: Sequence[int], disk: Disk) -> "ScattererConfig":
        anchor = (int(cell[0]), int(cell[1]) if len(cell) > 1 else 0)
        mods = dict(self.local_mods)
        old = mods.get(anchor, LocalMod())
        mods[anchor] = LocalMod(old.added + (disk,), old.removed)
        return ScattererConfig(self.disks, self.geometry, mods, self.finite_horizon, self.free_path_bound, f"{self.name}-mod")

    # lattice bookkeeping

    @property
    def split(self) -> Tuple[int, int]:
        return LATTICE_SPLIT[self.geometry]

    @property
    def is_periodic(self) -> bool:
        return not self.local_mods and self.geometry in ("plane", "tube")

    def anchor_in_domain(self, anchor: Anchor) -> bool:
        i, j = anchor
        if self.geometry in ("tube", "half_strip") and j != 0:
            return False
        if self.geometry in ("half_strip", "half_plane") and i < 0:
            return False
        return True

    def to_lattice(self, anchor: Anchor) -> LatticeVector:
        d1, d2 = self.split
        if self.geometry == "plane":
            return LatticeVector((anchor[0], anchor[1]), d1)
        if self.geometry in ("tube", "half_strip"):
            return LatticeVector((anchor[0],), d1)
        return LatticeVector((anchor[0], anchor[1]), d1)

    def from_lattice(self, cell: LatticeVector) -> Anchor:
        if cell.dim == 1:
            return int(cell[0]), 0
        return int(cell[0]), int(cell[1])

    def anchor_of(self, q: Sequence[float]) -> Anchor:
        return int(math.floor(q[0])), int(math.floor(q[1]))

    # disks

    def disks_at(self, anchor: Anchor) -> List[Tuple[int, Disk]]:
        """(disk id, disk) anchored at ``anchor``; added disks get ids after the periodic ones."""
        if not self.anchor_in_domain(anchor):
            return []
        mod = self.local_mods.get(anchor)
        if mod is None:
            return list(enumerate(self.disks))
        kept = [(k, d) for k, d in enumerate(self.disks) if k not in mod.removed]
        return kept + [(len(self.disks) + k, d) for k, d in enumerate(mod.added)]

    def disk(self, anchor: Anchor, disk_id: int) -> Disk:
        for k, d in self.disks_at(anchor):
            if k == disk_id:
                return d
        raise DomainError(f"no disk {disk_id} anchored at cell {anchor}")

    def disk_center(self, anchor: Anchor, disk: Disk) -> np.ndarray:
        return np.array([anchor[0] + disk.center[0], anchor[1] + disk.center[1]])

    def total_perimeter(self) -> float:
        return float(sum(d.perimeter for d in self.disks))

    def neighbourhood(self, anchor: Anchor, reach: int = 1) -> Iterable[Tuple[Anchor, int, Disk]]:
        i, j = anchor
        for di in range(-reach, reach + 1):
            for dj in range(-reach, reach + 1):
                a = (i + di, j + dj)
                for k, d in self.disks_at(a):
                    yield a, k, d

    def inside_disk(self, q: Sequence[float]) -> Optional[Tuple[Anchor, int]]:
        point = np.asarray(q, dtype=float)
        for anchor, k, d in self.neighbourhood(self.anchor_of(point)):
            if np.linalg.norm(point - self.disk_center(anchor, d)) < d.radius:
                return anchor, k
        return None

    def check_position(self, q: Sequence[float]) -> None:
        """Raise DomainError when q is inside a scatterer or outside the walls."""
        hit = self.inside_disk(q)
        if hit is not None:
            raise DomainError(f"position ({q[0]:.6g}, {q[1]:.6g}) lies inside disk {hit[1]} of cell {hit[0]}")
        if self.geometry in ("tube", "half_strip") and not 0.0 <= q[1] <= 1.0:
            raise DomainError(f"position q2={q[1]:.6g} lies outside the strip [0, 1]")
        if self.geometry in ("half_strip", "half_plane") and q[0] < 0.0:
            raise DomainError(f"position q1={q[0]:.6g} lies behind the wall q1 = 0")

    # boundary coordinates

    def boundary_point(self, coord: BoundaryCoord) -> Tuple[np.ndarray, np.ndarray]:
        """Impact position and outward unit normal for a boundary coordinate."""
        anchor = self.from_lattice(coord.cell)
        d = self.disk(anchor, coord.disk)
        if coord.r >= d.perimeter * (1 + 1e-12):
            raise DomainError(f"arclength r={coord.r} exceeds the perimeter {d.perimeter} of disk {coord.disk}")
        theta = coord.r / d.radius
        normal = np.array([math.cos(theta), math.sin(theta)])
        return self.disk_center(anchor, d) + d.radius * normal, normal

    def phase_point(self, coord: BoundaryCoord) -> Tuple[np.ndarray, np.ndarray]:
        """Position and outgoing unit velocity for a boundary coordinate."""
        q, normal = self.boundary_point(coord)
        theta = math.atan2(normal[1], normal[0]) + coord.phi
        return q, np.array([math.cos(theta), math.sin(theta)])

    def coord_of_impact(self, anchor: Anchor, disk_id: int, q: np.ndarray, v_out: np.ndarray) -> BoundaryCoord:
        d = self.disk(anchor, disk_id)
        rel = q - self.disk_center(anchor, d)
        theta = math.atan2(rel[1], rel[0]) % (2 * math.pi)
        normal = rel / np.linalg.norm(rel)
        unit = v_out / np.linalg.norm(v_out)
        phi = math.atan2(normal[0] * unit[1] - normal[1] * unit[0], float(normal @ unit))
        phi = max(-math.pi / 2, min(math.pi / 2, phi))
        r = d.radius * theta
        if r >= d.perimeter:
            r = 0.0
        grazing = math.pi / 2 - abs(phi) <= settings.GRAZING_TOLERANCE
        return BoundaryCoord(self.to_lattice(anchor), disk_id, r, phi, grazing)

    # validation

    def _check_disjoint(self):
        anchors = [(2, 0)] + list(self.local_mods)
        for anchor in anchors:
            for k, d in self.disks_at(anchor):
                c = self.disk_center(anchor, d)
                for other_anchor, k2, d2 in self.neighbourhood(anchor, 2):
                    if (other_anchor, k2) == (anchor, k):
                        continue
                    gap = np.linalg.norm(c - self.disk_center(other_anchor, d2)) - d.radius - d2.radius
                    if gap <= 0:
                        raise ConfigurationError(
                            f"disk {k} of cell {anchor} overlaps disk {k2} of cell {other_anchor} (gap {gap:.3g})"
                        )

    def _check_walls(self):
        for k, d in enumerate(self.disks):
            cx, cy = d.center
            if self.geometry in ("tube", "half_strip") and not (cy - d.radius > 0 and cy + d.radius < 1):
                raise ConfigurationError(f"disk {k} touches a strip wall")
            if self.geometry in ("half_strip", "half_plane") and cx - d.radius <= 0:
                raise ConfigurationError(f"disk {k} cuts the wall q1 = 0")
        for anchor, mod in self.local_mods.items():
            for d in mod.added:
                if self.geometry in ("tube", "half_strip") and not (d.center[1] - d.radius > 0 and d.center[1] + d.radius < 1):
                    raise ConfigurationError(f"added disk in cell {anchor} touches a strip wall")


def wall_lines(config: ScattererConfig) -> List[Tuple[int, float, float]]:
    """Walls as (axis, position, inward direction sign)."""
    walls = []
    if config.geometry in ("tube", "half_strip"):
        walls += [(1, 0.0, 1.0), (1, 1.0, -1.0)]
    if config.geometry in ("half_strip", "half_plane"):
        walls.append((0, 0.0, 1.0))
    return walls
