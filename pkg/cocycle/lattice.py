"""
Lattice cells of X = M x Z_+^{d1} x Z^{d2} and integer cubes in them.
"""
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence, Tuple

import numpy as np

from core.errors import ArgumentError, LatticeError


@dataclass(frozen=True)
class LatticeVector:
    """
    Integer vector with a (d1, d2) split: the first d1 axes are half-infinite.

    Displacements may be negative on any axis; only cells (see ``as_cell``) must
    keep the first d1 coordinates nonnegative.
    """
    coords: Tuple[int, ...]
    d1: int = 0

    def __post_init__(self):
        coords = tuple(int(c) for c in self.coords)
        object.__setattr__(self, "coords", coords)
        if not 0 <= self.d1 <= len(coords):
            raise ArgumentError(f"d1={self.d1} does not fit a {len(coords)}-dimensional vector")

    @classmethod
    def zero(cls, d1: int, d2: int) -> "LatticeVector":
        return cls((0,) * (d1 + d2), d1)

    @classmethod
    def unit(cls, axis: int, d1: int, d2: int) -> "LatticeVector":
        coords = [0] * (d1 + d2)
        coords[axis] = 1
        return cls(tuple(coords), d1)

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def d2(self) -> int:
        return len(self.coords) - self.d1

    @property
    def split(self) -> Tuple[int, int]:
        return self.d1, self.d2

    def is_cell(self) -> bool:
        return all(c >= 0 for c in self.coords[: self.d1])

    def as_cell(self) -> "LatticeVector":
        """Return self after checking the nonnegativity of the half-infinite axes."""
        if not self.is_cell():
            raise LatticeError(f"cell {self.coords} leaves Z_+ on one of its first {self.d1} axes")
        return self

    def _check(self, other: "LatticeVector"):
        if self.split != other.split:
            raise ArgumentError(f"lattice split mismatch: {self.split} vs {other.split}")

    def __add__(self, other: "LatticeVector") -> "LatticeVector":
        self._check(other)
        return LatticeVector(tuple(a + b for a, b in zip(self.coords, other.coords)), self.d1)

    def __sub__(self, other: "LatticeVector") -> "LatticeVector":
        self._check(other)
        return LatticeVector(tuple(a - b for a, b in zip(self.coords, other.coords)), self.d1)

    def __neg__(self) -> "LatticeVector":
        return LatticeVector(tuple(-a for a in self.coords), self.d1)

    def scale(self, k: int) -> "LatticeVector":
        return LatticeVector(tuple(k * a for a in self.coords), self.d1)

    def norm_inf(self) -> int:
        return max((abs(c) for c in self.coords), default=0)

    def norm(self) -> float:
        return float(np.sqrt(sum(c * c for c in self.coords)))

    def __iter__(self) -> Iterator[int]:
        return iter(self.coords)

    def __getitem__(self, axis: int) -> int:
        return self.coords[axis]

    def __len__(self) -> int:
        return len(self.coords)


@dataclass(frozen=True)
class CubeSpec:
    """Integer box prod_j [lo_j, hi_j] (inclusive) of lattice cells."""
    lo: Tuple[int, ...]
    hi: Tuple[int, ...]
    d1: int = 0

    def __post_init__(self):
        lo = tuple(int(v) for v in self.lo)
        hi = tuple(int(v) for v in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi):
            raise ArgumentError(f"cube bounds have different lengths: {len(lo)} vs {len(hi)}")
        for j, (a, b) in enumerate(zip(lo, hi)):
            if a > b:
                raise ArgumentError(f"empty cube on axis {j}: [{a}, {b}]")
            if j < self.d1 and a < 0:
                raise LatticeError(f"cube axis {j} is half-infinite but starts at {a}")

    @classmethod
    def centered(cls, center: Sequence[int], size: int, d1: int = 0) -> "CubeSpec":
        """Cube with ``size`` cells per side whose lowest corner sits at center - size//2."""
        if size < 1:
            raise ArgumentError(f"cube size must be positive, got {size}")
        lo = [int(c) - size // 2 for c in center]
        for j in range(d1):
            lo[j] = max(lo[j], 0)
        return cls(tuple(lo), tuple(a + size - 1 for a in lo), d1)

    @classmethod
    def scaled_box(cls, a_minus: Sequence[float], a_plus: Sequence[float], N: int, d1: int = 0) -> "CubeSpec":
        """Origin-anchored box prod_j [a_{j,-} N, a_{j,+} N] rounded inward to integers."""
        lo = tuple(int(np.ceil(a * N)) for a in a_minus)
        hi = tuple(int(np.floor(b * N)) for b in a_plus)
        return cls(lo, hi, d1)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def sides(self) -> Tuple[int, ...]:
        return tuple(b - a + 1 for a, b in zip(self.lo, self.hi))

    @property
    def volume(self) -> int:
        """Number of cells, i.e. mu(V) since nu is a probability."""
        return int(np.prod(self.sides))

    @property
    def size(self) -> int:
        return min(self.sides)

    def contains(self, cell: Iterable[int]) -> bool:
        return all(a <= c <= b for c, a, b in zip(cell, self.lo, self.hi))

    def sample_cell(self, rng: np.random.Generator) -> LatticeVector:
        coords = tuple(int(rng.integers(a, b + 1)) for a, b in zip(self.lo, self.hi))
        return LatticeVector(coords, self.d1)

    def cells(self) -> Iterator[LatticeVector]:
        grids = np.meshgrid(*[np.arange(a, b + 1) for a, b in zip(self.lo, self.hi)], indexing="ij")
        for point in zip(*(g.ravel() for g in grids)):
            yield LatticeVector(tuple(int(p) for p in point), self.d1)

    def shifted(self, offset: Sequence[int]) -> "CubeSpec":
        return CubeSpec(
            tuple(a + int(o) for a, o in zip(self.lo, offset)),
            tuple(b + int(o) for b, o in zip(self.hi, offset)),
            self.d1,
        )


def cell_of(coords: Optional[Sequence[int]], d1: int = 0) -> LatticeVector:
    return LatticeVector(tuple(coords or ()), d1)
