"""
System interface for Z^d extensions T(y, z) = (f(y), z + tau(y)).

Base points are opaque here: only the concrete system reads them. Systems are
immutable after construction so they can be shipped to ensemble workers.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Iterable, Optional, Tuple

import numpy as np

from core.errors import ArgumentError, LatticeError
from .lattice import CubeSpec, LatticeVector


@dataclass(frozen=True)
class ExtendedState:
    """Point x = (y, z) of X = M x Z_+^{d1} x Z^{d2}."""
    base: Any
    cell: LatticeVector

    def __post_init__(self):
        self.cell.as_cell()


class CocycleSystem(ABC):
    """
    Contract every system implements.

    Skew products implement ``base_step`` and ``displacement`` (or the combined
    ``step``); systems whose extension is not a product (local perturbations,
    walls, fields anchored at a point, flows) set ``is_skew_product = False`` and
    override ``extended_step``.
    """

    d1: int = 0
    d2: int = 1
    is_skew_product: bool = True
    finite_horizon: bool = True
    displacement_bound: Optional[int] = None
    # lattice period of tau_n; 1 means aperiodic
    period: int = 1
    name: str = "system"

    @property
    def dim(self) -> int:
        return self.d1 + self.d2

    @property
    def split(self) -> Tuple[int, int]:
        return self.d1, self.d2

    @abstractmethod
    def sample_base(self, rng: np.random.Generator) -> Any:
        """Draw y from the invariant probability nu."""

    def base_step(self, y: Any) -> Any:
        return self.step(y)[0]

    def displacement(self, y: Any) -> LatticeVector:
        return self.step(y)[1]

    def step(self, y: Any) -> Tuple[Any, LatticeVector]:
        """Return (f(y), tau(y)) in one pass."""
        raise NotImplementedError(f"{type(self).__name__} implements neither step nor base_step/displacement")

    def advance(self, y: Any, n: int) -> Tuple[Any, LatticeVector]:
        """Return (f^n(y), tau_n(y)); systems with a vectorised path override this."""
        total = self.zero()
        for _ in range(n):
            y, tau = self.step(y)
            total = total + tau
        return y, total

    def base_metric(self, y1: Any, y2: Any) -> float:
        return 0.0 if y1 == y2 else 1.0

    def zero(self) -> LatticeVector:
        return LatticeVector.zero(self.d1, self.d2)

    def extended_step(self, x: ExtendedState) -> ExtendedState:
        y_next, tau = self.step(x.base)
        if tau.split != self.split:
            raise LatticeError(f"{self.name} emitted a displacement with split {tau.split}, expected {self.split}")
        return ExtendedState(y_next, x.cell + tau)

    def sample_in_cube(self, cube: CubeSpec, rng: np.random.Generator) -> ExtendedState:
        """Draw x from mu restricted to the cube: cell uniform, base from nu."""
        cell = cube.sample_cell(rng)
        return ExtendedState(self.sample_base(rng), cell)

    def sample_from_cell_weight(self, cell: LatticeVector, rng: np.random.Generator) -> ExtendedState:
        return ExtendedState(self.sample_base(rng), cell)

    def origin(self) -> ExtendedState:
        raise NotImplementedError(f"{type(self).__name__} has no distinguished origin state")


def extend_step(system: CocycleSystem, x: ExtendedState) -> ExtendedState:
    return system.extended_step(x)


def birkhoff_displacement(system: CocycleSystem, y: Any, n: int) -> LatticeVector:
    """
    Sum tau(y) + tau(f y) + ... + tau(f^{n-1} y).

    Raises:
        ArgumentError: n negative, or the system is not a product extension
    """
    if n < 0:
        raise ArgumentError(f"iterate count must be nonnegative, got {n}")
    if not system.is_skew_product:
        raise ArgumentError(f"{system.name} is not a skew product; use iterate on extended states")
    return system.advance(y, n)[1]


def iterate(
    system: CocycleSystem,
    x: ExtendedState,
    n: int,
    record: Optional[Iterable[int]] = None,
) -> Tuple[ExtendedState, Dict[int, ExtendedState]]:
    """
    Apply T n times.

    Returns:
        (T^n x, {k: T^k x for k in record})
    """
    if n < 0:
        raise ArgumentError(f"iterate count must be nonnegative, got {n}")
    wanted = set(record or ())
    if not wanted and system.is_skew_product:
        y, tau = system.advance(x.base, n)
        return ExtendedState(y, x.cell + tau), {}
    seen: Dict[int, ExtendedState] = {}
    if 0 in wanted:
        seen[0] = x
    for k in range(1, n + 1):
        x = system.extended_step(x)
        if k in wanted:
            seen[k] = x
    return x, seen
