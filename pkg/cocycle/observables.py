"""
Observables on X: compactly supported local weights and bounded global functions.

Local observables are stored cell by cell as affine combinations of base-point
callables, so sums, differences and rescalings stay exact and cells that
cancel to a constant are recognised as such.
"""
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from core.config import settings
from core.errors import ArgumentError
from .lattice import LatticeVector
from .system import CocycleSystem, ExtendedState

CellKey = Tuple[int, ...]
Scheme = str  # "G_O" | "G_U" | "unknown"


@dataclass(frozen=True)
class CellWeight:
    """Weight on M for one cell: offset + sum_k coef_k * fn_k(y)."""
    offset: float = 0.0
    terms: Tuple[Tuple[float, Callable[[Any], float]], ...] = ()
    sup: float = 0.0
    mass: Optional[float] = None
    mass_se: float = 0.0

    @classmethod
    def constant(cls, value: float) -> "CellWeight":
        return cls(offset=float(value), sup=abs(float(value)), mass=float(value))

    @classmethod
    def function(cls, fn: Callable[[Any], float], sup: float, mass: Optional[float] = None) -> "CellWeight":
        return cls(terms=((1.0, fn),), sup=float(sup), mass=mass)

    @property
    def is_constant(self) -> bool:
        return not self.terms

    @property
    def is_zero(self) -> bool:
        return self.is_constant and self.offset == 0.0

    def __call__(self, y: Any) -> float:
        value = self.offset
        for coef, fn in self.terms:
            value += coef * float(fn(y))
        return value

    def affine(self, a: float, b: float) -> "CellWeight":
        """Return a + b * self."""
        if b == 0.0:
            return CellWeight.constant(a)
        mass = None if self.mass is None else a + b * self.mass
        return CellWeight(
            offset=a + b * self.offset,
            terms=tuple((b * c, fn) for c, fn in self.terms),
            sup=abs(a) + abs(b) * self.sup,
            mass=mass,
            mass_se=abs(b) * self.mass_se,
        )

    def combine(self, other: "CellWeight", a: float = 1.0, b: float = 1.0) -> "CellWeight":
        """Return a * self + b * other, merging terms that share a callable."""
        merged: Dict[int, List] = {}
        for scale, weight in ((a, self), (b, other)):
            for coef, fn in weight.terms:
                slot = merged.setdefault(id(fn), [0.0, fn])
                slot[0] += scale * coef
        terms = tuple((c, fn) for c, fn in merged.values() if c != 0.0)
        masses_known = self.mass is not None and other.mass is not None
        return CellWeight(
            offset=a * self.offset + b * other.offset,
            terms=terms,
            sup=abs(a) * self.sup + abs(b) * other.sup,
            mass=(a * self.mass + b * other.mass) if masses_known else None,
            mass_se=abs(a) * self.mass_se + abs(b) * other.mass_se,
        )


@dataclass(frozen=True)
class LocalObservable:
    """
    Compactly supported observable phi(y, z) = weight_z(y) for z in the support.

    ``bound`` is the declared sup norm and ``lipschitz`` the declared Lipschitz
    constant of every cell weight.
    """
    cells: Mapping[CellKey, CellWeight]
    d1: int = 0
    lipschitz: float = 0.0
    bound: float = 1.0
    nonnegative: bool = True
    name: str = "local"

    def __post_init__(self):
        if not self.cells:
            raise ArgumentError("local observable needs at least one support cell")
        for key, weight in self.cells.items():
            LatticeVector(key, self.d1).as_cell()
            if weight.sup > self.bound * (1 + 1e-12) + 1e-300:
                raise ArgumentError(f"cell {key} weight sup {weight.sup} exceeds declared bound {self.bound}")

    @property
    def support(self) -> List[LatticeVector]:
        return [LatticeVector(key, self.d1) for key in self.cells]

    def weight(self, cell: LatticeVector, y: Any) -> float:
        w = self.cells.get(cell.coords)
        return 0.0 if w is None else w(y)

    def __call__(self, x: ExtendedState) -> float:
        return self.weight(x.cell, x.base)

    def is_zero(self) -> bool:
        return self.bound == 0.0 or all(w.is_zero for w in self.cells.values())

    @property
    def masses_known(self) -> bool:
        return all(w.mass is not None for w in self.cells.values())

    def mass(self) -> float:
        """mu(phi) = sum over cells of nu(weight)."""
        if not self.masses_known:
            raise ArgumentError(f"{self.name}: cell masses unknown; call with_masses first")
        return float(sum(w.mass for w in self.cells.values()))

    def mass_se(self) -> float:
        return float(np.sqrt(sum(w.mass_se ** 2 for w in self.cells.values())))

    def with_masses(
        self,
        system: CocycleSystem,
        rng: np.random.Generator,
        budget: Optional[int] = None,
    ) -> "LocalObservable":
        """Fill unknown cell masses by Monte Carlo against nu."""
        samples = budget or settings.MU_SAMPLE_BUDGET
        if samples < 2:
            raise ArgumentError(f"mass sample budget must be at least 2, got {samples}")
        cells = {}
        for key, w in self.cells.items():
            if w.mass is not None:
                cells[key] = w
                continue
            values = np.array([w(system.sample_base(rng)) for _ in range(samples)])
            cells[key] = replace(w, mass=float(values.mean()), mass_se=float(values.std(ddof=1) / np.sqrt(samples)))
        return replace(self, cells=cells)

    def scaled(self, c: float) -> "LocalObservable":
        cells = {key: w.affine(0.0, c) for key, w in self.cells.items()}
        return replace(
            self,
            cells=cells,
            bound=abs(c) * self.bound,
            lipschitz=abs(c) * self.lipschitz,
            nonnegative=self.nonnegative and c >= 0,
        )

    def _combine(self, other: "LocalObservable", b: float) -> "LocalObservable":
        if self.d1 != other.d1:
            raise ArgumentError(f"lattice split mismatch: d1={self.d1} vs d1={other.d1}")
        zero = CellWeight.constant(0.0)
        cells = {}
        for key in list(self.cells) + [k for k in other.cells if k not in self.cells]:
            cells[key] = self.cells.get(key, zero).combine(other.cells.get(key, zero), 1.0, b)
        return LocalObservable(
            cells=cells,
            d1=self.d1,
            lipschitz=self.lipschitz + other.lipschitz,
            bound=self.bound + other.bound,
            nonnegative=self.nonnegative and other.nonnegative and b >= 0,
            name=f"{self.name}{'+' if b >= 0 else '-'}{other.name}",
        )

    def __add__(self, other: "LocalObservable") -> "LocalObservable":
        return self._combine(other, 1.0)

    def __sub__(self, other: "LocalObservable") -> "LocalObservable":
        return self._combine(other, -1.0)


@dataclass(frozen=True)
class GlobalObservable:
    """
    Bounded uniformly continuous Phi on X with a declared average Phi-bar.

    ``average`` is None when the infinite-volume average is to be estimated;
    ``kind`` records the claimed class (G_O, G_U or unknown).
    """
    evaluator: Callable[[ExtendedState], float]
    bound: float
    average: Optional[float] = None
    kind: Scheme = "unknown"
    modulus: Optional[Callable[[float], float]] = None
    constant: Optional[float] = None
    name: str = "global"

    def __post_init__(self):
        if self.kind not in ("G_O", "G_U", "unknown"):
            raise ArgumentError(f"unknown observable class {self.kind!r}")
        if self.bound < 0:
            raise ArgumentError(f"bound must be nonnegative, got {self.bound}")

    def __call__(self, x: ExtendedState) -> float:
        if self.constant is not None:
            return self.constant
        return float(self.evaluator(x))

    @property
    def is_constant(self) -> bool:
        return self.constant is not None

    def check_bound(self, states: Iterable[ExtendedState]) -> bool:
        return all(abs(self(x)) <= self.bound * (1 + 1e-12) for x in states)

    def check_modulus(self, pairs: Iterable[Tuple[ExtendedState, ExtendedState]], distance: Callable) -> bool:
        if self.modulus is None:
            return True
        return all(abs(self(a) - self(b)) <= self.modulus(distance(a, b)) + 1e-12 for a, b in pairs)

    def plus(self, other: "GlobalObservable") -> "GlobalObservable":
        average = None if self.average is None or other.average is None else self.average + other.average
        constant = None if self.constant is None or other.constant is None else self.constant + other.constant
        return GlobalObservable(
            evaluator=_Sum(self, other),
            bound=self.bound + other.bound,
            average=average,
            kind=self.kind if self.kind == other.kind else "unknown",
            constant=constant,
            name=f"{self.name}+{other.name}",
        )


class _Sum:
    def __init__(self, left: GlobalObservable, right: GlobalObservable):
        self.left = left
        self.right = right

    def __call__(self, x: ExtendedState) -> float:
        return self.left(x) + self.right(x)


class _CosineWave:
    def __init__(self, alpha: float, axes: Sequence[int]):
        self.alpha = alpha
        self.axes = tuple(axes)

    def __call__(self, x: ExtendedState) -> float:
        value = 1.0
        for j in self.axes:
            value *= np.cos(2 * np.pi * self.alpha * x.cell[j])
        return float(value)


class _Saturating:
    def __init__(self, axis: int):
        self.axis = axis

    def __call__(self, x: ExtendedState) -> float:
        z = x.cell[self.axis]
        return z / (1.0 + abs(z))


class _BaseOnly:
    def __init__(self, psi: Callable[[Any], float]):
        self.psi = psi

    def __call__(self, x: ExtendedState) -> float:
        return float(self.psi(x.base))


class _Zero:
    def __call__(self, y: Any) -> float:
        return 0.0


GOLDEN_ALPHA = (np.sqrt(5.0) - 1.0) / 2.0


def constant_global(c: float) -> GlobalObservable:
    return GlobalObservable(evaluator=_Zero(), bound=abs(c), average=float(c), kind="G_U", constant=float(c), name=f"const({c})")


def cosine_wave_global(alpha: float = GOLDEN_ALPHA, axes: Sequence[int] = (0,)) -> GlobalObservable:
    """Phi(y, z) = prod_j cos(2 pi alpha z_j); Phi-bar = 0 for irrational alpha."""
    return GlobalObservable(
        evaluator=_CosineWave(alpha, axes),
        bound=1.0,
        average=0.0,
        kind="G_U",
        modulus=lambda d: min(2.0, 2 * np.pi * abs(alpha) * len(axes) * d),
        name=f"cos(2pi*{alpha:.6g}*z)",
    )


def saturating_global(axis: int = 0, declared_average: Optional[float] = 0.0) -> GlobalObservable:
    """Phi(z) = z_j / (1 + |z_j|): bounded, uniformly continuous, not in G_U."""
    return GlobalObservable(
        evaluator=_Saturating(axis),
        bound=1.0,
        average=declared_average,
        kind="unknown",
        modulus=lambda d: min(2.0, d),
        name=f"sat(z{axis})",
    )


def base_global(psi: Callable[[Any], float], average: Optional[float], bound: float, name: str = "psi") -> GlobalObservable:
    """Phi(y, z) = psi(y), lifted from the base; Phi-bar = nu(psi)."""
    return GlobalObservable(evaluator=_BaseOnly(psi), bound=bound, average=average, kind="G_U", name=name)


def cell_indicator_local(cells: Iterable[Sequence[int]], d1: int = 0, value: float = 1.0) -> LocalObservable:
    """phi = value on every listed cell; mass is exact since nu is a probability."""
    keys = [tuple(int(c) for c in cell) for cell in cells]
    return LocalObservable(
        cells={key: CellWeight.constant(value) for key in keys},
        d1=d1,
        lipschitz=0.0,
        bound=abs(value),
        nonnegative=value >= 0,
        name="indicator",
    )


def weighted_local(
    cell: Sequence[int],
    weight: Callable[[Any], float],
    lipschitz: float,
    bound: float,
    d1: int = 0,
    nonnegative: bool = False,
    mass: Optional[float] = None,
    name: str = "weighted",
) -> LocalObservable:
    key = tuple(int(c) for c in cell)
    return LocalObservable(
        cells={key: CellWeight.function(weight, sup=bound, mass=mass)},
        d1=d1,
        lipschitz=lipschitz,
        bound=bound,
        nonnegative=nonnegative,
        name=name,
    )


def decompose_local(
    phi: LocalObservable,
    R: float = 10.0,
    system: Optional[CocycleSystem] = None,
    rng: Optional[np.random.Generator] = None,
    budget: Optional[int] = None,
) -> List[Tuple[float, LocalObservable]]:
    """
    Split phi into nonnegative pieces of unit mass.

    A signed phi is written as R|phi| 1_W - (R|phi| - phi) 1_W on its support W,
    both pieces renormalised to mu-mass one. Unknown cell masses are estimated
    against nu when ``system`` and ``rng`` are given.

    Returns:
        [(c_i, phi_i)] with phi = sum c_i phi_i; empty for phi == 0.

    Raises:
        ArgumentError: R < 1, or masses unknown and no system to estimate them
    """
    if R < 1.0:
        raise ArgumentError(f"R must be at least 1 so that R|phi| - phi >= 0, got {R}")
    cells = {key: w for key, w in phi.cells.items() if not w.is_zero}
    if not cells or phi.bound == 0.0:
        return []
    phi = replace(phi, cells=cells)
    if not phi.masses_known:
        if system is None or rng is None:
            raise ArgumentError(f"{phi.name}: cell masses unknown and no system given to estimate them")
        phi = phi.with_masses(system, rng, budget)

    if phi.nonnegative:
        total = phi.mass()
        if total <= 0.0:
            return []
        if total == 1.0:
            return [(1.0, phi)]
        return [(total, _normalized(phi, total))]

    level = R * phi.bound
    count = len(phi.cells)
    flat = LocalObservable(
        cells={key: CellWeight.constant(1.0 / count) for key in phi.cells},
        d1=phi.d1,
        lipschitz=0.0,
        bound=1.0 / count,
        nonnegative=True,
        name=f"{phi.name}:flat",
    )
    lifted_cells = {key: w.affine(level, -1.0) for key, w in phi.cells.items()}
    lifted_mass = float(sum(w.mass for w in lifted_cells.values()))
    lifted = LocalObservable(
        cells=lifted_cells,
        d1=phi.d1,
        lipschitz=phi.lipschitz,
        bound=level + phi.bound,
        nonnegative=True,
        name=f"{phi.name}:lifted",
    )
    return [(level * count, flat), (-lifted_mass, _normalized(lifted, lifted_mass))]


def _normalized(phi: LocalObservable, total: float) -> LocalObservable:
    cells = {key: w.affine(0.0, 1.0 / total) for key, w in phi.cells.items()}
    return replace(phi, cells=cells, bound=phi.bound / total, lipschitz=phi.lipschitz / total)
