"""
Lattice random walks as Z^d extensions, with convolution-exact distributions.

The base space is an i.i.d. symbol stream addressed by (key, position); f is
the shift and tau reads the current symbol. Symbols are generated in blocks
from ``default_rng([key, block])`` so any position is reachable without
replaying the stream.
"""
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import convolve

from cocycle.lattice import LatticeVector
from cocycle.system import CocycleSystem, ExtendedState
from core.errors import ArgumentError, ResourceError

BLOCK = 1024
MAX_CONVOLUTIONS = 128
MAX_TABLE_CELLS = 20_000_000
METRIC_DEPTH = 64


@dataclass(frozen=True)
class StepDistribution:
    """Finite step law: support vectors with positive probabilities summing to one."""
    support: Tuple[LatticeVector, ...]
    probs: Tuple[float, ...]

    def __post_init__(self):
        support = tuple(self.support)
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)
        if not support or len(support) != len(probs):
            raise ArgumentError(f"step distribution needs matching nonempty support and probabilities")
        if any(p <= 0 for p in probs):
            raise ArgumentError(f"step probabilities must be positive, got {probs}")
        if abs(math.fsum(probs) - 1.0) > 1e-15:
            raise ArgumentError(f"step probabilities sum to {math.fsum(probs)!r}, expected 1")
        if len({v.split for v in support}) != 1:
            raise ArgumentError("step vectors disagree on the lattice split")

    @classmethod
    def from_dict(cls, table: Dict[Sequence[int], float], d1: int = 0) -> "StepDistribution":
        items = sorted((tuple(int(c) for c in k), p) for k, p in table.items())
        return cls(tuple(LatticeVector(k, d1) for k, _ in items), tuple(p for _, p in items))

    @property
    def split(self) -> Tuple[int, int]:
        return self.support[0].split

    @property
    def dim(self) -> int:
        return self.support[0].dim

    def vectors(self) -> np.ndarray:
        return np.array([v.coords for v in self.support], dtype=np.int64)

    def mean(self) -> np.ndarray:
        return self.vectors().T @ np.array(self.probs)

    def covariance(self) -> np.ndarray:
        vec = self.vectors().astype(float)
        p = np.array(self.probs)
        mu = vec.T @ p
        centered = vec - mu
        return (centered * p[:, None]).T @ centered

    def characteristic(self, theta: Sequence[float]) -> complex:
        """E exp(i <theta, step>)."""
        return complex(np.sum(np.array(self.probs) * np.exp(1j * (self.vectors() @ np.asarray(theta, dtype=float)))))

    def period(self) -> int:
        """Period of the coordinate-sum residue of tau_n; 1 for aperiodic laws."""
        sums = [sum(v.coords) for v in self.support]
        g = 0
        for s in sums:
            g = math.gcd(g, s - sums[0])
        return max(g, 1)


def simple_walk(d: int = 1) -> StepDistribution:
    """Nearest-neighbour walk on Z^d: each of the 2d unit steps with probability 1/(2d)."""
    table = {}
    for axis in range(d):
        for sign in (1, -1):
            v = [0] * d
            v[axis] = sign
            table[tuple(v)] = 1.0 / (2 * d)
    return StepDistribution.from_dict(table)


def nearest_neighbour_walk() -> StepDistribution:
    return simple_walk(2)


def lazy_walk() -> StepDistribution:
    return StepDistribution.from_dict({(-1,): 0.25, (0,): 0.5, (1,): 0.25})


def drift_walk(drift: int = 1) -> StepDistribution:
    """drift plus lazy noise: (1/4, 1/2, 1/4) on drift-1, drift, drift+1."""
    return StepDistribution.from_dict({(drift - 1,): 0.25, (drift,): 0.5, (drift + 1,): 0.25})


def deterministic_walk(step: Sequence[int], d1: int = 0) -> StepDistribution:
    return StepDistribution.from_dict({tuple(step): 1.0}, d1)


@dataclass(frozen=True)
class SymbolStream:
    key: int
    position: int = 0


@lru_cache(maxsize=4096)
def _symbol_block(key: int, block: int, probs: Tuple[float, ...]) -> np.ndarray:
    rng = np.random.default_rng([key, block])
    return rng.choice(len(probs), size=BLOCK, p=np.array(probs))


class RandomWalkSystem(CocycleSystem):
    """Shift on an i.i.d. symbol stream with tau = step vector of the current symbol."""

    def __init__(self, steps: StepDistribution, seed: int, period: Optional[int] = None, name: str = "srw"):
        self.steps = steps
        self.seed = int(seed)
        self.d1, self.d2 = steps.split
        self.period = period if period is not None else steps.period()
        self.displacement_bound = max(v.norm_inf() for v in steps.support)
        self.name = name
        self._vectors = steps.vectors()

    def symbols(self, y: SymbolStream, count: int) -> np.ndarray:
        """Symbol indices at positions y.position .. y.position + count - 1."""
        if count <= 0:
            return np.zeros(0, dtype=np.int64)
        first, last = y.position // BLOCK, (y.position + count - 1) // BLOCK
        blocks = [_symbol_block(y.key, b, self.steps.probs) for b in range(first, last + 1)]
        joined = np.concatenate(blocks)
        start = y.position - first * BLOCK
        return joined[start:start + count]

    def sample_base(self, rng: np.random.Generator) -> SymbolStream:
        return SymbolStream(int(rng.integers(0, 2 ** 63)), 0)

    def origin(self) -> ExtendedState:
        return ExtendedState(SymbolStream(self.seed, 0), self.zero())

    def step(self, y: SymbolStream) -> Tuple[SymbolStream, LatticeVector]:
        symbol = int(self.symbols(y, 1)[0])
        return SymbolStream(y.key, y.position + 1), self.steps.support[symbol]

    def advance(self, y: SymbolStream, n: int) -> Tuple[SymbolStream, LatticeVector]:
        if n < 0:
            raise ArgumentError(f"iterate count must be nonnegative, got {n}")
        total = self._vectors[self.symbols(y, n)].sum(axis=0) if n else np.zeros(self.dim, dtype=np.int64)
        return SymbolStream(y.key, y.position + n), LatticeVector(tuple(int(c) for c in total), self.d1)

    def base_metric(self, y1: SymbolStream, y2: SymbolStream) -> float:
        """2^-k where k is the first position at which the two streams differ."""
        if y1 == y2:
            return 0.0
        a, b = self.symbols(y1, METRIC_DEPTH), self.symbols(y2, METRIC_DEPTH)
        differ = np.nonzero(a != b)[0]
        return 0.0 if differ.size == 0 else float(2.0 ** (-int(differ[0])))


def srw_system(steps: StepDistribution, seed: int, period: Optional[int] = None) -> RandomWalkSystem:
    return RandomWalkSystem(steps, seed, period)


@dataclass(frozen=True)
class PmfTable:
    """Probabilities on the box starting at ``lo``; entry [i] is cell lo + i."""
    lo: Tuple[int, ...]
    table: np.ndarray
    d1: int = 0

    def __getitem__(self, cell: Sequence[int]) -> float:
        index = tuple(int(c) - a for c, a in zip(cell, self.lo))
        if any(i < 0 or i >= s for i, s in zip(index, self.table.shape)):
            return 0.0
        return float(self.table[index])

    def items(self) -> Iterator[Tuple[Tuple[int, ...], float]]:
        for index in zip(*np.nonzero(self.table > 0)):
            yield tuple(int(i) + a for i, a in zip(index, self.lo)), float(self.table[index])

    def as_dict(self) -> Dict[Tuple[int, ...], float]:
        return dict(self.items())

    def total(self) -> float:
        return math.fsum(self.table.ravel().tolist())

    def support(self) -> List[Tuple[int, ...]]:
        return [cell for cell, _ in self.items()]


def exact_pmf(steps: StepDistribution, n: int) -> PmfTable:
    """
    Law of tau_n by n-fold convolution of the step law.

    Raises:
        ArgumentError: n negative
        ResourceError: n above the convolution bound or the table too large
    """
    if n < 0:
        raise ArgumentError(f"n must be nonnegative, got {n}")
    if n > MAX_CONVOLUTIONS:
        raise ResourceError(f"exact pmf limited to n <= {MAX_CONVOLUTIONS}, got {n}")
    vec = steps.vectors()
    d1 = steps.split[0]
    step_lo = vec.min(axis=0)
    step_shape = tuple(vec.max(axis=0) - step_lo + 1)
    out_shape = tuple(n * (s - 1) + 1 for s in step_shape)
    if int(np.prod(out_shape)) > MAX_TABLE_CELLS:
        raise ResourceError(f"pmf table of shape {out_shape} exceeds {MAX_TABLE_CELLS} cells")

    kernel = np.zeros(step_shape)
    for v, p in zip(vec, steps.probs):
        kernel[tuple(v - step_lo)] += p
    table = np.ones((1,) * steps.dim)
    for _ in range(n):
        table = convolve(table, kernel, method="direct")
    table = np.clip(table, 0.0, None)
    return PmfTable(tuple(int(n * a) for a in step_lo), table, d1)
