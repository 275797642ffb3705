"""
One-periodic wall motions.

A profile is given on a partition 0 = b_0 < b_1 < ... < b_k = 1 of the unit
interval, one smooth piece per cell, and extended periodically. Pieces are numpy
polynomials in absolute time t (so the JSON grammar is a coefficient list in
ascending powers of t per piece) or single harmonics. Evaluation at a break
point uses the piece on its right, so ``deriv(0)`` is the slope at 1+.

JSON grammar::

    {"name": "shallow", "breaks": [0.0, 1.0], "pieces": [[1.0, -1.0, 1.0]]}
"""
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial

from core.errors import ConfigurationError

CONTINUITY_TOLERANCE = 1e-12


class Harmonic:
    """c + a cos(2 pi k t) + b sin(2 pi k t), closed under differentiation."""

    def __init__(self, a: float = 0.0, b: float = 0.0, c: float = 0.0, k: int = 1):
        self.a, self.b, self.c, self.k = float(a), float(b), float(c), int(k)

    def __call__(self, t):
        w = 2 * math.pi * self.k
        return self.c + self.a * np.cos(w * t) + self.b * np.sin(w * t)

    def deriv(self, m: int = 1) -> "Harmonic":
        out = self
        w = 2 * math.pi * self.k
        for _ in range(m):
            out = Harmonic(out.b * w, -out.a * w, 0.0, out.k)
        return out


Piece = Union[Polynomial, Harmonic]


@dataclass(frozen=True)
class WallMotion:
    breaks: Tuple[float, ...]
    pieces: Tuple[Piece, ...]
    name: str = "wall"
    _d1: Tuple[Piece, ...] = field(init=False, repr=False, compare=False)
    _d2: Tuple[Piece, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        breaks = tuple(float(b) for b in self.breaks)
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if breaks[0] != 0.0 or breaks[-1] != 1.0 or any(a >= b for a, b in zip(breaks, breaks[1:])):
            raise ConfigurationError(f"breaks must increase from 0 to 1, got {list(breaks)}")
        if len(self.pieces) != len(breaks) - 1:
            raise ConfigurationError(f"{len(breaks) - 1} cells need as many pieces, got {len(self.pieces)}")
        object.__setattr__(self, "_d1", tuple(p.deriv() for p in self.pieces))
        object.__setattr__(self, "_d2", tuple(p.deriv(2) for p in self.pieces))
        for j, b in enumerate(breaks[1:-1], start=1):
            gap = float(self.pieces[j - 1](b) - self.pieces[j](b))
            if abs(gap) > CONTINUITY_TOLERANCE:
                raise ConfigurationError(f"profile jumps by {gap:.3g} at t={b}")
        gap = float(self.pieces[-1](1.0) - self.pieces[0](0.0))
        if abs(gap) > CONTINUITY_TOLERANCE:
            raise ConfigurationError(f"profile is not periodic: value at 1- and 0+ differ by {gap:.3g}")

    # construction

    @classmethod
    def polynomial(cls, coefficients: Sequence[float], name: str = "wall") -> "WallMotion":
        return cls((0.0, 1.0), (Polynomial(list(coefficients)),), name)

    @classmethod
    def piecewise(cls, breaks: Sequence[float], pieces: Sequence[Sequence[float]], name: str = "wall") -> "WallMotion":
        return cls(tuple(breaks), tuple(Polynomial(list(c)) for c in pieces), name)

    @classmethod
    def constant(cls, value: float) -> "WallMotion":
        return cls.polynomial([value], name=f"constant({value})")

    @classmethod
    def harmonic(cls, a: float = 0.0, b: float = 0.0, c: float = 0.0, k: int = 1, name: str = "harmonic") -> "WallMotion":
        return cls((0.0, 1.0), (Harmonic(a, b, c, k),), name)

    @classmethod
    def from_dict(cls, data: dict) -> "WallMotion":
        if "harmonic" in data:
            return cls.harmonic(**data["harmonic"], name=data.get("name", "harmonic"))
        try:
            return cls.piecewise(data["breaks"], data["pieces"], data.get("name", "wall"))
        except KeyError as exc:
            raise ConfigurationError(f"wall profile needs 'breaks' and 'pieces', missing {exc}") from exc

    @classmethod
    def from_json(cls, source: Union[str, Path]) -> "WallMotion":
        text = Path(source).read_text() if isinstance(source, Path) or str(source).endswith(".json") else str(source)
        return cls.from_dict(json.loads(text))

    def scaled(self, c: float) -> "WallMotion":
        scaled = []
        for p in self.pieces:
            if isinstance(p, Polynomial):
                scaled.append(Polynomial(c * p.coef))
            else:
                scaled.append(Harmonic(c * p.a, c * p.b, c * p.c, p.k))
        return WallMotion(self.breaks, tuple(scaled), f"{c}*{self.name}")

    # evaluation

    def _index(self, s: np.ndarray) -> np.ndarray:
        return np.clip(np.searchsorted(self.breaks, s, side="right") - 1, 0, len(self.pieces) - 1)

    def _eval(self, pieces: Sequence[Piece], t):
        s = np.mod(np.asarray(t, dtype=float), 1.0)
        idx = self._index(s)
        if s.ndim == 0:
            return float(pieces[int(idx)](float(s)))
        out = np.empty_like(s)
        for j, p in enumerate(pieces):
            mask = idx == j
            if mask.any():
                out[mask] = p(s[mask])
        return out

    def value(self, t):
        return self._eval(self.pieces, t)

    def deriv(self, t):
        return self._eval(self._d1, t)

    def second(self, t):
        return self._eval(self._d2, t)

    __call__ = value

    @property
    def slope_right(self) -> float:
        """Slope at 1+ (equivalently 0+)."""
        return float(self._d1[0](0.0))

    @property
    def slope_left(self) -> float:
        """Slope at 1-."""
        return float(self._d1[-1](1.0))

    @property
    def sigma(self) -> float:
        return self.slope_right - self.slope_left

    def break_offsets(self, t: float, span: float) -> List[float]:
        """Offsets s in (0, span) at which t + s crosses a break of the profile."""
        out = []
        for k in range(int(math.floor(t)), int(math.ceil(t + span)) + 1):
            for b in self.breaks[:-1]:
                s = k + b - t
                if 0.0 < s < span:
                    out.append(s)
        return sorted(out)

    def minimum(self, grid: int = 20001) -> float:
        return float(np.min(self.value(np.linspace(0.0, 1.0, grid, endpoint=False))))


def default_corner_profile() -> WallMotion:
    """l(t) = 1 + 3 t(1-t)(1-2t)^2: corner at the integers with sigma = 6, Delta close to 5 (hyperbolic)."""
    return WallMotion.polynomial([1.0, 3.0, -15.0, 24.0, -12.0], name="corner")


def shallow_corner_profile() -> WallMotion:
    """l(t) = 1 - t(1 - t): sigma = -2, Delta < 0."""
    return WallMotion.polynomial([1.0, -1.0, 1.0], name="shallow")


def parabolic_profile(beta: float) -> WallMotion:
    """l(t) = 1 + beta t(1 - t), sigma = 2 beta."""
    return WallMotion.polynomial([1.0, beta, -beta], name=f"parabolic({beta})")


def triangle_profile(base: float = 1.0, slope: float = 0.2) -> WallMotion:
    """Tent-shaped profile with constant slopes -slope then +slope; value base at t = 1/2."""
    top = base + slope / 2
    return WallMotion.piecewise(
        (0.0, 0.5, 1.0),
        ([top, -slope], [base - slope / 2, slope]),
        name=f"triangle({base},{slope})",
    )
