"""
First crossing of a gap function, used by both wall models.

The search window is cut at the profile breaks and at a regular grid, each
grid interval is split once more where the derivative changes sign, and the
resulting monotone pieces are bracketed with brentq.
"""
import math
from typing import Callable, Iterable, Iterator, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from core.config import settings
from core.errors import ArgumentError

ROOT_XTOL = 1e-12
EDGE = 1e-9


def _monotone_pieces(df: Callable[[float], float], a: float, b: float) -> Iterator[Tuple[float, float]]:
    # one-sided derivatives: a break may sit at either end
    lo, hi = a + EDGE * (b - a), b - EDGE * (b - a)
    da, db = df(lo), df(hi)
    if da * db < 0:
        c = brentq(df, lo, hi, xtol=ROOT_XTOL)
        yield a, c
        yield c, b
    else:
        yield a, b


def first_root(
    f: Callable[[float], float],
    df: Callable[[float], float],
    stop: float,
    breaks: Iterable[float] = (),
    grid_per_unit: Optional[int] = None,
    start: float = 0.0,
) -> Optional[float]:
    """
    First s in (start, stop] at which f drops from positive to nonpositive.

    A gap that is closed at s = start (the particle sits on the wall it just
    left) is ignored until it has opened. Returns None when no crossing is found.
    """
    if stop <= start:
        raise ArgumentError(f"search window [{start}, {stop}] is empty")
    per_unit = grid_per_unit or settings.ROOT_GRID_PER_UNIT
    n = max(1, int(math.ceil((stop - start) * per_unit)))
    cuts = [b for b in breaks if start < b < stop]
    grid = np.union1d(np.linspace(start, stop, n + 1), cuts)

    f_left = None
    for a, b in zip(grid[:-1], grid[1:]):
        for lo, hi in _monotone_pieces(df, float(a), float(b)):
            fa = f(lo) if f_left is None else f_left
            fb = f(hi)
            f_left = fb
            if fb > 0:
                continue
            if fa > 0:
                return brentq(f, lo, hi, xtol=ROOT_XTOL)
    return None


def expanding_root(
    f: Callable[[float], float],
    df: Callable[[float], float],
    first_window: float,
    limit: float,
    breaks: Iterable[float] = (),
    grid_per_unit: Optional[int] = None,
) -> Optional[float]:
    """first_root over windows that double from ``first_window`` until ``limit``."""
    breaks = list(breaks)
    start, stop = 0.0, min(first_window, limit)
    while True:
        root = first_root(f, df, stop, breaks, grid_per_unit, start=start)
        if root is not None or stop >= limit:
            return root
        start, stop = stop, min(2.0 * stop, limit)
