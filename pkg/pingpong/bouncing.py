"""
Bouncing ball: a particle in the potential U(x) = g x above a wall at x = h(t)
that moves periodically.

A hit at time t with incoming velocity u maps u to 2 h'(t) - u. For fast balls
the collision map is close to

    (t, v) -> (t + 2v/g, v + 2 h'(t + 2v/g))

which factors to the torus T x [0, g/2) by taking t mod 1 and v mod g/2.
"""
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from cocycle.lattice import LatticeVector
from cocycle.observables import GlobalObservable
from cocycle.system import CocycleSystem, ExtendedState
from core.errors import ArgumentError, DomainError, GlobmixError, StallError
from core.logging import logger
from core.parallel import ensemble_seed, run_ensemble
from .fermi_ulam import LadderLevel, chart_distance, deviation_summary
from .roots import expanding_root
from .walls import WallMotion

STALL_PERIODS = 10.0
WALL_TOLERANCE = 1e-12
JING_GRID = 4096


@dataclass(frozen=True)
class BallState:
    """Collision phase mod 1 and post-collision upward velocity."""
    phase: float
    v: float

    def __post_init__(self):
        if not 0.0 <= self.phase < 1.0:
            raise DomainError(f"phase must lie in [0, 1), got {self.phase}")
        if not self.v > 0.0:
            raise DomainError(f"post-collision velocity must be positive, got {self.v}")


@dataclass(frozen=True)
class BallEvent:
    time: float
    x: float
    v_in: float
    v_out: float
    wall_velocity: float


def _check_gravity(g: float):
    if not g > 0:
        raise ArgumentError(f"gravity must be positive, got {g}")


def bouncing_event(h: WallMotion, g: float, t: float, x: float, v: float) -> BallEvent:
    """
    Next wall hit of a ball at height x with velocity v at absolute time t.

    Raises:
        DomainError: ball below the wall
        StallError: no hit within the search horizon
    """
    _check_gravity(g)
    gap0 = x - h.value(t)
    if gap0 < -WALL_TOLERANCE:
        raise DomainError(f"ball at x={x} is below the wall h={h.value(t)} at t={t}")

    def gap(s):
        return x + v * s - 0.5 * g * s * s - h.value(t + s)

    def gap_rate(s):
        return v - g * s - h.deriv(t + s)

    fall = (v + math.sqrt(v * v + 2.0 * g * max(gap0, 0.0))) / g
    limit = STALL_PERIODS + 2.0 * fall
    first = max(1.25 * fall, 1.0 / 64)
    s = expanding_root(gap, gap_rate, min(first, limit), limit, h.break_offsets(t, limit))
    if s is None:
        raise StallError(f"ball from t={t}, x={x}, v={v} never meets the wall within {limit:.3g}")
    w = h.deriv(t + s)
    u = v - g * s
    return BallEvent(t + s, h.value(t + s), u, 2.0 * w - u, w)


def bouncing_map(h: WallMotion, g: float, state: BallState) -> BallState:
    """
    Exact collision map in (phase, v).

    Raises:
        DomainError: the ball does not leave the wall, or leaves it moving down
    """
    if state.v <= h.deriv(state.phase):
        raise DomainError(f"velocity {state.v} does not leave the wall moving at {h.deriv(state.phase)}")
    event = bouncing_event(h, g, state.phase, h.value(state.phase), state.v)
    return BallState(event.time % 1.0, event.v_out)


def bouncing_limit_map(h: WallMotion, g: float, t: float, v: float) -> Tuple[float, float]:
    """(t, v) -> (t + 2v/g mod 1, v + 2 h'(t + 2v/g))."""
    _check_gravity(g)
    if not v > 0:
        raise DomainError(f"velocity must be positive, got {v}")
    t_next = t + 2.0 * v / g
    return t_next % 1.0, v + 2.0 * h.deriv(t_next)


def ball_quotient(g: float, t: float, v: float) -> Tuple[float, float]:
    return t % 1.0, v % (g / 2.0)


def bouncing_factor_map(h: WallMotion, g: float, t: float, v: float) -> Tuple[float, float]:
    """Induced map on T x [0, g/2)."""
    _check_gravity(g)
    t_next = t + 2.0 * v / g
    return ball_quotient(g, t_next, v + 2.0 * h.deriv(t_next))


@dataclass(frozen=True)
class JingVerdict:
    clause: Optional[str]
    min_accel: float
    max_gap: float
    verdict: str
    # None when g was not given
    a_exceeds_g: Optional[bool] = None

    @property
    def holds(self) -> bool:
        return self.clause is not None and self.a_exceeds_g is True


def check_jing_condition(h: WallMotion, a: float, eps: float, g: Optional[float] = None) -> JingVerdict:
    """
    Which uniform clause holds on (0, 1): h'' > 0 ("convex"), or |h'' + a| <= eps
    ("near_free_fall"). Checked on a midpoint grid.

    The condition also needs a > g. Without ``g`` a matching clause is reported
    with verdict "inconclusive" and ``holds`` stays false.
    """
    if eps < 0:
        raise ArgumentError(f"eps must be nonnegative, got {eps}")
    if g is not None and not a > g:
        raise ArgumentError(f"a={a} must exceed g={g}")
    s = (np.arange(JING_GRID) + 0.5) / JING_GRID
    accel = h.second(s)
    min_accel = float(accel.min())
    max_gap = float(np.abs(accel + a).max())
    above = None if g is None else True
    if min_accel > 0:
        clause, verdict = "convex", "clause one"
    elif max_gap <= eps:
        clause, verdict = "near_free_fall", "clause two"
    else:
        return JingVerdict(None, min_accel, max_gap, "not covered", above)
    return JingVerdict(clause, min_accel, max_gap, verdict if above else "inconclusive", above)


@dataclass(frozen=True)
class BallFlowPoint:
    """Flow point with the integer parts of gap and velocity stripped off."""
    t: float
    gap: float
    v: float


def bouncing_flow(h: WallMotion, g: float, t: float, x: float, v: float, T: float) -> Tuple[float, float, float]:
    """
    Run the ball for time T.

    Returns:
        (t + T, x, v) at the end time
    """
    if T < 0:
        raise ArgumentError(f"flow time must be nonnegative, got {T}")
    end = t + T
    while True:
        event = bouncing_event(h, g, t, x, v)
        if event.time > end:
            s = end - t
            return end, x + v * s - 0.5 * g * s * s, v - g * s
        t, x, v = event.time, event.x, event.v_out


class BouncingFlowSystem(CocycleSystem):
    """
    Time-T map of the ball flow on (t mod 1, gap, v) with cells (floor(gap), floor(v)).

    Lebesgue measure in (t, gap, v) is invariant; each cell has unit mass.
    """

    d1 = 1
    d2 = 1
    is_skew_product = False
    finite_horizon = True

    def __init__(self, h: WallMotion, g: float = 1.0, T: float = 0.5):
        _check_gravity(g)
        if T <= 0:
            raise ArgumentError(f"flow time must be positive, got {T}")
        self.h = h
        self.g = g
        self.T = T
        self.name = f"bouncing[{h.name},g={g},T={T}]"

    def absolute(self, x: ExtendedState) -> Tuple[float, float, float]:
        t = x.base.t
        gap = x.cell[0] + x.base.gap
        return t, self.h.value(t) + gap, x.cell[1] + x.base.v

    def from_absolute(self, t: float, x: float, v: float) -> ExtendedState:
        phase = t % 1.0
        gap = max(x - self.h.value(phase), 0.0)
        cell = LatticeVector((int(math.floor(gap)), int(math.floor(v))), 1)
        return ExtendedState(BallFlowPoint(phase, gap - cell[0], v - cell[1]), cell)

    def sample_base(self, rng: np.random.Generator) -> BallFlowPoint:
        return BallFlowPoint(*(float(u) for u in rng.random(3)))

    def step(self, y: BallFlowPoint):
        nxt = self.extended_step(ExtendedState(y, self.zero()))
        return nxt.base, nxt.cell

    def extended_step(self, x: ExtendedState) -> ExtendedState:
        return self.from_absolute(*bouncing_flow(self.h, self.g, *self.absolute(x), self.T))

    def origin(self) -> ExtendedState:
        return ExtendedState(BallFlowPoint(0.0, 0.5, 0.5), self.zero())


class _BallSample:
    def __init__(self, h: WallMotion, g: float, level: float):
        self.h = h
        self.g = g
        self.level = level

    def __call__(self, index: int, rng: np.random.Generator) -> float:
        state = BallState(float(rng.random()), float(rng.uniform(self.level, 2.0 * self.level)))
        try:
            nxt = bouncing_map(self.h, self.g, state)
        except GlobmixError:
            return math.nan
        expected = bouncing_limit_map(self.h, self.g, state.phase, state.v)
        return chart_distance((nxt.phase, nxt.v), expected)


def bouncing_approximation_ladder(
    h: WallMotion,
    g: float,
    levels: Sequence[float],
    N: int,
    rng: np.random.Generator,
    workers: Optional[int] = None,
) -> List[LadderLevel]:
    """Exact collision map against the explicit map, v uniform in [V0, 2 V0] per level."""
    _check_gravity(g)
    if N < 1:
        raise ArgumentError(f"sample count must be positive, got {N}")
    if not levels or any(level <= 0 for level in levels):
        raise ArgumentError(f"levels must be positive, got {list(levels)}")
    rows = []
    for level in levels:
        deviations = run_ensemble(_BallSample(h, g, float(level)), N, ensemble_seed(rng), workers)
        row = deviation_summary(float(level), deviations)
        logger.info("bounce_approximation_level", wall=h.name, g=g, **row.model_dump())
        rows.append(row)
    return rows


class _NearInteger:
    def __init__(self, width: float, height: float):
        self.width = width
        self.height = height

    def __call__(self, x: ExtendedState) -> float:
        v = x.cell[1] + x.base.v
        distance = abs(v - round(v))
        return self.height * max(0.0, 1.0 - distance / self.width)


def near_integer_velocity_global(width: float = 0.01, height: float = 15.0) -> GlobalObservable:
    """
    1-periodic tent in the velocity, supported on d(v, Z) <= width; the average is
    height * width.

    Free flight for time T lowers v by gT, so Phi * Phi(G^T) vanishes on flights
    without a bounce as soon as d(gT, Z) > 2 * width.
    """
    if not 0.0 < width < 0.5:
        raise ArgumentError(f"width must lie in (0, 1/2), got {width}")
    return GlobalObservable(
        evaluator=_NearInteger(width, height),
        bound=height,
        average=height * width,
        kind="G_U",
        modulus=lambda d: min(height, height * d / width),
        name=f"tent(v,{width})",
    )
