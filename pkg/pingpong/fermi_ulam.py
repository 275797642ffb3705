"""
Fermi-Ulam pingpong: a particle between a fixed wall at x = 0 and a wall at
x = -l(t) that moves periodically.

The wall velocity is w = -l'(t). A hit on the moving wall maps v to 2w - v, a
hit on the fixed wall maps v to -v. The induced map stops the particle at the
first moving-wall hit after the next integer time; at high energy it is close
to the explicit limit map

    (tau, I) -> (tau - I, I + Delta (tau - I))    mod 1 in the first coordinate

with Delta = l(0) sigma int_0^1 l^-2 and sigma the jump of l' at the integers.
"""
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel
from scipy.integrate import quad

from cocycle.lattice import CubeSpec, LatticeVector
from cocycle.system import CocycleSystem, ExtendedState
from core.errors import ArgumentError, ConfigurationError, DomainError, GlobmixError, StallError, TrapError
from core.logging import logger
from core.parallel import ensemble_seed, run_ensemble
from oracles.distances import in_measure_distance
from .roots import expanding_root
from .walls import WallMotion

FIXED = "fixed"
MOVING = "moving"
STALL_PERIODS = 10.0
EVENT_BUDGET = 1_000_000
DELTA_EPSREL = 1e-10
BOUNDARY_TOLERANCE = 1e-12
CHART_ITERATIONS = 200
CHART_TOLERANCE = 1e-14


@dataclass(frozen=True)
class PingpongState:
    """Collision phase mod 1 and post-collision velocity at a moving-wall hit."""
    phase: float
    I: float

    def __post_init__(self):
        if not 0.0 <= self.phase < 1.0:
            raise DomainError(f"phase must lie in [0, 1), got {self.phase}")
        if not self.I > 0.0:
            raise DomainError(f"post-collision velocity must be positive, got {self.I}")


@dataclass(frozen=True)
class WallEvent:
    time: float
    wall: str
    x: float
    v_in: float
    v_out: float
    wall_velocity: float = 0.0


def pingpong_event(wall: WallMotion, t: float, x: float, v: float) -> WallEvent:
    """
    Next wall collision of a particle at x with velocity v at absolute time t.

    Raises:
        DomainError: particle outside the walls
        StallError: no collision within ten periods
    """
    ell = wall.value(t)
    if x > 0.0 or x < -ell - BOUNDARY_TOLERANCE:
        raise DomainError(f"particle at x={x} is outside the walls [{-ell}, 0] at t={t}")
    if x == 0.0 and v >= 0.0:
        raise DomainError(f"particle on the fixed wall moves outward with v={v}")

    fixed_at = -x / v if v > 0 else math.inf

    def gap(s):
        return x + v * s + wall.value(t + s)

    def gap_rate(s):
        return v + wall.deriv(t + s)

    limit = min(fixed_at, STALL_PERIODS)
    first = fixed_at if v > 0 else max(2.0 * (x + ell) / max(-v, 1e-12), 1.0 / 64)
    s = expanding_root(gap, gap_rate, min(first, limit), limit, wall.break_offsets(t, limit))
    if s is not None:
        w = -wall.deriv(t + s)
        return WallEvent(t + s, MOVING, -wall.value(t + s), v, 2.0 * w - v, w)
    if fixed_at <= STALL_PERIODS:
        return WallEvent(t + fixed_at, FIXED, 0.0, v, -v)
    raise StallError(f"no collision within {STALL_PERIODS} periods from t={t}, x={x}, v={v}")


def pingpong_map(
    wall: WallMotion, state: PingpongState, event_budget: int = EVENT_BUDGET
) -> Tuple[PingpongState, int]:
    """
    Run until the first moving-wall hit after the next integer time.

    Returns:
        (new state, floor(I') - floor(I))

    Raises:
        DomainError: the particle does not separate from the wall
        TrapError: event budget exhausted
    """
    t = state.phase
    if state.I + wall.deriv(t) <= 0.0:
        raise DomainError(f"velocity {state.I} does not leave the wall moving at {-wall.deriv(t)}")
    x, v = -wall.value(t), state.I
    horizon = 1.0
    for _ in range(event_budget):
        event = pingpong_event(wall, t, x, v)
        t, x, v = event.time, event.x, event.v_out
        if event.wall == MOVING and t >= horizon:
            nxt = PingpongState(t % 1.0, v)
            return nxt, int(math.floor(nxt.I)) - int(math.floor(state.I))
    logger.warning("pingpong_trap", wall=wall.name, phase=state.phase, I=state.I, budget=event_budget)
    raise TrapError(f"no moving-wall hit after t=1 within {event_budget} events")


def pingpong_trajectory(wall: WallMotion, t: float, x: float, v: float, n: int) -> List[WallEvent]:
    if n < 0:
        raise ArgumentError(f"event count must be nonnegative, got {n}")
    events = []
    for _ in range(n):
        event = pingpong_event(wall, t, x, v)
        events.append(event)
        t, x, v = event.time, event.x, event.v_out
    return events


def limit_map(delta: float, tau: float, I: float, centered: bool = False) -> Tuple[float, float]:
    """
    (tau, I) -> (frac(tau - I), I + delta * kick) with kick = tau' or tau' - 1/2.

    The centered kick is the one the pingpong chart reproduces; both forms are
    conjugate by a shift in I.
    """
    tau_next = (tau - I) % 1.0
    kick = tau_next - 0.5 if centered else tau_next
    return tau_next, I + delta * kick


def inverse_square_integral(wall: WallMotion) -> float:
    """int_0^1 l(s)^-2 ds by adaptive quadrature, split at the profile breaks."""
    if wall.minimum() <= 0.0:
        raise DomainError(f"profile {wall.name} is not strictly positive (min {wall.minimum():.3g})")
    inner = list(wall.breaks[1:-1]) or None
    value, _ = quad(lambda s: wall.value(s) ** -2, 0.0, 1.0, points=inner, epsrel=DELTA_EPSREL, limit=200)
    return float(value)


def compute_delta(wall: WallMotion) -> float:
    """
    Delta = l(0) sigma int_0^1 l^-2.

    Raises:
        DomainError: l is not strictly positive
    """
    return wall.value(0.0) * wall.sigma * inverse_square_integral(wall)


def riemann_delta(wall: WallMotion, points: int = 1_000_000) -> float:
    """Midpoint-rule Delta, the cross-check for ``compute_delta``."""
    s = (np.arange(points) + 0.5) / points
    return wall.value(0.0) * wall.sigma * float(np.mean(wall.value(s) ** -2.0))


@dataclass(frozen=True)
class HyperbolicityVerdict:
    delta: float
    hyperbolic: bool
    degenerate: bool
    boundary: bool
    verdict: str


def hyperbolicity_check(delta: float) -> HyperbolicityVerdict:
    """Piecewise hyperbolic when delta lies outside (0, 4); 0 and 4 are flagged."""
    degenerate = abs(delta) <= BOUNDARY_TOLERANCE
    at_four = abs(delta - 4.0) <= BOUNDARY_TOLERANCE
    hyperbolic = delta <= BOUNDARY_TOLERANCE or delta >= 4.0 - BOUNDARY_TOLERANCE
    if at_four:
        verdict = "inconclusive"
    elif degenerate:
        verdict = "degenerate"
    else:
        verdict = "hyperbolic" if hyperbolic else "not covered"
    return HyperbolicityVerdict(delta, hyperbolic, degenerate, degenerate or at_four, verdict)


def _straddle(wall: WallMotion, t1: float, u1: float) -> float:
    """Time since the previous moving-wall hit, for a hit at t1 leaving with u1."""
    u_pre = u1 + 2.0 * wall.deriv(t1)
    if u_pre <= 0.0:
        raise DomainError(f"velocity {u1} at t={t1} did not arrive from the fixed wall")
    ell1 = wall.value(t1)
    tk = t1 - 2.0 * ell1 / u_pre
    for _ in range(CHART_ITERATIONS):
        nxt = t1 - (ell1 + wall.value(tk)) / u_pre
        if abs(nxt - tk) < CHART_TOLERANCE:
            tk = nxt
            break
        tk = nxt
    return t1 - tk


def to_limit_chart(wall: WallMotion, state: PingpongState, L2: Optional[float] = None) -> Tuple[float, float]:
    """
    Limit coordinates (theta, M) of a state produced by ``pingpong_map``.

    theta is the position of the integer time inside the round trip that
    straddles it; M = (u l + l l') int l^-2 / 2 is the adiabatic invariant in
    the units of the limit map.
    """
    L2 = L2 if L2 is not None else inverse_square_integral(wall)
    t1, u1 = state.phase, state.I
    ell = wall.value(t1)
    theta = t1 / _straddle(wall, t1, u1)
    M = (u1 * ell + ell * wall.deriv(t1)) * L2 / 2.0
    return theta % 1.0, M


def from_limit_chart(wall: WallMotion, theta: float, M: float, L2: Optional[float] = None) -> PingpongState:
    """
    Inverse of ``to_limit_chart`` by fixed-point iteration on the hit time.

    Raises:
        DomainError: (theta, M) does not correspond to a separating state
    """
    if not 0.0 <= theta < 1.0:
        raise DomainError(f"theta must lie in [0, 1), got {theta}")
    L2 = L2 if L2 is not None else inverse_square_integral(wall)
    J = 2.0 * M / L2
    t1 = 0.0
    for _ in range(CHART_ITERATIONS):
        u1 = J / wall.value(t1) - wall.deriv(t1)
        if u1 <= 0.0:
            raise DomainError(f"M={M} is too small for a state leaving the wall")
        nxt = theta * _straddle(wall, t1, u1)
        if abs(nxt - t1) < CHART_TOLERANCE:
            t1 = nxt
            break
        t1 = nxt
    u1 = J / wall.value(t1) - wall.deriv(t1)
    return PingpongState(t1, u1)


def chart_distance(a: Tuple[float, float], b: Tuple[float, float]) -> float:
    """max of the circular phase gap and the |M| gap."""
    d_theta = abs(a[0] - b[0]) % 1.0
    return max(min(d_theta, 1.0 - d_theta), abs(a[1] - b[1]))


class LadderLevel(BaseModel):
    level: float
    samples: int
    failed: int
    in_measure: float
    max_deviation: float
    excluded_fraction: float


class _ApproxSample:
    """Deviation between the pingpong step and the centered limit map at one chart point."""

    def __init__(self, wall: WallMotion, level: float, delta: float, L2: float):
        self.wall = wall
        self.level = level
        self.delta = delta
        self.L2 = L2

    def __call__(self, index: int, rng: np.random.Generator) -> float:
        theta = float(rng.random())
        M = float(rng.uniform(self.level, 2.0 * self.level))
        try:
            state = from_limit_chart(self.wall, theta, M, self.L2)
            nxt, _ = pingpong_map(self.wall, state)
            got = to_limit_chart(self.wall, nxt, self.L2)
        except GlobmixError:
            return math.nan
        return chart_distance(got, limit_map(self.delta, theta, M, centered=True))


def deviation_summary(level: float, deviations: Sequence[float]) -> LadderLevel:
    d = np.asarray(deviations, dtype=float)
    ok = d[np.isfinite(d)]
    if ok.size == 0:
        raise TrapError(f"every sample at level {level} failed")
    eps = in_measure_distance(ok)
    return LadderLevel(
        level=level,
        samples=int(d.size),
        failed=int(d.size - ok.size),
        in_measure=eps,
        max_deviation=float(ok.max()),
        excluded_fraction=float(np.mean(ok > eps)),
    )


def approximation_ladder(
    wall: WallMotion,
    levels: Sequence[float],
    N: int,
    rng: np.random.Generator,
    workers: Optional[int] = None,
) -> List[LadderLevel]:
    """
    Per level I0, compare one pingpong step with the limit map at N chart points
    with theta uniform and M uniform in [I0, 2 I0].
    """
    if N < 1:
        raise ArgumentError(f"sample count must be positive, got {N}")
    if not levels or any(level <= 0 for level in levels):
        raise ArgumentError(f"levels must be positive, got {list(levels)}")
    L2 = inverse_square_integral(wall)
    delta = wall.value(0.0) * wall.sigma * L2
    rows = []
    for level in levels:
        seed = ensemble_seed(rng)
        deviations = run_ensemble(_ApproxSample(wall, float(level), delta, L2), N, seed, workers)
        row = deviation_summary(float(level), deviations)
        logger.info("approximation_level", wall=wall.name, **row.model_dump())
        rows.append(row)
    return rows


class PingpongSystem(CocycleSystem):
    """
    Pingpong induced map as a Z_+ extension: the cell is the velocity band floor(I).

    The state determines its band, so ``extended_step`` recomputes the cell.
    """

    d1 = 1
    d2 = 0
    is_skew_product = False
    finite_horizon = True

    def __init__(self, wall: WallMotion, base_band: int = 50):
        self.wall = wall
        self.min_band = int(math.ceil(np.max(np.abs(wall.deriv(np.linspace(0.0, 1.0, 4097))))))
        if base_band < self.min_band:
            raise ConfigurationError(f"band {base_band} is slower than the wall (needs >= {self.min_band})")
        self.base_band = base_band
        self.name = f"pingpong[{wall.name}]"

    def _in_band(self, band: int, rng: np.random.Generator) -> PingpongState:
        if band < self.min_band:
            raise ConfigurationError(f"band {band} is slower than the wall (needs >= {self.min_band})")
        lo = max(float(band), 1e-9)
        return PingpongState(float(rng.random()), float(rng.uniform(lo, band + 1.0)))

    def sample_base(self, rng: np.random.Generator) -> PingpongState:
        return self._in_band(self.base_band, rng)

    def sample_from_cell_weight(self, cell: LatticeVector, rng: np.random.Generator) -> ExtendedState:
        return ExtendedState(self._in_band(cell[0], rng), cell)

    def sample_in_cube(self, cube: CubeSpec, rng: np.random.Generator) -> ExtendedState:
        return self.sample_from_cell_weight(cube.sample_cell(rng), rng)

    def step(self, y: PingpongState):
        nxt, jump = pingpong_map(self.wall, y)
        return nxt, LatticeVector((jump,), 1)

    def extended_step(self, x: ExtendedState) -> ExtendedState:
        nxt, _ = pingpong_map(self.wall, x.base)
        return ExtendedState(nxt, LatticeVector((int(math.floor(nxt.I)),), 1))

    def base_metric(self, y1: PingpongState, y2: PingpongState) -> float:
        d = abs(y1.phase - y2.phase)
        return max(min(d, 1.0 - d), abs(y1.I - y2.I))

    def origin(self) -> ExtendedState:
        return ExtendedState(PingpongState(0.0, self.base_band + 0.5), LatticeVector((self.base_band,), 1))
