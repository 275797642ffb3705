"""
Collision map, invariant measure and flow for Sinai billiards.
"""
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from cocycle.lattice import LatticeVector
from cocycle.system import ExtendedState
from core.errors import ArgumentError, HorizonViolationError
from core.logging import logger
from .fields import FieldSpec, next_collision_field
from .flight import CollisionEvent, next_collision_free, transport_free
from .geometry import BoundaryCoord, ScattererConfig

CORRIDOR_DIRECTIONS = ((1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (1, 2), (2, -1), (1, -2))
CORRIDOR_OFFSETS = 64


def collision_event(config: ScattererConfig, field: FieldSpec, state: BoundaryCoord) -> CollisionEvent:
    """Next impact from a boundary point, with tau filled in."""
    q, u = config.phase_point(state)
    if field.variant == "none":
        event = next_collision_free(config, q, u, check=False)
    else:
        flight = next_collision_field(config, q, u * field.speed_at(q), field)
        event = flight.event
    return replace(event, tau=event.coord.cell - state.cell)


def collision_map(
    config: ScattererConfig, field: FieldSpec, state: BoundaryCoord
) -> Tuple[BoundaryCoord, LatticeVector]:
    """
    One step of the billiard map: fly from ``state`` to the next scatterer and
    reflect.

    Returns:
        (next boundary coordinate, cell displacement)

    Raises:
        TrapError: a field flight spent its step budget
        HorizonViolationError: a free flight exceeded the horizon guard
    """
    event = collision_event(config, field, state)
    return event.coord, event.tau


def collision_trajectory(
    config: ScattererConfig, field: FieldSpec, state: BoundaryCoord, n: int
) -> List[CollisionEvent]:
    if n < 0:
        raise ArgumentError(f"collision count must be nonnegative, got {n}")
    events = []
    for _ in range(n):
        event = collision_event(config, field, state)
        events.append(event)
        state = event.coord
    return events


def phi_from_uniform(u: float) -> float:
    """Inverse CDF of the cos(phi)/2 law on [-pi/2, pi/2]."""
    return math.asin(2.0 * u - 1.0)


def sample_nu(config: ScattererConfig, rng: np.random.Generator, cell: Optional[LatticeVector] = None) -> BoundaryCoord:
    """
    Draw from the invariant collision measure: disk chosen by perimeter, arclength
    uniform, density proportional to cos(phi).
    """
    if not config.disks:
        raise ArgumentError("configuration has no scatterers")
    perimeters = np.array([d.perimeter for d in config.disks])
    k = int(rng.choice(len(config.disks), p=perimeters / perimeters.sum()))
    r = float(rng.uniform(0.0, perimeters[k]))
    phi = phi_from_uniform(float(rng.random()))
    if cell is None:
        d1, d2 = config.split
        cell = LatticeVector.zero(d1, d2)
    return BoundaryCoord(cell, k, r, phi)


@dataclass(frozen=True)
class HorizonCheck:
    passed: bool
    max_flight: float
    declared_bound: float
    rays: int
    origin: Optional[Tuple[float, float]] = None
    direction: Optional[Tuple[float, float]] = None
    reason: str = ""


def _corridor_rays(config: ScattererConfig):
    for a, b in CORRIDOR_DIRECTIONS:
        norm = math.hypot(a, b)
        direction = np.array([a / norm, b / norm])
        normal = np.array([-direction[1], direction[0]])
        for k in range(CORRIDOR_OFFSETS):
            yield np.array([0.5, 0.5]) + (k / CORRIDOR_OFFSETS) * normal, direction


def verify_finite_horizon(config: ScattererConfig, N: int, rng: np.random.Generator) -> HorizonCheck:
    """
    Check that free flights stay below the declared bound: rational corridor
    directions are traced explicitly, then N rays are drawn from nu.
    """
    bound = config.free_path_bound
    if not config.disks:
        return HorizonCheck(False, math.inf, bound, 0, reason="configuration has no scatterers")

    longest, rays = 0.0, 0
    if config.geometry == "plane":
        for q, direction in _corridor_rays(config):
            if config.inside_disk(q) is not None:
                continue
            rays += 1
            try:
                event = next_collision_free(config, q, direction)
            except HorizonViolationError as exc:
                logger.info("open_corridor", config=config.name, origin=q.tolist(), direction=direction.tolist())
                return HorizonCheck(False, exc.distance, bound, rays, tuple(q), tuple(direction), "open corridor")
            longest = max(longest, event.flight_time)

    for _ in range(N):
        coord = sample_nu(config, rng)
        q, u = config.phase_point(coord)
        rays += 1
        try:
            event = next_collision_free(config, q, u, check=False)
        except HorizonViolationError as exc:
            return HorizonCheck(False, exc.distance, bound, rays, tuple(q), tuple(u), "flight beyond guard")
        longest = max(longest, event.flight_time)

    passed = longest <= bound
    logger.info("horizon_checked", config=config.name, rays=rays, max_flight=longest, bound=bound, passed=passed)
    return HorizonCheck(passed, longest, bound, rays, reason="" if passed else "flight above declared bound")


@dataclass(frozen=True)
class FlowPoint:
    """Flow phase point: position relative to its unit cell and velocity."""
    q: Tuple[float, float]
    v: Tuple[float, float]


def flow_state(config: ScattererConfig, q: Sequence[float], v: Sequence[float]) -> ExtendedState:
    anchor = config.anchor_of(q)
    rel = (float(q[0] - anchor[0]), float(q[1] - anchor[1]))
    return ExtendedState(FlowPoint(rel, (float(v[0]), float(v[1]))), config.to_lattice(anchor))


def absolute_position(config: ScattererConfig, x: ExtendedState) -> np.ndarray:
    i, j = config.from_lattice(x.cell)
    return np.array([i + x.base.q[0], j + x.base.q[1]])


def billiard_flow(config: ScattererConfig, field: FieldSpec, x: ExtendedState, t: float) -> ExtendedState:
    """Run the billiard flow for time t from a flow state."""
    if t < 0:
        raise ArgumentError(f"flow time must be nonnegative, got {t}")
    q = absolute_position(config, x)
    v = np.asarray(x.base.v, dtype=float)
    remaining = float(t)
    while remaining > 0:
        if field.variant == "none":
            event = next_collision_free(config, q, v, check=False)
            if event.flight_time > remaining + 1e-12:
                q, v = transport_free(config, q, v, remaining)
                break
            q, v = event.q, event.v_out
            remaining -= event.flight_time
        else:
            flight = next_collision_field(config, q, v, field, t_stop=remaining)
            q, v = flight.q, flight.v
            remaining -= flight.elapsed
            if flight.event is None:
                break
    return flow_state(config, q, v)


def cell_of_impact(config: ScattererConfig, q: Sequence[float]) -> LatticeVector:
    """Anchor cell of the disk whose boundary passes closest to q."""
    q = np.asarray(q, dtype=float)
    best, best_gap = None, math.inf
    for anchor, _, disk in config.neighbourhood(config.anchor_of(q)):
        gap = abs(float(np.linalg.norm(q - config.disk_center(anchor, disk))) - disk.radius)
        if gap < best_gap:
            best, best_gap = anchor, gap
    if best is None:
        raise ArgumentError(f"no scatterer near {q.tolist()}")
    return config.to_lattice(best)


@dataclass(frozen=True)
class InvarianceCheck:
    passed: bool
    pvalue: float
    statistic: float
    samples: int
    bins: int


def nu_histogram_cell(config: ScattererConfig, coord: BoundaryCoord, bins: int) -> Tuple[int, int]:
    """Bin of (arclength fraction, (1 + sin phi) / 2); both are uniform under nu."""
    perimeters = [d.perimeter for d in config.disks]
    s = (sum(perimeters[: coord.disk]) + coord.r) / sum(perimeters)
    u = (1.0 + math.sin(coord.phi)) / 2.0
    return min(int(s * bins), bins - 1), min(int(u * bins), bins - 1)


def nu_invariance_test(
    config: ScattererConfig,
    field: FieldSpec,
    N: int,
    rng: np.random.Generator,
    bins: int = 32,
    alpha: float = 0.01,
) -> InvarianceCheck:
    """Chi-square test of the one-step pushforward of nu against nu on a bins x bins grid."""
    if N < 5 * bins * bins:
        raise ArgumentError(f"need at least {5 * bins * bins} samples for {bins}x{bins} bins, got {N}")
    counts = np.zeros((bins, bins))
    for _ in range(N):
        nxt, _ = collision_map(config, field, sample_nu(config, rng))
        counts[nu_histogram_cell(config, nxt, bins)] += 1
    result = stats.chisquare(counts.ravel())
    check = InvarianceCheck(bool(result.pvalue > alpha), float(result.pvalue), float(result.statistic), N, bins)
    logger.info("nu_invariance_checked", config=config.name, pvalue=check.pvalue, passed=check.passed)
    return check
