"""
Free flight between scatterers.

The next disk along a ray is found by walking the unit cells the ray crosses
(Amanatides-Woo traversal) and testing only disks anchored in each cell's 3x3
neighbourhood. Ray/disk quadratics are solved in extended precision. Straight
walls of strip and half-plane geometries reflect specularly inside the flight,
so an event is always an impact on a disk.
"""
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np

from cocycle.lattice import LatticeVector
from core.errors import ArgumentError, HorizonViolationError, PreconditionError
from core.logging import logger
from .geometry import Anchor, BoundaryCoord, ScattererConfig, wall_lines

MIN_FLIGHT = 1e-12
TANGENT_SLACK = 1e-14


@dataclass(frozen=True)
class CollisionEvent:
    flight_time: float
    q: np.ndarray
    v_in: np.ndarray
    v_out: np.ndarray
    coord: BoundaryCoord
    anchor: Anchor
    tau: Optional[LatticeVector] = None
    wall_hits: int = 0
    cells_visited: int = 0

    @property
    def grazing(self) -> bool:
        return self.coord.grazing


def reflect(v: Sequence[float], n: Sequence[float]) -> np.ndarray:
    """
    Specular reflection v' = v - 2<v,n> n off a wall with unit normal n pointing
    into the billiard table.

    Raises:
        PreconditionError: v is outgoing (<v,n> > 0)
    """
    v = np.asarray(v, dtype=float)
    n = np.asarray(n, dtype=float)
    dot = float(v @ n)
    if dot > 0:
        raise PreconditionError(f"velocity {v.tolist()} is outgoing for normal {n.tolist()} (<v,n>={dot:.3g})")
    return v - 2.0 * dot * n


def _specular(v: np.ndarray, n: np.ndarray) -> np.ndarray:
    dot = float(v @ n)
    return v - 2.0 * dot * n if dot < 0 else v.copy()


def disk_hit_time(q: np.ndarray, v: np.ndarray, center: np.ndarray, radius: float) -> Optional[float]:
    """First positive entry time of q + t v into the disk, or None."""
    w = np.asarray(q, dtype=np.longdouble) - np.asarray(center, dtype=np.longdouble)
    u = np.asarray(v, dtype=np.longdouble)
    b = w @ u
    if b >= 0:
        return None
    a = u @ u
    rr = np.longdouble(radius) * np.longdouble(radius)
    c = w @ w - rr
    disc = b * b - a * c
    if disc < 0:
        if disc < -TANGENT_SLACK * a * rr:
            return None
        disc = np.longdouble(0)
    t = (-b - np.sqrt(disc)) / a
    if t <= MIN_FLIGHT:
        return None
    return float(t)


def grid_cells(q: Sequence[float], v: Sequence[float], t_limit: float) -> Iterator[Tuple[Anchor, float, float]]:
    """
    Cells crossed by q + t v for 0 <= t <= t_limit, in increasing t.

    Yields:
        (cell, t_enter, t_exit)
    """
    i, j = int(math.floor(q[0])), int(math.floor(q[1]))
    step_x = 1 if v[0] > 0 else -1
    step_y = 1 if v[1] > 0 else -1
    delta_x = abs(1.0 / v[0]) if v[0] != 0 else math.inf
    delta_y = abs(1.0 / v[1]) if v[1] != 0 else math.inf
    if v[0] > 0:
        t_x = (i + 1 - q[0]) / v[0]
    elif v[0] < 0:
        t_x = (i - q[0]) / v[0]
    else:
        t_x = math.inf
    if v[1] > 0:
        t_y = (j + 1 - q[1]) / v[1]
    elif v[1] < 0:
        t_y = (j - q[1]) / v[1]
    else:
        t_y = math.inf

    t_enter = 0.0
    while t_enter <= t_limit:
        t_exit = min(t_x, t_y)
        yield (i, j), t_enter, t_exit
        if t_x < t_y:
            i += step_x
            t_x += delta_x
        else:
            j += step_y
            t_y += delta_y
        t_enter = t_exit


def traverse(
    config: ScattererConfig, q: np.ndarray, v: np.ndarray, t_limit: float
) -> Tuple[Optional[Tuple[float, Anchor, int]], int]:
    """
    Earliest disk hit within t_limit by grid traversal.

    Returns:
        ((t, anchor, disk id) or None, number of cells visited)
    """
    tested = set()
    best: Optional[Tuple[float, Anchor, int]] = None
    visited = 0
    for cell, _, t_exit in grid_cells(q, v, t_limit):
        visited += 1
        for anchor, k, disk in config.neighbourhood(cell):
            if (anchor, k) in tested:
                continue
            tested.add((anchor, k))
            t = disk_hit_time(q, v, config.disk_center(anchor, disk), disk.radius)
            if t is not None and (best is None or t < best[0]):
                best = (t, anchor, k)
        if best is not None and best[0] <= t_exit:
            break
    if best is not None and best[0] > t_limit:
        best = None
    return best, visited


def scan_collision(
    config: ScattererConfig, q: Sequence[float], v: Sequence[float], box: int = 50
) -> Optional[Tuple[float, Anchor, int]]:
    """Earliest disk hit found by testing every disk anchored within ``box`` cells."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    best = None
    for anchor, k, disk in config.neighbourhood(config.anchor_of(q), box):
        t = disk_hit_time(q, v, config.disk_center(anchor, disk), disk.radius)
        if t is not None and (best is None or t < best[0]):
            best = (t, anchor, k)
    return best


def wall_hit(config: ScattererConfig, q: np.ndarray, v: np.ndarray) -> Tuple[float, Optional[Tuple[int, float, float]]]:
    """Time to the first straight wall ahead, with the wall (axis, position, inward sign)."""
    best_t, best_wall = math.inf, None
    for axis, pos, sign in wall_lines(config):
        if v[axis] * sign >= 0:
            continue
        t = (pos - q[axis]) / v[axis]
        if MIN_FLIGHT < t < best_t:
            best_t, best_wall = t, (axis, pos, sign)
    return best_t, best_wall


def fold_wall(q: np.ndarray, v: np.ndarray, wall: Tuple[int, float, float]) -> Tuple[np.ndarray, np.ndarray]:
    axis, pos, sign = wall
    q = q.copy()
    v = v.copy()
    q[axis] = pos
    v[axis] = -v[axis]
    return q, v


def transport_free(config: ScattererConfig, q: np.ndarray, v: np.ndarray, s: float) -> Tuple[np.ndarray, np.ndarray]:
    """Move for time s with wall folding and no disk test."""
    q, v = np.array(q, dtype=float), np.array(v, dtype=float)
    while True:
        t_wall, wall = wall_hit(config, q, v)
        if t_wall > s:
            return q + s * v, v
        q, v = fold_wall(q + t_wall * v, v, wall)
        s -= t_wall


def impact_event(
    config: ScattererConfig,
    q_hit: np.ndarray,
    v_in: np.ndarray,
    anchor: Anchor,
    disk_id: int,
    elapsed: float,
    walls: int = 0,
    visited: int = 0,
) -> CollisionEvent:
    disk = config.disk(anchor, disk_id)
    normal = (q_hit - config.disk_center(anchor, disk)) / disk.radius
    normal = normal / np.linalg.norm(normal)
    v_out = _specular(v_in, normal)
    coord = config.coord_of_impact(anchor, disk_id, q_hit, v_out)
    if coord.grazing:
        logger.warning("grazing_collision", cell=list(anchor), disk=disk_id, phi=coord.phi)
    return CollisionEvent(elapsed, q_hit, v_in, v_out, coord, anchor, None, walls, visited)


def next_collision_free(
    config: ScattererConfig,
    q: Sequence[float],
    v: Sequence[float],
    check: bool = True,
) -> CollisionEvent:
    """
    First disk impact of the unit-speed flight from (q, v).

    Args:
        config: scatterer configuration
        q: start position
        v: unit velocity
        check: reject start positions inside a disk (off for launches from the boundary)

    Raises:
        DomainError: q inside a scatterer or outside the walls
        ArgumentError: v not a unit vector
        HorizonViolationError: no impact within four times the declared free-path bound
    """
    q = np.array(q, dtype=float)
    v = np.array(v, dtype=float)
    if abs(float(np.hypot(v[0], v[1])) - 1.0) > 1e-9:
        raise ArgumentError(f"free flights need a unit velocity, got |v|={np.hypot(v[0], v[1]):.12g}")
    if check:
        config.check_position(q)

    limit = 4.0 * config.free_path_bound
    elapsed, walls, visited = 0.0, 0, 0
    while True:
        remaining = limit - elapsed
        t_wall, wall = wall_hit(config, q, v)
        hit, cells = traverse(config, q, v, min(t_wall, remaining))
        visited += cells
        if hit is not None and hit[0] <= t_wall:
            t, anchor, k = hit
            return impact_event(config, q + t * v, v, anchor, k, elapsed + t, walls, visited)
        if t_wall > remaining:
            break
        q, v = fold_wall(q + t_wall * v, v, wall)
        elapsed += t_wall
        walls += 1

    logger.warning("horizon_violation", config=config.name, origin=q.tolist(), direction=v.tolist(), limit=limit)
    raise HorizonViolationError(
        f"no collision within {limit:g} (4x declared free path {config.free_path_bound:g}) "
        f"from {q.tolist()} along {v.tolist()}",
        origin=q.tolist(),
        direction=v.tolist(),
        distance=limit,
    )
