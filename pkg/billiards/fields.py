"""
External fields between collisions.

Potential fields conserve H = |v|^2/2 + U(q); the Gaussian thermostat keeps the
speed fixed instead. Flights are integrated with an embedded Runge-Kutta-Fehlberg
4(5) pair; collisions are located by watching signed distances to nearby disks
and walls change sign, then refining the step length with Brent's method.
"""
import math
from dataclasses import dataclass
from typing import Callable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from core.config import settings
from core.errors import ConfigurationError, DomainError, IntegrationError, TrapError
from core.logging import logger
from .flight import CollisionEvent, fold_wall, impact_event
from .geometry import Anchor, ScattererConfig, wall_lines

FieldVariant = Literal["none", "constant_gravity", "coulomb", "vanishing_potential", "thermostat_constant"]

# Fehlberg 4(5): stage rows, 4th-order weights, error weights
_STAGES = [
    [1 / 4],
    [3 / 32, 9 / 32],
    [1932 / 2197, -7200 / 2197, 7296 / 2197],
    [439 / 216, -8, 3680 / 513, -845 / 4104],
    [-8 / 27, 2, -3554 / 2565, 1859 / 4104, -11 / 40],
]
_WEIGHTS = np.array([25 / 216, 0, 1408 / 2565, 2197 / 4104, -1 / 5, 0])
_ERROR = np.array([1 / 360, 0, -128 / 4275, -2197 / 75240, 1 / 50, 2 / 55])

RTOL = 1e-11
ATOL = 1e-12
ENERGY_TOLERANCE = 1e-8
NEAR_STEP = 1e-4
SPEED_TOLERANCE = 1e-9


@dataclass(frozen=True)
class FieldSpec:
    """
    Field acting between collisions.

    Variants:
        none                 free flight
        constant_gravity     U = -strength <direction, q>
        coulomb              U = strength / |q - center|, center inside a scatterer
        vanishing_potential  user U and grad U with declared sup bounds
        thermostat_constant  constant field E with Gaussian thermostat
    """
    variant: FieldVariant = "none"
    strength: float = 0.0
    direction: Tuple[float, float] = (1.0, 0.0)
    center: Tuple[float, float] = (0.0, 0.0)
    potential: Optional[Callable[[np.ndarray], float]] = None
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    potential_bound: float = math.inf
    gradient_bound: float = math.inf
    energy: Optional[float] = None

    @classmethod
    def none(cls) -> "FieldSpec":
        return cls()

    @classmethod
    def gravity(cls, g: float, direction: Sequence[float] = (1.0, 0.0), energy: Optional[float] = None) -> "FieldSpec":
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        return cls("constant_gravity", float(g), (float(d[0]), float(d[1])), energy=energy)

    @classmethod
    def coulomb(cls, e: float, center: Sequence[float], energy: Optional[float] = None) -> "FieldSpec":
        return cls("coulomb", float(e), center=(float(center[0]), float(center[1])), energy=energy)

    @classmethod
    def vanishing(
        cls,
        potential: Callable[[np.ndarray], float],
        gradient: Callable[[np.ndarray], np.ndarray],
        potential_bound: float,
        gradient_bound: float,
        energy: Optional[float] = None,
    ) -> "FieldSpec":
        return cls(
            "vanishing_potential",
            potential=potential,
            gradient=gradient,
            potential_bound=potential_bound,
            gradient_bound=gradient_bound,
            energy=energy,
        )

    @classmethod
    def thermostat(cls, E: Sequence[float]) -> "FieldSpec":
        E = np.asarray(E, dtype=float)
        norm = float(np.linalg.norm(E))
        direction = (1.0, 0.0) if norm == 0 else (float(E[0] / norm), float(E[1] / norm))
        return cls("thermostat_constant", norm, direction)

    # physics

    @property
    def is_potential(self) -> bool:
        return self.variant in ("constant_gravity", "coulomb", "vanishing_potential")

    @property
    def translation_invariant(self) -> bool:
        return self.variant in ("none", "thermostat_constant")

    @property
    def E(self) -> np.ndarray:
        return self.strength * np.asarray(self.direction)

    def U(self, q: np.ndarray) -> float:
        if self.variant == "constant_gravity":
            return -self.strength * float(np.dot(self.direction, q))
        if self.variant == "coulomb":
            return self.strength / float(np.linalg.norm(np.asarray(q) - np.asarray(self.center)))
        if self.variant == "vanishing_potential":
            return float(self.potential(np.asarray(q)))
        return 0.0

    def acceleration(self, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        if self.variant == "constant_gravity":
            return self.E
        if self.variant == "coulomb":
            w = q - np.asarray(self.center)
            return self.strength * w / float(np.linalg.norm(w)) ** 3
        if self.variant == "vanishing_potential":
            return -np.asarray(self.gradient(q), dtype=float)
        if self.variant == "thermostat_constant":
            E = self.E
            return E - (float(v @ E) / float(v @ v)) * v
        return np.zeros(2)

    def hamiltonian(self, q: np.ndarray, v: np.ndarray) -> float:
        return 0.5 * float(v @ v) + self.U(q)

    def speed_at(self, q: np.ndarray) -> float:
        """Speed at q on the declared energy surface (1 without a potential)."""
        if not self.is_potential or self.energy is None:
            return 1.0
        kinetic = self.energy - self.U(q)
        if kinetic <= 0:
            raise DomainError(f"energy H={self.energy} does not exceed U(q)={self.U(q):.6g} at q={list(q)}")
        return math.sqrt(2.0 * kinetic)

    def validate(self, config: ScattererConfig) -> None:
        """Check the field against a configuration."""
        if self.variant == "coulomb" and config.inside_disk(self.center) is None:
            raise ConfigurationError(f"coulomb center {self.center} must lie strictly inside a scatterer")
        if self.variant == "vanishing_potential":
            if self.potential is None or self.gradient is None:
                raise ConfigurationError("vanishing potential needs U and grad U")
            grid = np.linspace(-5.0, 5.0, 21)
            for x in grid:
                for y in grid:
                    q = np.array([x, y])
                    if config.inside_disk(q) is not None:
                        continue
                    if abs(self.potential(q)) > self.potential_bound:
                        raise ConfigurationError(f"|U({x:g},{y:g})| exceeds the declared bound {self.potential_bound}")
                    if np.linalg.norm(self.gradient(q)) > self.gradient_bound:
                        raise ConfigurationError(f"|grad U({x:g},{y:g})| exceeds the declared bound {self.gradient_bound}")


def _rhs(field: FieldSpec, y: np.ndarray) -> np.ndarray:
    return np.concatenate([y[2:], field.acceleration(y[:2], y[2:])])


def rkf45_step(field: FieldSpec, y: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray]:
    """One Fehlberg step; returns the 4th-order state and the local error estimate."""
    ks = [_rhs(field, y)]
    for row in _STAGES:
        ys = y + h * sum(a * k for a, k in zip(row, ks))
        ks.append(_rhs(field, ys))
    K = np.array(ks)
    return y + h * (_WEIGHTS @ K), h * (_ERROR @ K)


def _candidates(config: ScattererConfig, q: np.ndarray) -> List[Tuple[str, tuple]]:
    found: List[Tuple[str, tuple]] = [
        ("disk", (anchor, k, config.disk_center(anchor, d), d.radius))
        for anchor, k, d in config.neighbourhood(config.anchor_of(q), 2)
    ]
    found += [("wall", wall) for wall in wall_lines(config)]
    return found


def _signed_distance(kind: str, ident: tuple, q: np.ndarray) -> float:
    if kind == "disk":
        return float(np.linalg.norm(q - ident[2])) - ident[3]
    axis, pos, sign = ident
    return sign * (float(q[axis]) - pos)


def _step_cap(speed: float, accel: float, clearance: float) -> float:
    cap = 0.9 * max(clearance, NEAR_STEP)
    return 2.0 * cap / (speed + math.sqrt(speed * speed + 2.0 * accel * cap))


@dataclass(frozen=True)
class FieldFlight:
    """Outcome of a field flight: a disk impact, or the state at the stop time."""
    event: Optional[CollisionEvent]
    q: np.ndarray
    v: np.ndarray
    elapsed: float
    steps: int


def next_collision_field(
    config: ScattererConfig,
    q: Sequence[float],
    v: Sequence[float],
    field: FieldSpec,
    t_stop: Optional[float] = None,
    step_budget: Optional[int] = None,
) -> FieldFlight:
    """
    Integrate the flight from (q, v) under ``field`` up to the first disk impact
    or ``t_stop``. Walls reflect specularly inside the flight.

    Raises:
        TrapError: step budget spent without an impact
        IntegrationError: energy (or thermostat speed) drifted past tolerance
    """
    budget = step_budget or settings.FIELD_STEP_BUDGET
    y = np.concatenate([np.asarray(q, dtype=float), np.asarray(v, dtype=float)])
    H0 = field.hamiltonian(y[:2], y[2:])
    speed0 = float(np.linalg.norm(y[2:]))
    elapsed, h, steps = 0.0, 1e-2, 0

    while steps < budget:
        if t_stop is not None and elapsed >= t_stop:
            return FieldFlight(None, y[:2].copy(), y[2:].copy(), elapsed, steps)
        q_now, v_now = y[:2], y[2:]
        candidates = _candidates(config, q_now)
        before = [_signed_distance(kind, ident, q_now) for kind, ident in candidates]
        clearance = min([1.0] + [max(b, 0.0) for b in before])
        accel = float(np.linalg.norm(field.acceleration(q_now, v_now)))
        h = min(h, _step_cap(float(np.linalg.norm(v_now)), accel, clearance))
        if t_stop is not None:
            h = min(h, t_stop - elapsed)

        y_new, err = rkf45_step(field, y, h)
        scale = ATOL + RTOL * np.maximum(np.abs(y), np.abs(y_new))
        ratio = float(np.max(np.abs(err) / scale))
        steps += 1
        if ratio > 1.0:
            h *= max(0.2, 0.9 * ratio ** -0.2)
            continue

        crossing = None
        for (kind, ident), b in zip(candidates, before):
            after = _signed_distance(kind, ident, y_new[:2])
            if after >= 0:
                continue
            if b <= 0:
                s = 0.0
            else:
                s = brentq(
                    lambda s, kind=kind, ident=ident: _signed_distance(kind, ident, rkf45_step(field, y, s)[0][:2]),
                    0.0,
                    h,
                    xtol=1e-15,
                    rtol=4 * np.finfo(float).eps,
                )
            if crossing is None or s < crossing[0]:
                crossing = (s, kind, ident)

        if crossing is None:
            y = y_new
            if field.variant == "thermostat_constant":
                y[2:] *= speed0 / float(np.linalg.norm(y[2:]))
            elapsed += h
            h *= min(5.0, 0.9 * max(ratio, 1e-10) ** -0.2)
            continue

        s, kind, ident = crossing
        y_hit = rkf45_step(field, y, s)[0] if s > 0 else y.copy()
        if field.variant == "thermostat_constant":
            y_hit[2:] *= speed0 / float(np.linalg.norm(y_hit[2:]))
        elapsed += s
        _check_invariant(field, y_hit, H0, speed0)
        if kind == "wall":
            q_w, v_w = fold_wall(y_hit[:2], y_hit[2:], ident)
            y = np.concatenate([q_w, v_w])
            continue
        anchor, k = ident[0], ident[1]
        event = impact_event(config, y_hit[:2].copy(), y_hit[2:].copy(), anchor, k, elapsed)
        logger.debug("field_collision", variant=field.variant, steps=steps, flight=elapsed)
        return FieldFlight(event, y_hit[:2].copy(), event.v_out, elapsed, steps)

    logger.warning("field_trap", variant=field.variant, steps=steps, q=y[:2].tolist())
    raise TrapError(f"no collision after {steps} integrator steps (budget {budget}) from q={y[:2].tolist()}")


def _check_invariant(field: FieldSpec, y: np.ndarray, H0: float, speed0: float) -> None:
    if field.variant == "thermostat_constant":
        drift = abs(float(np.linalg.norm(y[2:])) - speed0)
        if drift > SPEED_TOLERANCE:
            raise IntegrationError(f"thermostat speed drifted by {drift:.3g}")
        return
    drift = abs(field.hamiltonian(y[:2], y[2:]) - H0)
    if drift > ENERGY_TOLERANCE:
        raise IntegrationError(f"energy drifted by {drift:.3g} (tolerance {ENERGY_TOLERANCE:g}) over one flight")


def parabola_impact_time(
    q: Sequence[float], v: Sequence[float], a: Sequence[float], center: Sequence[float], radius: float
) -> Optional[float]:
    """
    First positive time at which q + v t + a t^2 / 2 meets the circle, from the
    real roots of the quartic |w + v t + a t^2 / 2|^2 = radius^2.
    """
    w = np.asarray(q, dtype=float) - np.asarray(center, dtype=float)
    v = np.asarray(v, dtype=float)
    a = np.asarray(a, dtype=float)
    coeffs = np.array([
        0.25 * float(a @ a),
        float(a @ v),
        float(v @ v) + float(a @ w),
        2.0 * float(v @ w),
        float(w @ w) - radius * radius,
    ])
    poly = np.polynomial.Polynomial(coeffs[::-1])
    deriv = poly.deriv()
    times = []
    for root in np.roots(coeffs):
        if abs(root.imag) > 1e-7:
            continue
        t = float(root.real)
        for _ in range(3):
            slope = deriv(t)
            if slope == 0:
                break
            t -= poly(t) / slope
        if t > 1e-12:
            times.append(t)
    return min(times) if times else None
