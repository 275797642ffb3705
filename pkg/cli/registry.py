"""
Name -> object tables used by experiment configs: systems, walls and observables.
"""
import math
from typing import Callable, Dict, Union

from billiards.fields import FieldSpec
from billiards.geometry import ScattererConfig
from billiards.systems import GaltonBoardSystem, LorentzFlowSystem, LorentzSystem
from cocycle.observables import (
    GlobalObservable,
    LocalObservable,
    base_global,
    cell_indicator_local,
    constant_global,
    cosine_wave_global,
)
from cocycle.system import CocycleSystem
from core.errors import ConfigurationError
from oracles.random_walk import (
    deterministic_walk,
    drift_walk,
    lazy_walk,
    nearest_neighbour_walk,
    simple_walk,
    srw_system,
)
from pingpong.bouncing import BouncingFlowSystem, near_integer_velocity_global
from pingpong.fermi_ulam import PingpongSystem
from pingpong.walls import (
    WallMotion,
    default_corner_profile,
    shallow_corner_profile,
    parabolic_profile,
    triangle_profile,
)
from .schemas import BilliardSystem, WalkSystem, WallSystem


def build_walk(spec: WalkSystem) -> CocycleSystem:
    laws = {
        "simple": lambda: simple_walk(spec.d),
        "lazy": lazy_walk,
        "drift": lambda: drift_walk(spec.drift),
        "deterministic": lambda: deterministic_walk(spec.step),
        "nearest_neighbour": nearest_neighbour_walk,
    }
    return srw_system(laws[spec.law](), spec.seed, spec.period)


def build_scatterers(spec: BilliardSystem) -> ScattererConfig:
    configs = {
        "reference": ScattererConfig.reference,
        "single_disk": lambda: ScattererConfig.single_disk(spec.radius),
        "half_strip": ScattererConfig.half_strip,
        "galton": ScattererConfig.galton,
    }
    config = configs[spec.config]()
    for cell, index in spec.removed:
        config = config.with_removed(cell, index)
    return config


def build_field(spec: BilliardSystem, config: ScattererConfig) -> FieldSpec:
    if spec.field == "none":
        return FieldSpec.none()
    if spec.field == "thermostat":
        return FieldSpec.thermostat(spec.E)
    if spec.field == "gravity":
        return FieldSpec.gravity(spec.g, energy=spec.H)
    center = config.disks[0].center
    return FieldSpec.coulomb(spec.e, center, energy=spec.H)


def build_wall(spec: WallSystem) -> WallMotion:
    if spec.profile == "file":
        if spec.path is None:
            raise ConfigurationError("profile 'file' needs a path to a JSON wall description")
        return WallMotion.from_json(spec.path)
    walls = {
        "corner": default_corner_profile,
        "shallow": shallow_corner_profile,
        "parabolic": lambda: parabolic_profile(spec.beta),
        "triangle": lambda: triangle_profile(slope=spec.slope),
    }
    return walls[spec.profile]()


def build_system(spec: Union[WalkSystem, BilliardSystem, WallSystem]) -> CocycleSystem:
    if isinstance(spec, WalkSystem):
        return build_walk(spec)
    if isinstance(spec, WallSystem):
        wall = build_wall(spec)
        if spec.kind == "pingpong":
            return PingpongSystem(wall, spec.base_band)
        return BouncingFlowSystem(wall, spec.g, spec.T)
    if spec.kind == "galton":
        if spec.config != "galton":
            raise ConfigurationError(f"Galton board runs on the galton configuration, got {spec.config}")
        return GaltonBoardSystem(spec.g, spec.H, build_scatterers(spec))
    config = build_scatterers(spec)
    field = build_field(spec, config)
    if spec.kind == "lorentz_flow":
        return LorentzFlowSystem(config, field, spec.T)
    return LorentzSystem(config, field)


def _cos_phi(y) -> float:
    return math.cos(y.phi)


def _sin_phi(y) -> float:
    return math.sin(y.phi)


# nu(cos phi) = integral of cos^2 / 2 over [-pi/2, pi/2]
GLOBAL_OBSERVABLES: Dict[str, Callable[[CocycleSystem], GlobalObservable]] = {
    "const1": lambda system: constant_global(1.0),
    "cos_golden": lambda system: cosine_wave_global(axes=(0,)),
    "cos_golden_all": lambda system: cosine_wave_global(axes=tuple(range(system.dim))),
    "cos_phi": lambda system: base_global(_cos_phi, average=math.pi / 4, bound=1.0, name="cos(phi)"),
    "sin_phi": lambda system: base_global(_sin_phi, average=0.0, bound=1.0, name="sin(phi)"),
    "near_integer_v": lambda system: near_integer_velocity_global(),
}

LOCAL_OBSERVABLES: Dict[str, Callable[[CocycleSystem], LocalObservable]] = {
    "cell0": lambda system: cell_indicator_local([system.zero().coords], system.d1),
    "cells01": lambda system: cell_indicator_local(
        [system.zero().coords, (1,) + system.zero().coords[1:]], system.d1, value=0.5
    ),
}


def global_observable(name: str, system: CocycleSystem) -> GlobalObservable:
    try:
        return GLOBAL_OBSERVABLES[name](system)
    except KeyError:
        raise ConfigurationError(f"unknown global observable {name!r}; known: {sorted(GLOBAL_OBSERVABLES)}") from None


def local_observable(name: str, system: CocycleSystem) -> LocalObservable:
    try:
        return LOCAL_OBSERVABLES[name](system)
    except KeyError:
        raise ConfigurationError(f"unknown local observable {name!r}; known: {sorted(LOCAL_OBSERVABLES)}") from None


def base_function(name: str) -> Callable:
    """Base-only observables psi(y) for MLLT weights."""
    table = {"cos_phi": _cos_phi, "sin_phi": _sin_phi}
    try:
        return table[name]
    except KeyError:
        raise ConfigurationError(f"unknown base observable {name!r}; known: {sorted(table)}") from None
