# Sinai billiards and Lorentz gases: geometry, flights, fields, collision map, flow
from .geometry import BoundaryCoord, Disk, LocalMod, ScattererConfig
from .flight import CollisionEvent, next_collision_free, reflect, scan_collision
from .fields import FieldSpec, next_collision_field, parabola_impact_time
from .dynamics import (
    FlowPoint,
    HorizonCheck,
    InvarianceCheck,
    billiard_flow,
    cell_of_impact,
    collision_event,
    collision_map,
    collision_trajectory,
    nu_invariance_test,
    sample_nu,
    verify_finite_horizon,
)
from .systems import GaltonBoardSystem, LorentzFlowSystem, LorentzSystem

__all__ = [
    "BoundaryCoord",
    "Disk",
    "LocalMod",
    "ScattererConfig",
    "CollisionEvent",
    "next_collision_free",
    "reflect",
    "scan_collision",
    "FieldSpec",
    "next_collision_field",
    "parabola_impact_time",
    "FlowPoint",
    "HorizonCheck",
    "InvarianceCheck",
    "billiard_flow",
    "cell_of_impact",
    "collision_event",
    "collision_map",
    "collision_trajectory",
    "nu_invariance_test",
    "sample_nu",
    "verify_finite_horizon",
    "GaltonBoardSystem",
    "LorentzFlowSystem",
    "LorentzSystem",
]
