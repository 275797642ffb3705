# One-dimensional wall models: Fermi-Ulam pingpong and the bouncing ball, with their limit maps
from .walls import (
    WallMotion,
    Harmonic,
    default_corner_profile,
    shallow_corner_profile,
    parabolic_profile,
    triangle_profile,
)
from .roots import first_root, expanding_root
from .fermi_ulam import (
    PingpongState,
    WallEvent,
    pingpong_event,
    pingpong_map,
    pingpong_trajectory,
    limit_map,
    compute_delta,
    riemann_delta,
    hyperbolicity_check,
    to_limit_chart,
    from_limit_chart,
    approximation_ladder,
    LadderLevel,
    PingpongSystem,
)
from .bouncing import (
    BallState,
    bouncing_event,
    bouncing_map,
    bouncing_limit_map,
    bouncing_factor_map,
    ball_quotient,
    check_jing_condition,
    bouncing_flow,
    bouncing_approximation_ladder,
    BouncingFlowSystem,
    near_integer_velocity_global,
)

__all__ = [
    "WallMotion",
    "Harmonic",
    "default_corner_profile",
    "shallow_corner_profile",
    "parabolic_profile",
    "triangle_profile",
    "first_root",
    "expanding_root",
    "PingpongState",
    "WallEvent",
    "pingpong_event",
    "pingpong_map",
    "pingpong_trajectory",
    "limit_map",
    "compute_delta",
    "riemann_delta",
    "hyperbolicity_check",
    "to_limit_chart",
    "from_limit_chart",
    "approximation_ladder",
    "LadderLevel",
    "PingpongSystem",
    "BallState",
    "bouncing_event",
    "bouncing_map",
    "bouncing_limit_map",
    "bouncing_factor_map",
    "ball_quotient",
    "check_jing_condition",
    "bouncing_flow",
    "bouncing_approximation_ladder",
    "BouncingFlowSystem",
    "near_integer_velocity_global",
]
