"""Planning toolkit for a tractor towing a trailer on a slack/taut cable."""

from cabletow.model import (
    CableKinematics,
    ControlInput,
    HybridState,
    SystemParams,
    TautInfeasible,
    TractorState,
    TrailerState,
    Trajectory,
    cable_kinematics,
    cable_length,
    rollout,
    step_slack,
    step_taut,
    step_tractor,
    step_trailer,
    wrap_angle,
)

__all__ = [
    "CableKinematics",
    "ControlInput",
    "HybridState",
    "SystemParams",
    "TautInfeasible",
    "TractorState",
    "TrailerState",
    "Trajectory",
    "cable_kinematics",
    "cable_length",
    "rollout",
    "step_slack",
    "step_taut",
    "step_tractor",
    "step_trailer",
    "wrap_angle",
]

__version__ = "0.1.0"
