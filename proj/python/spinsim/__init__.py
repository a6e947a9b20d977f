"""Spinning-target capture and detumbling simulator."""

from ._core import (
    InfeasibleError,
    MissionResult,
    NoSolutionError,
    Phase,
    SpinsimError,
    SystemModel,
    ValidationError,
    base_com_offset,
    com_jacobian,
    compound_inertia,
    forward_kinematics,
    load_config,
    parse_config,
    plan_capture_trajectory,
    quat_error,
    quat_to_rotmat,
    reference_model,
    run_mission,
    solve_final_joints,
    summary,
    write_outputs,
)

__all__ = [name for name in dir() if not name.startswith("_")]
