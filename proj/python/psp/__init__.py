from ._psp import (
    PspError,
    default_experiment_config,
    deformed_pattern,
    extract_phase,
    generate_pattern,
    phase_to_projector_row,
    project_camera,
    project_projector,
    reconstruct_sinc,
    recover,
    run_experiment,
    solve_camera,
    solve_projector,
    triangulate,
)

__all__ = [
    "PspError",
    "default_experiment_config",
    "deformed_pattern",
    "extract_phase",
    "generate_pattern",
    "phase_to_projector_row",
    "project_camera",
    "project_projector",
    "reconstruct_sinc",
    "recover",
    "run_experiment",
    "solve_camera",
    "solve_projector",
    "triangulate",
]
