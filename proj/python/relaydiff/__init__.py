"""Relay-feedback control of reaction-diffusion equations."""

from ._relaydiff import (
    ConfigError,
    Grid,
    NumericalError,
    PreconditionError,
    Scenario,
    Trajectory,
    a_priori_bounds,
    affine_check,
    controller_step,
    controller_trajectory,
    convergence_study,
    heat_error,
    heat_oracle,
    holder_probe,
    load_scenario,
    parse_scenario,
    picard,
    read_trajectory,
    residual,
    simulate,
    solve_open_loop,
    stability_probe,
    write_trajectory,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "Grid",
    "NumericalError",
    "PreconditionError",
    "Scenario",
    "Trajectory",
    "a_priori_bounds",
    "affine_check",
    "controller_step",
    "controller_trajectory",
    "convergence_study",
    "heat_error",
    "heat_oracle",
    "holder_probe",
    "load_scenario",
    "parse_scenario",
    "picard",
    "read_trajectory",
    "residual",
    "simulate",
    "solve_open_loop",
    "stability_probe",
    "write_trajectory",
]
