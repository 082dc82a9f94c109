"""Python bindings for the supercooled Stefan solvers."""

from ._stefan import (
    ConfigInvalid,
    DonskerSolution,
    DriverSpec,
    GridSpec,
    InitialLaw,
    InitMode,
    Mode,
    OutputUnwritable,
    ParticleSolution,
    Scheme,
    StefanError,
    __version__,
    detect_jump,
    error_estimator,
    fit_order,
    run,
    solve_donsker,
    solve_particle,
)

__all__ = [
    "ConfigInvalid",
    "DonskerSolution",
    "DriverSpec",
    "GridSpec",
    "InitialLaw",
    "InitMode",
    "Mode",
    "OutputUnwritable",
    "ParticleSolution",
    "Scheme",
    "StefanError",
    "__version__",
    "detect_jump",
    "error_estimator",
    "fit_order",
    "run",
    "solve_donsker",
    "solve_particle",
]
