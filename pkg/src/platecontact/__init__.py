"""Kirchhoff plates with unilateral (Signorini) boundary contact.

C1 Bogner-Fox-Schmit elements, a Nitsche-type contact term solved by
semismooth Newton, and a Q1 Poisson analogue used for validation.
"""

from .assembly import ContactOperator, PenaltyRule, assemble_bending, assemble_corner_forces, assemble_load
from .bfs import eval_basis, evaluate_at, interpolant, interpolate
from .config import ConfigError, Scenario, load_scenario
from .export import ExportError, export_fields, read_nodal_csv
from .mesh import BoundarySpec, OutOfDomainError, SideBC, StructuredMesh, build_mesh, refine_uniform
from .navier import navier_deflection
from .plate import MaterialParams, corner_moment_jump, kirchhoff_shear
from .poisson import solve_poisson_dirichlet_nitsche, solve_poisson_signorini_nitsche
from .postprocess import ConvergenceTable, ShearProfile, convergence_sweep, extract_shear_profile
from .solver import (ContactState, Loads, SingularSystemError, SolveReport, SolverError,
                     SolverOptions, recover_multiplier, solve_plate_bilateral, solve_plate_signorini)

__version__ = "0.1.0"

__all__ = [
    "BoundarySpec", "ConfigError", "ContactOperator", "ContactState", "ConvergenceTable",
    "ExportError", "Loads", "MaterialParams", "OutOfDomainError", "PenaltyRule", "Scenario",
    "ShearProfile", "SideBC", "SingularSystemError", "SolveReport", "SolverError",
    "SolverOptions", "StructuredMesh", "assemble_bending", "assemble_corner_forces",
    "assemble_load", "build_mesh", "convergence_sweep", "corner_moment_jump", "eval_basis",
    "evaluate_at", "export_fields", "extract_shear_profile", "interpolant", "interpolate",
    "kirchhoff_shear", "load_scenario", "navier_deflection", "read_nodal_csv",
    "recover_multiplier", "refine_uniform", "solve_plate_bilateral", "solve_plate_signorini",
    "solve_poisson_dirichlet_nitsche", "solve_poisson_signorini_nitsche",
]
