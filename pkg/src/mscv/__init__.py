"""Multipoint stress control-volume methods on quadrilateral/hexahedral grids."""

__version__ = "0.1.0"

from .mesh import (MacroMesh, SubMesh, apply_map, build_structured,
                   parallelogram_seed_map, perturb_random, read_mesh,
                   refine_uniform, smooth_map, subdivide)
from .fespace import DofLayout, build_layout, stress_basis
from .assembly import (MaterialField, assemble_blocks, assemble_full_saddle,
                       assemble_rhs, cell_measures, compliance_apply)
from .reduction import (ReducedSystem, Solution, eliminate_rotation,
                        eliminate_stress, recover_fields, solve_elasticity,
                        solve_spd)
from .postprocess import (ErrorReport, conservation_residual, error_norms,
                          mean_stress, project_rt0, region_measures)
from .problems import (ManufacturedCase, build_family_mesh, darcy_case,
                       example1, example2_3d, example3_hetero,
                       example4_incompressible, stokes_case)
from .extensions import (DarcySolution, StokesSolution, darcy_mass_balance,
                         solve_darcy, solve_stokes)
from .harness import (ConvergenceTable, RunConfig, dump_fields, emit_csv,
                      format_table, read_csv, run_convergence)

__all__ = [
    "MacroMesh", "SubMesh", "apply_map", "build_structured",
    "parallelogram_seed_map", "perturb_random", "read_mesh", "refine_uniform",
    "smooth_map", "subdivide",
    "DofLayout", "build_layout", "stress_basis",
    "MaterialField", "assemble_blocks", "assemble_full_saddle",
    "assemble_rhs", "cell_measures", "compliance_apply",
    "ReducedSystem", "Solution", "eliminate_rotation", "eliminate_stress",
    "recover_fields", "solve_elasticity", "solve_spd",
    "ErrorReport", "conservation_residual", "error_norms", "mean_stress",
    "project_rt0", "region_measures",
    "ManufacturedCase", "build_family_mesh", "darcy_case", "example1",
    "example2_3d", "example3_hetero", "example4_incompressible",
    "stokes_case",
    "DarcySolution", "StokesSolution", "darcy_mass_balance", "solve_darcy",
    "solve_stokes",
    "ConvergenceTable", "RunConfig", "dump_fields", "emit_csv",
    "format_table", "read_csv", "run_convergence",
    "__version__",
]
