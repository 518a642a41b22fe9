"""morphcomp: compliance minimization with movable deformable components."""

from .config import ConfigError, RunConfig, parse_config, serialize_config
from .driver import build_problem, gradient_check, run_optimization
from .export import (export_cad_svg, export_component_table,
                     export_contour_svg, export_history_csv,
                     extract_contours)
from .fem import (BoundaryConditions, FemSolution, Material, Mesh,
                  assemble_and_solve, build_mesh, element_densities,
                  element_stiffness, gauss_point_coords, volume)
from .geometry import (
    Component,
    FieldSample,
    Regularization,
    component_tdf,
    component_tdf_gradient,
    pack_design,
    smoothed_delta,
    smoothed_heaviside,
    structure_tdf,
    unpack_design,
)
from .mma import Bounds, MmaState, mma_update
from .optimizer import IterationRecord, MovingComponentOptimizer
from .problems import (ProblemSpec, design_bounds, grid_initial_design,
                       mbb_problem, resolve_boundary_conditions,
                       short_beam_problem)
from .sensitivity import (GradientVector, compliance_gradient,
                          finite_difference_oracle, volume_gradient)

__version__ = "0.1.0"

__all__ = [
    "BoundaryConditions",
    "Bounds",
    "Component",
    "ConfigError",
    "FemSolution",
    "FieldSample",
    "GradientVector",
    "IterationRecord",
    "Material",
    "Mesh",
    "MmaState",
    "MovingComponentOptimizer",
    "ProblemSpec",
    "Regularization",
    "RunConfig",
    "assemble_and_solve",
    "build_mesh",
    "build_problem",
    "component_tdf",
    "component_tdf_gradient",
    "compliance_gradient",
    "design_bounds",
    "element_densities",
    "element_stiffness",
    "export_cad_svg",
    "export_component_table",
    "export_contour_svg",
    "export_history_csv",
    "extract_contours",
    "finite_difference_oracle",
    "gauss_point_coords",
    "gradient_check",
    "grid_initial_design",
    "mbb_problem",
    "mma_update",
    "pack_design",
    "parse_config",
    "resolve_boundary_conditions",
    "run_optimization",
    "serialize_config",
    "short_beam_problem",
    "smoothed_delta",
    "smoothed_heaviside",
    "structure_tdf",
    "unpack_design",
    "volume",
    "volume_gradient",
    "__version__",
]
