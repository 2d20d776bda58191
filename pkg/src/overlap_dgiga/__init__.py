"""DG-IGA diffusion solver for multipatch B-spline domains with small overlaps."""

from .analysis import ConvergenceTable, ErrorReport, dg_error, rate
from .assembly import (AssemblyConfig, LinearSystem, ProblemSpec, assemble,
                       assemble_dirichlet_nitsche, assemble_interface_flux, assemble_volume)
from .bspline import KnotVector, TensorSpace, eval_basis, eval_basis_derivs, tensor_eval
from .builders import affine_patch, block_multipatch, box_patch
from .cases import (ExampleCase, example_3d, example_discontinuous_rho,
                    example_multiface_overlap, example_smooth_homogeneous, get_example)
from .errors import (ConfigError, DegreeError, DGIGAError, GeometryError, KnotDomainError,
                     SingularGeometryError, SolverError, TopologyError)
from .geometry import (FaceId, InterfacePair, MultiPatch, Patch, face_quad_geometry, jacobian,
                       make_overlap, map_point, overlap_width, partner_point)
from .harness import RunConfig, emit_outputs, run_convergence
from .quadrature import element_quadrature, face_quadrature, gauss_rule
from .solver import DiscreteSolution, eval_solution, solve

__version__ = "0.1.0"
