"""Pseudoholomorphic discs at finite truncation.

A numpy/scipy library for the machinery behind disc-based symplectic
geometry in (truncated) Hilbert space: the {P, Q} calculus of R-linear
operators and almost complex structures, singular integral operators on the
unit disc, fixed-point solvers for the quasilinear disc system, gluing
boundary value problems (cylinder and torus) and a non-squeezing experiment.
"""

__version__ = "0.1.0"

from .beltrami import (DiscSolution, StructureField, constant_structure, dilated_structure,
                       disc_through_point, pde_residual, regularity_smoke, scalar_structure,
                       solve_local, zero_structure)
from .errors import (ConvergenceError, DomainError, ShapeError, SingularityError, WindingError)
from .grid import (DiscGrid, GridField, constant_field, d, dbar, eval_center,
                   field_from_function, holder_seminorm, interp_field, load_field, lp_norm,
                   morrey_check, morrey_ratio, quadrature, save_field, sobolev_norm, sup_norm)
from .gluing import (CylinderProblem, TorusProblem, TriangleMap, cylinder_structure,
                     solve_cylinder, solve_torus, solve_uv_contraction,
                     triangle_area_quadrature, triangle_map)
from .nonsqueeze import (RHData, SqueezeReport, certify_antiholomorphic_bound, flat_family,
                         hamiltonian_flow, identity_map, nonsqueezing_experiment,
                         perturb_family, rh_solve_w, rh_solve_z, schwarz_integral,
                         structure_of_map, symplectic_area, unitary_rotation)
from .singular import (TriangleWeight, WeightSpec, beurling_S, beurling_S_pv,
                       boundary_cauchy_K, cauchy_T, cauchy_T_at, estimate_opnorm,
                       j_alpha_beta, op_S1, op_S2, op_T1, op_T2, weighted_SQ, weighted_TQ)
from .symplin import (LinearACS, RLinearOp, apply, build_unit_norm_example,
                      complex_representation, direct_image, is_compatible, is_tamed,
                      linear_acs, norm_antiholomorphic_ratio, omega, preserves_omega,
                      random_symplectomorphism, symplectic_inverse, taming_bound_L)
