"""Shift functions of flows: linear-flow periods, orbit classification and the group Z_id."""

__version__ = "0.1.0"

from .circle import (CircleAction, KernelReport, admissible_angles, ineffectivity_kernel,
                     lift_action, make_action, newman_check, zid_circle)
from .errors import (ChartFailure, DomainError, InconsistentKernel, InvalidArgument,
                     NoClosedOrbits, NumericFailure, ShiftCalcError, TheoremViolation)
from .flows import (Flow, check_flow_axioms, integrated_flow, linear_flow, make_flow,
                    random_axiom_samples, vector_field)
from .linear_flow import (imaginary_spectrum, min_period_bound, period_divergence_probe,
                          point_period)
from .matrix_core import (ComplexCell, JordanBlueprint, RealCell, assemble_real_jordan,
                          blueprint_exp, jordan_cell, jordan_cell_exp, mat_exp,
                          random_blueprint, rotation_block, spectrum)
from .orbits import (Grid, OrbitClass, classify_orbit, fixed_set_probe, is_tangent_flow_trivial,
                     tangent_flow)
from .shifts import (ParamMapping, ShiftFunction, apply_phi, invert_param_mapping, make_shift,
                     sigma_compose, sigma_inverse)
from .zid import (EvaluationHom, ZidStructure, classify_zid, period_generator,
                  reconstruct_alpha, same_phi_image, zid_membership)
