"""Axisymmetric membrane profiles, their Jacobi operators and stability tests."""

__version__ = "0.1.0"

from .errors import (ConvergenceFailure, DegenerateWeight, EventNotFound, HalfSpaceExit,
                     MembraneError, SingularBlowup, SingularOperator)
from .fields import (BoundaryData, FieldTable, boundary_darboux, energies, geometric_fields,
                     rme_residual, surface_integral)
from .operators import (DiscreteOperator, apply, assemble, assemble_F, identity_study,
                        identity_suite)
from .profile import (ApexInit, ModelParams, ProfileCurve, StopKind, StopRule,
                      integrate_profile, locate_event, resample)
from .spectrum import (EigenPair, WeightKind, fp_consistency, rayleigh_quotient,
                       solve_dirichlet_spectrum)
from .stability import (StabilityReport, Verdict, constraint_integral, corollary_checks,
                        el_residuals_and_alpha_beta, second_variation_E, second_variation_G,
                        second_variation_H, shoot_psi, solve_h, thmbif_verdict)

__all__ = [
    "ApexInit", "BoundaryData", "ConvergenceFailure", "DegenerateWeight", "DiscreteOperator",
    "EigenPair", "EventNotFound", "FieldTable", "HalfSpaceExit", "MembraneError",
    "ModelParams", "ProfileCurve", "SingularBlowup", "SingularOperator", "StabilityReport",
    "StopKind", "StopRule", "Verdict", "WeightKind", "apply", "assemble", "assemble_F",
    "boundary_darboux", "constraint_integral", "corollary_checks",
    "el_residuals_and_alpha_beta", "energies", "fp_consistency", "geometric_fields",
    "identity_study", "identity_suite", "integrate_profile", "locate_event",
    "rayleigh_quotient", "resample", "rme_residual", "second_variation_E",
    "second_variation_G", "second_variation_H", "shoot_psi", "solve_dirichlet_spectrum",
    "solve_h", "surface_integral", "thmbif_verdict",
]
