"""Numerical toolkit for alternating forms on periodic N-dimensional grids.

Operator algebra (wedge, star, coordinate insertion/contraction),
spectrally exact d / delta / Laplacian, weighted Sobolev norms, material
transformations, the half-space model with mirrors and traces, the
Hodge-Helmholtz splitting, and a probe harness for the associated
regularity estimates.
"""

from .fields import (FormField, GridSpec, Region, apply_R, apply_T,
                     hodge_star, l2_inner, multi_indices, norm,
                     split_tangential_normal, wedge)
from .spectral import (coderivative_delta, exterior_d, fourier,
                       fourier_inverse, gaffney_identity_check, laplacian,
                       spectral_sobolev_norm)
from .weights import BOLD, ROMAN, NormSpec, graph_norm, weighted_sobolev_norm
from .media import (AdmissibilityError, Transformation, make_transformation,
                    reconstruct_from_split, reflected_transform,
                    scalar_catalog)
from .halfspace import (HalfGridField, diff_quotient, mirror_Sd,
                        mirror_Sdelta, normal_derivative_reconstruct,
                        restrict_to_half, shift, stokes_pairing_residual,
                        trace_normal, trace_tangential)
from .decompose import (HodgeSplit, hodge_decompose, potential_for_exact,
                        solve_coderivative)
from .manufactured import (ManufacturedForm, generate_manufactured,
                           random_band_limited)
from .bridge import VectorFieldN3, form_to_vector, vector_to_form
from .probes import (ProbeReport, estimate_probe_interior,
                     estimate_probe_weighted, halfspace_probe,
                     run_identity_suite)

__version__ = "0.1.0"

__all__ = [
    "FormField", "GridSpec", "Region", "apply_R", "apply_T", "hodge_star",
    "l2_inner", "multi_indices", "norm", "split_tangential_normal", "wedge",
    "coderivative_delta", "exterior_d", "fourier", "fourier_inverse",
    "gaffney_identity_check", "laplacian", "spectral_sobolev_norm",
    "BOLD", "ROMAN", "NormSpec", "graph_norm", "weighted_sobolev_norm",
    "AdmissibilityError", "Transformation", "make_transformation",
    "reconstruct_from_split", "reflected_transform", "scalar_catalog",
    "HalfGridField", "diff_quotient", "mirror_Sd", "mirror_Sdelta",
    "normal_derivative_reconstruct", "restrict_to_half", "shift",
    "stokes_pairing_residual", "trace_normal", "trace_tangential",
    "HodgeSplit", "hodge_decompose", "potential_for_exact",
    "solve_coderivative", "ManufacturedForm", "generate_manufactured",
    "random_band_limited", "VectorFieldN3", "form_to_vector",
    "vector_to_form", "ProbeReport", "estimate_probe_interior",
    "estimate_probe_weighted", "halfspace_probe", "run_identity_suite",
]
