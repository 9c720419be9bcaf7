"""Formal normal forms of saddle-node vector fields and their Borel-Laplace k-sums."""

from __future__ import annotations

__version__ = "0.1.0"

from .borel import BorelSeries, GevreyFit, borel_transform, gevrey_fit, inverse_borel
from .borel_solver import fixed_point_solve
from .conjugacy import NormalFormResult, conjugacy_residual, solve_conjugacy
from .convolution import QuadratureConfig, convolve_monomial, convolve_numeric, convolve_series
from .hopf import (HopfProblem, check_property_P, complexify, hopf_normal_form,
                   hopf_resonance_sets, invariant_manifold, polar_form)
from .jordan import dense_oracle, enumerate_paths, phi_backward_induction, phi_n_solution
from .laplace import SectorSpec, ksum_evaluate, laplace_numeric
from .norms import C_k, norm_mu_k, q_k, verify_borel_bound, verify_conv_bound
from .series import TruncatedSeries, add, compose_shift, mul, partial_z, x_weighted_derivative
from .spectrum import (ResonanceSet, Spectrum, ValidationError, divisor_lower_bound,
                       explicit_resonance_set, minimal_resonance_set)

__all__ = [
    "BorelSeries", "GevreyFit", "borel_transform", "gevrey_fit", "inverse_borel",
    "fixed_point_solve",
    "NormalFormResult", "conjugacy_residual", "solve_conjugacy",
    "QuadratureConfig", "convolve_monomial", "convolve_numeric", "convolve_series",
    "HopfProblem", "check_property_P", "complexify", "hopf_normal_form", "hopf_resonance_sets",
    "invariant_manifold", "polar_form",
    "dense_oracle", "enumerate_paths", "phi_backward_induction", "phi_n_solution",
    "SectorSpec", "ksum_evaluate", "laplace_numeric",
    "C_k", "norm_mu_k", "q_k", "verify_borel_bound", "verify_conv_bound",
    "TruncatedSeries", "add", "compose_shift", "mul", "partial_z", "x_weighted_derivative",
    "ResonanceSet", "Spectrum", "ValidationError", "divisor_lower_bound",
    "explicit_resonance_set", "minimal_resonance_set",
]
