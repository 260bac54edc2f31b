"""Explicit N-wave solutions by generalized Backlund-Darboux transformation.

Core entry points
-----------------
SeedSpec, GBDTParams
    Seed system and transformation data.
propagate, transformed_potential, darboux_matrix
    Numeric GBDT path.
build_rational_solution, darboux_rational
    Exact polynomial path for a zero seed and nilpotent ``A``.
three_wave_map, bispectral_operator
    Three-wave form and spectral-variable operators.
"""

from .bispectral import (BispectralOperator, bispectral_operator,
                         bispectral_residual, right_action_residual)
from .config import RunConfig
from .engine import (CallableSeed, GBDTParams, GBDTState, SeedSpec, WaveSample,
                     ZeroSeed, check_inputs, complete_pi0, darboux_inverse,
                     darboux_matrix, dirac_view, propagate, propagate_grid,
                     transformed_fundamental, transformed_potential,
                     transformed_wave, validate_gbdt_params, validate_seed)
from .errors import GBDTError
from .linalg import cmat_solve
from .poly import MatrixPoly2, ScalarPoly2, nilpotent_exp_poly, poly_det_adj
from .rational import (DarbouxRational, RationalSolution,
                       build_rational_solution, darboux_rational,
                       shifted_polynomial_form)
from .threewave import (ThreeWaveFrame, real_fields, real_reduction_check,
                        three_wave_map, three_wave_residual)
from .verification import ResidualReport

__all__ = [
    "BispectralOperator",
    "CallableSeed",
    "DarbouxRational",
    "GBDTError",
    "GBDTParams",
    "GBDTState",
    "MatrixPoly2",
    "RationalSolution",
    "ResidualReport",
    "RunConfig",
    "ScalarPoly2",
    "SeedSpec",
    "ThreeWaveFrame",
    "WaveSample",
    "ZeroSeed",
    "bispectral_operator",
    "bispectral_residual",
    "build_rational_solution",
    "check_inputs",
    "cmat_solve",
    "complete_pi0",
    "darboux_inverse",
    "darboux_matrix",
    "darboux_rational",
    "dirac_view",
    "nilpotent_exp_poly",
    "poly_det_adj",
    "propagate",
    "propagate_grid",
    "real_fields",
    "real_reduction_check",
    "right_action_residual",
    "shifted_polynomial_form",
    "three_wave_map",
    "three_wave_residual",
    "transformed_fundamental",
    "transformed_potential",
    "transformed_wave",
    "validate_gbdt_params",
    "validate_seed",
]
__version__ = "0.1.0"
