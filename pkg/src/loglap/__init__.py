"""loglap: logarithmic-Laplacian forms, spectrum, and the first Fucik curve."""

import os as _os

# deterministic mode pins BLAS to one thread; callers may override via env
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS",
             "NUMEXPR_NUM_THREADS"):
    _os.environ.setdefault(_var, "1")

__version__ = "0.1.0"

from .constants import (DimensionalConstants, c_of_N, d_of_N, digamma,  # noqa: E402
                        euler_gamma, kernel_values, rho_of_N)
from .discretization import (Domain, FormMatrices, Mesh, QuadratureError,  # noqa: E402
                             assemble, build_mesh, cross_term, evaluate_form,
                             evaluate_form_direct, h_omega, negative_part,
                             positive_part)
from .quadrature import QuadratureSpec  # noqa: E402
from .spectral import EigenPair, SignReport, classify_sign, solve_eig, weighted_solve  # noqa: E402
from .fucik import (CurveResult, FucikFunctional, FucikPoint, MountainPassOptions,  # noqa: E402
                    PathEnsemble, TraceOptions, VerifyResult, constrained_gradient,
                    energy, initial_path, lagrange_multiplier, mountain_pass,
                    trace_curve, verify_pair)
from .fractional import FractionalForm, assemble_fractional, expansion_error  # noqa: E402
from .nonresonance import (MountainPassResult, NonlinearitySpec,  # noqa: E402
                           NonresonanceOptions, SpecValidationError, default_spec,
                           endpoint_scale, j_minimax, psi, psi_gradient,
                           solve_nonresonance, validate_spec)
from .config import RunConfig, ConfigError, config_hash, emit_config, parse_config  # noqa: E402

__all__ = [
    "DimensionalConstants", "c_of_N", "d_of_N", "digamma", "euler_gamma",
    "kernel_values", "rho_of_N",
    "Domain", "Mesh", "FormMatrices", "QuadratureError", "QuadratureSpec",
    "assemble", "build_mesh", "cross_term", "evaluate_form",
    "evaluate_form_direct", "h_omega", "negative_part", "positive_part",
    "EigenPair", "SignReport", "classify_sign", "solve_eig", "weighted_solve",
    "CurveResult", "FucikFunctional", "FucikPoint", "MountainPassOptions",
    "PathEnsemble", "TraceOptions", "VerifyResult", "constrained_gradient",
    "energy", "initial_path", "lagrange_multiplier", "mountain_pass",
    "trace_curve", "verify_pair",
    "FractionalForm", "assemble_fractional", "expansion_error",
    "MountainPassResult", "NonlinearitySpec", "NonresonanceOptions",
    "SpecValidationError", "default_spec", "endpoint_scale", "j_minimax",
    "psi", "psi_gradient", "solve_nonresonance", "validate_spec",
    "RunConfig", "ConfigError", "config_hash", "emit_config", "parse_config",
]
