"""Heston model pricing, analytical gradients and fast surface calibration."""

from .blackscholes import (BsQuote, DeltaConvention, bs_delta, bs_price,
                           bs_vega, implied_vol, strike_from_delta)
from .calibrator import (CalibrationReport, LmOptions, LmState, StopReason,
                         TraceEntry, calibrate, gauss_newton_hessian, lm_step,
                         residual_vector)
from .charfn import (CharFnTerms, Representation, SpiralDiagnostic, cf_terms,
                     char_fn, find_discontinuities, spiral_diagnostic)
from .errors import (DomainError, EvaluationOverflowError, FileFormatError,
                     HestonError, NoSolutionError, SingularSystemError)
from .estimator import HestonCalibrator
from .gradient import (GradientVector, HFragments, fd_gradient, h_fragments,
                       h_vector, integrand_profile, jacobian, price_gradient)
from .harness import (SurfaceGrid, ValidationStats, draw_random_params,
                      dump_contour, dump_integrand_convergence,
                      generate_surface, perturb_params, quadrature_error_study,
                      realistic_cases, run_realistic_case, run_validation)
from .params import HestonParams, MarketContext
from .pricer import (EVAL_COUNTS, OptionSpec, OptionType, Quote, QuoteChain,
                     TruncationBound, integrand_block, price_call, price_chain,
                     price_option, price_put, truncation_bound)
from .quadrature import (QuadratureRule, RuleKind, default_rule,
                         gauss_legendre_rule, integrate_vectorized, make_rule,
                         trapezoid_rule)

__version__ = "0.1.0"

__all__ = [
    "BsQuote", "CalibrationReport", "CharFnTerms", "DeltaConvention",
    "DomainError", "EVAL_COUNTS", "EvaluationOverflowError", "FileFormatError",
    "GradientVector", "HFragments", "HestonCalibrator", "HestonError",
    "HestonParams", "LmOptions", "LmState", "MarketContext", "NoSolutionError",
    "OptionSpec", "OptionType", "QuadratureRule", "Quote", "QuoteChain",
    "Representation", "RuleKind", "SingularSystemError", "SpiralDiagnostic",
    "StopReason", "SurfaceGrid", "TraceEntry", "TruncationBound",
    "ValidationStats", "bs_delta", "bs_price", "bs_vega", "calibrate",
    "cf_terms", "char_fn", "default_rule", "draw_random_params",
    "dump_contour", "dump_integrand_convergence", "fd_gradient",
    "find_discontinuities", "gauss_legendre_rule", "gauss_newton_hessian",
    "generate_surface", "h_fragments", "h_vector", "implied_vol",
    "integrand_block", "integrand_profile", "integrate_vectorized",
    "jacobian", "lm_step", "make_rule", "perturb_params", "price_call",
    "price_chain", "price_gradient", "price_option", "price_put",
    "quadrature_error_study", "realistic_cases", "residual_vector",
    "run_realistic_case", "run_validation", "spiral_diagnostic",
    "strike_from_delta", "trapezoid_rule", "truncation_bound",
]
