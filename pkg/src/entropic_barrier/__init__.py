"""Entropic barrier on convex polytopes."""

__version__ = "0.1.0"

from .barrier import (BarrierPoint, ConjugationError, ScReport, barrier_eval, conjugate,  # noqa: E402
                      entropy_identity_check, sc_parameter_at, sc_sweep, third_order_check)
from .geometry import (Box, BodyError, ConvexBody, GuardError, HPolytope, Product, Simplex,  # noqa: E402
                       SimplexCell, VPolytope, chebyshev_center, contains, dimension, enumerate_vertices,
                       load_body, product, triangulate)
from .ipm import CentralPathTrace, central_path_point, exact_lp_oracle, solve_lp  # noqa: E402
from .loglaplace import (EvalConfig, LogLaplaceEval, divided_diff_exp, eval_exact, eval_mc,  # noqa: E402
                         evaluate, integrate_exp_simplex)
from .sampler import SamplerConfig, chord_sample_1d, estimate_moments, sample  # noqa: E402

__all__ = [
    "BarrierPoint", "BodyError", "Box", "CentralPathTrace", "ConjugationError", "ConvexBody", "EvalConfig",
    "GuardError", "HPolytope", "LogLaplaceEval", "Product", "SamplerConfig", "ScReport", "Simplex",
    "SimplexCell", "VPolytope", "barrier_eval", "central_path_point", "chebyshev_center", "chord_sample_1d",
    "conjugate", "contains", "dimension", "divided_diff_exp", "entropy_identity_check", "enumerate_vertices",
    "estimate_moments", "eval_exact", "eval_mc", "evaluate", "exact_lp_oracle", "integrate_exp_simplex",
    "load_body", "product", "sample", "sc_parameter_at", "sc_sweep", "solve_lp", "third_order_check",
    "triangulate",
]
