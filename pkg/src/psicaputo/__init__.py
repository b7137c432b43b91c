"""Numerical psi-Caputo fractional calculus and a solver for coupled four-point
boundary value problems of orders in (1, 2)."""

from .bvp import (ResidualReport, SolutionPair, apply_T, picard_solve, residual_report,
                  solve_linear_bvp)
from .calculus import (FracOrder, power_rule, psi_caputo_derivative, psi_rl_derivative,
                       psi_rl_integral, psi_seq_derivative)
from .collocation import CollocationSystem, DiffReport, collocation_solve, cross_validate
from .conditions import (ConditionReport, ConstantEstimateWarning, ConstantSet,
                         condition_report, estimate_constants, sup_bounds)
from .config import SolverOptions, parse_config
from .errors import (ConfigError, ConvergenceError, EvaluationError, ExpressionError,
                     InputError, NumericalError, PsiCaputoError, SingularProblemError,
                     UnsupportedOperationError)
from .expression import diff_expr, eval_expr, parse, to_string
from .problem import BvpProblem, GridFunction, compute_deltas
from .psi import PsiSpec, ValidationReport, validate_psi
from .quadrature import adaptive_integral, jacobi_rule, psi_weighted_integral

__version__ = "0.1.0"

__all__ = [
    "BvpProblem", "CollocationSystem", "ConditionReport", "ConfigError", "ConstantEstimateWarning",
    "ConstantSet", "ConvergenceError", "DiffReport", "EvaluationError", "ExpressionError",
    "FracOrder", "GridFunction", "InputError", "NumericalError", "PsiCaputoError", "PsiSpec",
    "ResidualReport", "SingularProblemError", "SolutionPair", "SolverOptions",
    "UnsupportedOperationError", "ValidationReport", "adaptive_integral", "apply_T",
    "collocation_solve", "compute_deltas", "condition_report", "cross_validate", "diff_expr",
    "estimate_constants", "eval_expr", "jacobi_rule", "parse", "parse_config", "picard_solve",
    "power_rule", "psi_caputo_derivative", "psi_rl_derivative", "psi_rl_integral",
    "psi_seq_derivative", "psi_weighted_integral", "residual_report", "solve_linear_bvp",
    "sup_bounds", "to_string", "validate_psi",
]
