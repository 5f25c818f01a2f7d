"""Positive solutions of u'' + a(t) f(u) = 0 on (0, T) with u(0) = beta u(eta),
u(T) = alpha int_0^eta u(s) ds: parameter theory, linear kernel, nonlinear solvers
and numerical certificates."""

__version__ = "0.1.0"

from .checks import (
    CheckResult,
    LimitEstimate,
    ProofConstants,
    check_concavity,
    check_cone_bound,
    check_hypotheses,
    check_positivity,
    estimate_limits,
    nonexistence_probe,
    proof_constants,
)
from .expr import eval_expr, parse_expr, to_text
from .grid import GridFunction, Mesh, build_mesh, double_cumulative, moments
from .kernel import InitialData, initial_data, solve_linear
from .params import ParamClassification, ProblemSpec, Region, classify, compute_denominator, cone_gamma
from .solver import (
    Residuals,
    SolveReport,
    SolverOptions,
    apply_A,
    newton_solve,
    picard_solve,
    residuals,
    solve,
)

__all__ = [
    "CheckResult",
    "LimitEstimate",
    "ProofConstants",
    "check_concavity",
    "check_cone_bound",
    "check_hypotheses",
    "check_positivity",
    "estimate_limits",
    "nonexistence_probe",
    "proof_constants",
    "eval_expr",
    "parse_expr",
    "to_text",
    "GridFunction",
    "Mesh",
    "build_mesh",
    "double_cumulative",
    "moments",
    "InitialData",
    "initial_data",
    "solve_linear",
    "ParamClassification",
    "ProblemSpec",
    "Region",
    "classify",
    "compute_denominator",
    "cone_gamma",
    "Residuals",
    "SolveReport",
    "SolverOptions",
    "apply_A",
    "newton_solve",
    "picard_solve",
    "residuals",
    "solve",
]
