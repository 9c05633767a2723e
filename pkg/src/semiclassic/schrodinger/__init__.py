"""Crank-Nicolson B-spline Galerkin solver with a posteriori control."""
from ..core.splines import SplineSpace
from .adaptive import EstimatorReport, SolveTrace, solve_adaptive, solve_fixed
from .cn import (
    BandedLU,
    CNPropagator,
    DiscreteOperator,
    NumericError,
    SingularPointError,
    assemble,
    cn_step,
    potential_matrix,
)
from .eoc import (
    EOCTable,
    ValidationProblem,
    double_well_problem,
    eoc,
    nonsmooth_problem,
    run_eoc,
    trap_problem,
)
from .estimators import CrossNorm, estimate_step, projection_error, time_indicator

__all__ = [
    "SplineSpace", "EstimatorReport", "SolveTrace", "solve_adaptive", "solve_fixed",
    "BandedLU", "CNPropagator", "DiscreteOperator", "NumericError", "SingularPointError",
    "assemble", "cn_step", "potential_matrix", "CrossNorm", "estimate_step",
    "projection_error", "time_indicator", "EOCTable", "ValidationProblem",
    "double_well_problem", "eoc", "nonsmooth_problem", "run_eoc", "trap_problem",
]
