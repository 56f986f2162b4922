"""Sum-latency allocation: SQP solver, reduced-form oracle, constraint functions."""

from .problem import (POWER_FLOOR, ConstraintGradients, ConstraintValues, LatencyProblem,
                      constraint_functions, constraint_gradients)
from .reduced import reduced_solve
from .report import Allocation, SolveReport
from .sqp import SqpOptions, build_report, kkt_residual, sqp_solve

__all__ = [
    "POWER_FLOOR", "Allocation", "ConstraintGradients", "ConstraintValues", "LatencyProblem",
    "SolveReport", "SqpOptions", "build_report", "constraint_functions", "constraint_gradients",
    "kkt_residual", "reduced_solve", "sqp_solve",
]
