"""proxsched: cost-aware inner-iteration scheduling for inexact proximal methods."""

from .bounds import BoundParams, parametric_bound, rate_bound_accelerated, rate_bound_basic
from .core import (
    CompositeProblem,
    CostModel,
    DimensionMismatchError,
    ErrorModel,
    Plan,
    Schedule,
    Trace,
    TraceRecord,
    epsilon_of_l,
    evaluate_objective,
    l_of_epsilon,
    schedule_cost,
)
from .planner import InfeasiblePlanError, PlanRequest, minimize_over_k, plan

__all__ = [
    "BoundParams",
    "CompositeProblem",
    "CostModel",
    "DimensionMismatchError",
    "ErrorModel",
    "InfeasiblePlanError",
    "Plan",
    "PlanRequest",
    "Schedule",
    "Trace",
    "TraceRecord",
    "epsilon_of_l",
    "evaluate_objective",
    "l_of_epsilon",
    "minimize_over_k",
    "parametric_bound",
    "plan",
    "rate_bound_accelerated",
    "rate_bound_basic",
    "schedule_cost",
]
