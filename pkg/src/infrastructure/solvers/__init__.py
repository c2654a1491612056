"""Plan solver adapters."""

from src.infrastructure.solvers.plan_solvers import BruteForcePlanSolver, ExactPlanSolver

__all__ = ["ExactPlanSolver", "BruteForcePlanSolver"]
