"""Plan solver implementations.

This module implements the PlanSolverPort interface with the exact
branch-and-bound ILP solver and with exhaustive enumeration.
"""

import time

from src.application.interfaces.solver_port import PlanSolverPort
from src.domain.entities.catalog import Catalog
from src.domain.entities.ilp import ModelSize, OptimizationOutcome, SolveStatus
from src.domain.entities.planning import PlannerOptions
from src.domain.services.candidates import generate_candidates
from src.domain.services.cost_model import CostContext
from src.domain.services.optimizer import optimize_catalog
from src.domain.services.plan_oracle import brute_force_plan


class ExactPlanSolver(PlanSolverPort):
    """ILP implementation of PlanSolverPort.

    Builds the probe-order ILP and solves it by branch and bound. On
    timeout the best plan found so far is returned with status ``timeout``.

    Attributes:
        default_time_limit_ms: Limit used when a call passes none.
    """

    def __init__(self, default_time_limit_ms: int | None = None) -> None:
        """Initialize the solver.

        Args:
            default_time_limit_ms: Limit per solve; ``settings.solver_time_limit_ms`` when None.
        """
        self.default_time_limit_ms = default_time_limit_ms

    def solve(
        self,
        catalog: Catalog,
        options: PlannerOptions | None = None,
        time_limit_ms: int | None = None,
    ) -> OptimizationOutcome:
        limit = time_limit_ms if time_limit_ms is not None else self.default_time_limit_ms
        return optimize_catalog(catalog, options, limit)


class BruteForcePlanSolver(PlanSolverPort):
    """Enumeration implementation of PlanSolverPort.

    Tries every combination of candidate orders; the time limit is ignored
    and the size is bounded by ``limit`` combinations instead.
    """

    def __init__(self, limit: int | None = None) -> None:
        """Initialize the solver.

        Args:
            limit: Combination bound; ``settings.oracle_combination_limit`` when None.
        """
        self.limit = limit

    def solve(
        self,
        catalog: Catalog,
        options: PlannerOptions | None = None,
        time_limit_ms: int | None = None,
    ) -> OptimizationOutcome:
        """Select the cheapest plan by enumeration.

        Raises:
            TooLargeError: If the workload exceeds the combination bound.
            InfeasibleModelError: If a query and start relation has no candidate.
        """
        started = time.perf_counter()
        candidates = generate_candidates(catalog, options)
        plan = brute_force_plan(catalog.queries, candidates, CostContext.from_catalog(catalog), self.limit)
        restricted = candidates.restricted_to(set(catalog.query_ids))
        size = ModelSize(variables=0, probe_orders=restricted.order_count, constraints=0)
        elapsed = (time.perf_counter() - started) * 1000
        return OptimizationOutcome(plan, SolveStatus.OPTIMAL, size, elapsed)
