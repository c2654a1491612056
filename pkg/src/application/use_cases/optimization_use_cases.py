"""Optimization and benchmark use cases.

These use cases coordinate plan solvers with the domain's candidate
generation, plan merging and workload generation.
"""

import math
from dataclasses import replace

from src.application.interfaces.solver_port import PlanSolverPort
from src.domain.entities.bench import BenchConfig, BenchReport, BenchRow
from src.domain.entities.catalog import Catalog
from src.domain.entities.ilp import ModelSize, OptimizationMode, OptimizationOutcome, SolveStatus
from src.domain.entities.planning import PlannerOptions, SelectedPlan
from src.domain.services.generators import gen_workload
from src.domain.services.plan_extraction import merge_plans
from src.shared.logging import get_logger

logger = get_logger(__name__)


class OptimizeWorkloadUseCase:
    """Use case for selecting the probe orders of a workload.

    Shared mode optimizes all queries together, counting each shared step
    once. Individual mode optimizes every query on its own and sums the
    per-query optima.
    """

    def __init__(self, solver: PlanSolverPort):
        """Initialize the use case with a solver.

        Args:
            solver: The plan solver port implementation.
        """
        self.solver = solver

    def execute(
        self,
        catalog: Catalog,
        mode: OptimizationMode = OptimizationMode.SHARED,
        options: PlannerOptions | None = None,
        time_limit_ms: int | None = None,
    ) -> OptimizationOutcome:
        """Optimize the catalog's queries.

        Args:
            catalog: The validated workload.
            mode: Shared or individual optimization.
            options: Candidate-generation switches.
            time_limit_ms: Solver limit per model.

        Returns:
            The outcome; in individual mode the plans are united, the cost is
            the sum of the per-query objectives and the model sizes are summed.

        Raises:
            InconsistentSolutionError: If a model has no feasible solution.
        """
        if mode is OptimizationMode.SHARED:
            outcome = self.solver.solve(catalog, options, time_limit_ms)
        else:
            outcome = self._individually(catalog, options, time_limit_ms)
        logger.info(
            "optimization_finished",
            mode=mode.value,
            status=outcome.status.value,
            cost=outcome.plan.total_cost,
            variables=outcome.size.variables,
        )
        return outcome

    def _individually(
        self,
        catalog: Catalog,
        options: PlannerOptions | None,
        time_limit_ms: int | None,
    ) -> OptimizationOutcome:
        plan = SelectedPlan(orders={})
        status = SolveStatus.OPTIMAL
        size = ModelSize()
        elapsed = 0.0
        costs = []
        for query in catalog.queries:
            outcome = self.solver.solve(catalog.with_queries([query]), options, time_limit_ms)
            plan = merge_plans(plan, outcome.plan)
            costs.append(outcome.plan.total_cost)
            size = size + outcome.size
            elapsed += outcome.solve_ms
            if outcome.status.severity > status.severity:
                status = outcome.status
        plan = replace(plan, total_cost=math.fsum(costs))
        return OptimizationOutcome(plan, status, size, elapsed)


class RunBenchmarkUseCase:
    """Use case for sweeping query counts and comparing individual and shared cost."""

    def __init__(self, solver: PlanSolverPort):
        """Initialize the use case with a solver.

        Args:
            solver: The plan solver port implementation.
        """
        self.optimizer = OptimizeWorkloadUseCase(solver)

    def execute(self, config: BenchConfig) -> BenchReport:
        """Run every sweep point ``config.repetitions`` times and keep medians.

        Args:
            config: The sweep definition.

        Returns:
            One row per query count.
        """
        options = PlannerOptions(materialize=config.materialize, partitioning=config.partitioning)
        rows = []
        for n_queries in config.n_queries:
            measured = [
                self._measure(gen_workload(config.workload(n_queries, repetition)), options, config.time_limit_ms)
                for repetition in range(config.repetitions)
            ]
            row = BenchRow.median_of(measured)
            logger.info(
                "bench_point",
                n_q=row.n_q,
                individual_cost=row.individual_cost,
                mqo_cost=row.mqo_cost,
                variables=row.variables,
                solve_ms=round(row.solve_ms, 3),
            )
            rows.append(row)
        return BenchReport(config, tuple(rows))

    def _measure(self, catalog: Catalog, options: PlannerOptions, time_limit_ms: int | None) -> BenchRow:
        individual = self.optimizer.execute(catalog, OptimizationMode.INDIVIDUAL, options, time_limit_ms)
        shared = self.optimizer.execute(catalog, OptimizationMode.SHARED, options, time_limit_ms)
        return BenchRow(
            n_q=len(catalog.queries),
            individual_cost=individual.plan.total_cost,
            mqo_cost=shared.plan.total_cost,
            variables=shared.size.variables,
            probe_orders=shared.size.probe_orders,
            solve_ms=shared.solve_ms,
        )
