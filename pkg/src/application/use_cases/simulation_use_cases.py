"""Simulation and reference-join use cases."""

from collections.abc import Sequence

from src.application.interfaces.solver_port import PlanSolverPort
from src.domain.entities.catalog import Catalog, Query
from src.domain.entities.ilp import OptimizationOutcome
from src.domain.entities.planning import PlannerOptions
from src.domain.entities.runtime import BaseTuple, ChangeKind, JoinResult, SimulationOptions, SimulationReport
from src.domain.services.join_oracle import oracle_join
from src.domain.services.simulator import run_simulation


class SimulateWorkloadUseCase:
    """Use case for running a workload over a trace in static or adaptive mode."""

    def __init__(self, solver: PlanSolverPort):
        """Initialize the use case with the solver used for (re)planning.

        Args:
            solver: The plan solver port implementation.
        """
        self.solver = solver

    def execute(self, catalog: Catalog, trace: Sequence[BaseTuple], options: SimulationOptions) -> SimulationReport:
        """Simulate the workload.

        Args:
            catalog: Relations, initial queries and configured statistics.
            trace: Arrival events.
            options: Mode, epoch length, seed, forced plans and query changes.

        Returns:
            Sorted results and run metrics.

        Raises:
            UnknownEpochError: If a tuple targets an unconfigured epoch.
            DuplicateQueryIdError: If a registration reuses a query id.
            UnknownQueryError: If a removal names an inactive query.
        """

        def planner(planned: Catalog, planner_options: PlannerOptions) -> OptimizationOutcome:
            return self.solver.solve(planned, planner_options, options.time_limit_ms)

        return run_simulation(catalog, trace, options, planner)


class OracleJoinUseCase:
    """Use case for computing reference join results by nested loops."""

    def execute(
        self,
        catalog: Catalog,
        trace: Sequence[BaseTuple],
        options: SimulationOptions | None = None,
    ) -> list[JoinResult]:
        """Join the trace for every query the workload ever contains.

        Args:
            catalog: Relations and initial queries.
            trace: Arrival events.
            options: When given, queries it registers are joined as well.

        Returns:
            Results sorted by query, tick and constituents.
        """
        queries: list[Query] = list(catalog.queries)
        if options is not None:
            queries.extend(
                change.query
                for change in options.query_changes
                if change.kind is ChangeKind.REGISTER and change.query is not None
            )
        return oracle_join(trace, queries, catalog.relations)
