"""Plan solver port.

Adapters select the cheapest plan of a catalog, exactly or by exhaustive
enumeration.
"""

from abc import ABC, abstractmethod

from src.domain.entities.catalog import Catalog
from src.domain.entities.ilp import OptimizationOutcome
from src.domain.entities.planning import PlannerOptions


class PlanSolverPort(ABC):
    """Abstract interface for plan selection."""

    @abstractmethod
    def solve(
        self,
        catalog: Catalog,
        options: PlannerOptions | None = None,
        time_limit_ms: int | None = None,
    ) -> OptimizationOutcome:
        """Select one probe order per query and start relation.

        Args:
            catalog: Queries, relations and statistics to plan for.
            options: Candidate-generation switches.
            time_limit_ms: Wall-clock limit, where the solver supports one.

        Returns:
            The outcome with the selected plan, status and model sizes.
        """
        pass
