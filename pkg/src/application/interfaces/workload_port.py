"""Ports for reading workloads and traces and for writing run outputs.

Infrastructure adapters implement these interfaces over concrete file formats.
"""

from abc import ABC, abstractmethod
from collections.abc import Sequence

from src.domain.entities.catalog import Catalog
from src.domain.entities.ilp import OptimizationMode, OptimizationOutcome
from src.domain.entities.planning import SelectedPlan
from src.domain.entities.runtime import BaseTuple, JoinResult, MetricsLog, QueryChange
from src.domain.entities.topology import Topology


class WorkloadRepositoryPort(ABC):
    """Abstract interface for workload persistence."""

    @abstractmethod
    def load(self) -> tuple[Catalog, tuple[QueryChange, ...]]:
        """Load and validate the workload.

        Returns:
            The validated catalog and the scheduled query changes (possibly empty).

        Raises:
            FileNotFoundError: If the workload does not exist.
            WorkloadValidationError: If the workload is invalid.
        """
        pass

    @abstractmethod
    def save(self, catalog: Catalog) -> None:
        """Persist a workload.

        Args:
            catalog: The workload to write.
        """
        pass


class TraceRepositoryPort(ABC):
    """Abstract interface for arrival traces."""

    @abstractmethod
    def load(self) -> list[BaseTuple]:
        """Load the trace, numbering events in file order.

        Returns:
            The trace events.
        """
        pass

    @abstractmethod
    def save(self, trace: Sequence[BaseTuple]) -> None:
        """Persist a trace.

        Args:
            trace: Events to write, in order.
        """
        pass


class PlanRepositoryPort(ABC):
    """Abstract interface for selected plans."""

    @abstractmethod
    def load(self, catalog: Catalog) -> SelectedPlan:
        """Load a plan previously written for ``catalog``.

        Args:
            catalog: The workload the plan's orders refer to.

        Returns:
            The selected plan.
        """
        pass

    @abstractmethod
    def save(
        self,
        outcome: OptimizationOutcome,
        catalog: Catalog,
        topology: Topology | None = None,
        mode: OptimizationMode | None = None,
    ) -> None:
        """Persist a plan together with its compiled topology summary.

        Args:
            outcome: The optimization outcome holding the plan, status and model sizes.
            catalog: The workload, used to cost the orders.
            topology: The plan's compiled topology.
            mode: How the plan was optimized.
        """
        pass


class ResultSinkPort(ABC):
    """Abstract interface for join results and metrics."""

    @abstractmethod
    def write_results(self, results: Sequence[JoinResult]) -> None:
        """Write join results in their sorted order."""
        pass

    @abstractmethod
    def write_metrics(self, metrics: MetricsLog) -> None:
        """Write the per-epoch snapshots followed by a summary of the run."""
        pass
