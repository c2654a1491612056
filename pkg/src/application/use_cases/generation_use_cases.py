"""Synthetic workload and trace generation use cases."""

from src.application.interfaces.workload_port import TraceRepositoryPort, WorkloadRepositoryPort
from src.domain.entities.bench import WorkloadConfig
from src.domain.entities.catalog import Catalog
from src.domain.entities.runtime import BaseTuple
from src.domain.services.generators import gen_trace, gen_workload


class GenerateWorkloadUseCase:
    """Use case for generating and persisting a seeded workload."""

    def __init__(self, repository: WorkloadRepositoryPort):
        """Initialize the use case with a repository.

        Args:
            repository: Where the workload is written.
        """
        self.repository = repository

    def execute(self, config: WorkloadConfig) -> Catalog:
        """Generate a workload.

        Args:
            config: Generator parameters and seed.

        Returns:
            The generated catalog.

        Raises:
            GenerationExhaustedError: If not enough distinct queries were found.
        """
        catalog = gen_workload(config)
        self.repository.save(catalog)
        return catalog


class GenerateTraceUseCase:
    """Use case for generating and persisting a seeded trace."""

    def __init__(self, repository: TraceRepositoryPort):
        """Initialize the use case with a repository.

        Args:
            repository: Where the trace is written.
        """
        self.repository = repository

    def execute(self, catalog: Catalog, duration: int, seed: int) -> list[BaseTuple]:
        """Generate arrivals for ``duration`` ticks.

        Args:
            catalog: The workload whose rates and selectivities the trace realizes.
            duration: Number of ticks.
            seed: Generator seed.

        Returns:
            The trace events.
        """
        trace = gen_trace(catalog, duration, seed)
        self.repository.save(trace)
        return trace
