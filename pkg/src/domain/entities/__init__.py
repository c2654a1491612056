"""Domain entities module."""

from src.domain.entities.bench import BenchConfig, BenchReport, BenchRow, WorkloadConfig
from src.domain.entities.catalog import AttributeRef, Catalog, JoinPredicate, Query, Relation, Statistics
from src.domain.entities.ilp import IlpModel, IlpSolution, ModelSize, OptimizationOutcome, SolveStatus
from src.domain.entities.planning import (
    CandidateSet,
    Mir,
    PartitionedProbeOrder,
    PlannerOptions,
    ProbeOrder,
    ProbeStep,
    SelectedPlan,
)
from src.domain.entities.runtime import (
    BaseTuple,
    JoinResult,
    MetricsLog,
    QueryChange,
    SimulationMode,
    SimulationOptions,
    SimulationReport,
)
from src.domain.entities.topology import StoreKey, Topology

__all__ = [
    "AttributeRef",
    "Relation",
    "JoinPredicate",
    "Query",
    "Statistics",
    "Catalog",
    "Mir",
    "ProbeOrder",
    "ProbeStep",
    "PartitionedProbeOrder",
    "PlannerOptions",
    "CandidateSet",
    "SelectedPlan",
    "IlpModel",
    "IlpSolution",
    "SolveStatus",
    "ModelSize",
    "OptimizationOutcome",
    "StoreKey",
    "Topology",
    "BaseTuple",
    "JoinResult",
    "MetricsLog",
    "QueryChange",
    "SimulationMode",
    "SimulationOptions",
    "SimulationReport",
    "WorkloadConfig",
    "BenchConfig",
    "BenchRow",
    "BenchReport",
]
