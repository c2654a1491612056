"""Port definitions (abstract interfaces)."""

from src.application.interfaces.solver_port import PlanSolverPort
from src.application.interfaces.workload_port import (
    PlanRepositoryPort,
    ResultSinkPort,
    TraceRepositoryPort,
    WorkloadRepositoryPort,
)

__all__ = [
    "WorkloadRepositoryPort",
    "TraceRepositoryPort",
    "PlanRepositoryPort",
    "ResultSinkPort",
    "PlanSolverPort",
]
