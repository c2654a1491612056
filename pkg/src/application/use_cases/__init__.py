"""Application use cases."""

from src.application.use_cases.generation_use_cases import GenerateTraceUseCase, GenerateWorkloadUseCase
from src.application.use_cases.optimization_use_cases import OptimizeWorkloadUseCase, RunBenchmarkUseCase
from src.application.use_cases.simulation_use_cases import OracleJoinUseCase, SimulateWorkloadUseCase

__all__ = [
    "OptimizeWorkloadUseCase",
    "RunBenchmarkUseCase",
    "SimulateWorkloadUseCase",
    "OracleJoinUseCase",
    "GenerateWorkloadUseCase",
    "GenerateTraceUseCase",
]
