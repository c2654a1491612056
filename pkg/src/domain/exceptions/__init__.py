"""Domain exceptions module."""

from src.domain.exceptions.domain_exceptions import (
    DisconnectedQueryError,
    DomainError,
    DuplicateQueryIdError,
    GenerationExhaustedError,
    InconsistentSolutionError,
    InfeasibleModelError,
    InvalidQueryError,
    InvalidRelationError,
    MissingStatisticError,
    SelfJoinError,
    TooLargeError,
    UnknownAttributeError,
    UnknownEpochError,
    UnknownQueryError,
    UnknownRelationError,
    UnroutableEdgeError,
    WorkloadValidationError,
)

__all__ = [
    "DomainError",
    "WorkloadValidationError",
    "InvalidRelationError",
    "InvalidQueryError",
    "UnknownRelationError",
    "UnknownAttributeError",
    "DisconnectedQueryError",
    "SelfJoinError",
    "DuplicateQueryIdError",
    "MissingStatisticError",
    "TooLargeError",
    "InfeasibleModelError",
    "InconsistentSolutionError",
    "UnroutableEdgeError",
    "UnknownEpochError",
    "UnknownQueryError",
    "GenerationExhaustedError",
]
