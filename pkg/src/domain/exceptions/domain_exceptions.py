"""Domain exceptions for probeplan.

This module contains every domain-specific exception raised while validating
workloads, planning, solving, compiling topologies and simulating them.
"""


class DomainError(Exception):
    """Base domain exception.

    All domain-specific exceptions should inherit from this class.
    """

    def __init__(self, message: str = "A domain error occurred"):
        self.message = message
        super().__init__(self.message)


# =============================================================================
# Workload validation
# =============================================================================


class WorkloadValidationError(DomainError):
    """Base class for errors caused by an invalid workload description."""


class InvalidRelationError(WorkloadValidationError):
    """Raised when a relation definition violates its invariants.

    Args:
        relation: Name of the relation.
        reason: What is wrong with it.
    """

    def __init__(self, relation: str, reason: str):
        self.relation = relation
        self.reason = reason
        super().__init__(f"Invalid relation {relation!r}: {reason}")


class InvalidQueryError(WorkloadValidationError):
    """Raised when a query is structurally invalid (e.g. fewer than two relations).

    Args:
        query_id: Identifier of the query.
        reason: What is wrong with it.
    """

    def __init__(self, query_id: str, reason: str):
        self.query_id = query_id
        self.reason = reason
        super().__init__(f"Invalid query {query_id!r}: {reason}")


class UnknownRelationError(WorkloadValidationError):
    """Raised when a query references a relation missing from the catalog.

    Args:
        query_id: Identifier of the offending query.
        relation: The unknown relation name.
    """

    def __init__(self, query_id: str, relation: str):
        self.query_id = query_id
        self.relation = relation
        super().__init__(f"Query {query_id!r} references unknown relation {relation!r}")


class UnknownAttributeError(WorkloadValidationError):
    """Raised when a predicate references an attribute its relation does not have.

    Args:
        query_id: Identifier of the offending query.
        attribute: The unknown attribute as ``relation.attribute``.
    """

    def __init__(self, query_id: str, attribute: str):
        self.query_id = query_id
        self.attribute = attribute
        super().__init__(f"Query {query_id!r} references unknown attribute {attribute!r}")


class DisconnectedQueryError(WorkloadValidationError):
    """Raised when a query's join graph is not connected (cross product).

    Args:
        query_id: Identifier of the offending query.
    """

    def __init__(self, query_id: str):
        self.query_id = query_id
        super().__init__(f"Query {query_id!r} is not connected; cross products are not supported")


class SelfJoinError(WorkloadValidationError):
    """Raised when a predicate joins a relation with itself.

    Args:
        query_id: Identifier of the offending query.
        relation: The self-joined relation.
    """

    def __init__(self, query_id: str, relation: str):
        self.query_id = query_id
        self.relation = relation
        super().__init__(f"Query {query_id!r} joins relation {relation!r} with itself")


class DuplicateQueryIdError(WorkloadValidationError):
    """Raised when two different queries share an identifier.

    Args:
        query_id: The duplicated identifier.
    """

    def __init__(self, query_id: str):
        self.query_id = query_id
        super().__init__(f"Query id already in use: {query_id!r}")


# =============================================================================
# Cost model
# =============================================================================


class MissingStatisticError(DomainError):
    """Raised when a cost estimate needs a statistic that has no entry and no default.

    Args:
        subject: The relation or predicate lacking a statistic.
    """

    def __init__(self, subject: str):
        self.subject = subject
        super().__init__(f"No statistic available for {subject}")


# =============================================================================
# Optimization
# =============================================================================


class TooLargeError(DomainError):
    """Raised when the brute-force plan search exceeds its combination bound.

    Args:
        combinations: Upper bound on the number of combinations.
        limit: The configured bound.
    """

    def __init__(self, combinations: int, limit: int):
        self.combinations = combinations
        self.limit = limit
        super().__init__(f"Plan search space of {combinations} combinations exceeds the limit of {limit}")


class InfeasibleModelError(DomainError):
    """Raised when an ILP model has no feasible assignment.

    Args:
        group: The choice group that could not be satisfied.
    """

    def __init__(self, group: str):
        self.group = group
        super().__init__(f"ILP model is infeasible: no candidate for {group}")


class InconsistentSolutionError(DomainError):
    """Raised when a solution cannot be turned into a valid plan.

    Args:
        reason: Which plan invariant the solution violates.
    """

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(f"Inconsistent solution: {reason}")


# =============================================================================
# Topology and runtime
# =============================================================================


class UnroutableEdgeError(DomainError):
    """Raised when a tuple arrives on an edge without a registered rule.

    Args:
        edge: The edge label.
    """

    def __init__(self, edge: str):
        self.edge = edge
        super().__init__(f"No rule registered for edge {edge!r}")


class UnknownEpochError(DomainError):
    """Raised when a tuple targets an epoch that has no configuration.

    Args:
        epoch: The epoch id.
    """

    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"Epoch {epoch} has no configuration")


class UnknownQueryError(DomainError):
    """Raised when removing a query that is not registered.

    Args:
        query_id: The unknown query id.
    """

    def __init__(self, query_id: str):
        self.query_id = query_id
        super().__init__(f"Query not registered: {query_id!r}")


class GenerationExhaustedError(DomainError):
    """Raised when the workload generator cannot find enough distinct queries.

    Args:
        requested: Number of queries requested.
        produced: Number of distinct queries found before the retry bound.
    """

    def __init__(self, requested: int, produced: int):
        self.requested = requested
        self.produced = produced
        super().__init__(f"Generated only {produced} distinct queries out of {requested} requested")
