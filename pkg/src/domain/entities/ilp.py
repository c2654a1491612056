"""ILP model and solution entities."""

import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum

from src.domain.entities.planning import (
    CandidateSet,
    GroupKey,
    PartitionedProbeOrder,
    ProbeStep,
    SelectedPlan,
    SubqueryKey,
)


class VariableKind(str, Enum):
    """ORDER for query probe orders, SUBQUERY for MIR-producing orders, STEP for prefixes."""

    ORDER = "x"
    SUBQUERY = "x'"
    STEP = "y"


class Comparator(str, Enum):
    GE = ">="
    EQ = "="


class ConstraintFamily(str, Enum):
    ONE_OF = "one_of"
    SUBQUERY = "subquery"
    SUBQUERY_AGGREGATED = "subquery_aggregated"
    AT_MOST_ONE = "at_most_one"
    COST = "cost"


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    TIMEOUT = "timeout"

    @property
    def severity(self) -> int:
        return {"optimal": 0, "timeout": 1, "infeasible": 2}[self.value]


class OptimizationMode(str, Enum):
    """SHARED solves one model over all queries; INDIVIDUAL solves each query alone."""

    SHARED = "shared"
    INDIVIDUAL = "individual"


@dataclass(frozen=True)
class Variable:
    """A binary variable tagged with the order or step it stands for."""

    name: str
    kind: VariableKind
    order: PartitionedProbeOrder | None = None
    step: ProbeStep | None = None


@dataclass(frozen=True)
class Constraint:
    """A linear row ``sum(coefficient * variable) comparator rhs``.

    Non-binding rows are kept for export only; the solver and the
    feasibility check ignore them.
    """

    name: str
    family: ConstraintFamily
    coefficients: tuple[tuple[str, float], ...]
    comparator: Comparator
    rhs: float
    binding: bool = True

    def lhs(self, assignment: Mapping[str, int]) -> float:
        return math.fsum(coefficient * assignment.get(name, 0) for name, coefficient in self.coefficients)

    def is_satisfied(self, assignment: Mapping[str, int], tolerance: float = 1e-9) -> bool:
        value = self.lhs(assignment)
        slack = tolerance * max(1.0, abs(self.rhs), *(abs(c) for _, c in self.coefficients))
        if self.comparator is Comparator.EQ:
            return abs(value - self.rhs) <= slack
        return value >= self.rhs - slack


@dataclass
class IlpModel:
    """Binary program over probe-order variables and shared step variables.

    Besides the rows, the model keeps the structure the rows encode, which
    the exact solver searches over directly.

    Attributes:
        variables: Variables by name, in creation order.
        constraints: All rows, binding and export-only.
        goal: Step-variable coefficients of the minimization goal.
        candidates: The candidate set the model was built from.
        groups: Order variables per ``(query, start)``.
        subquery_groups: Subquery variables per ``(mir, input relation)``.
        order_steps: Step variables of each order variable's prefixes.
        requirements: Subquery groups each order variable needs installed.
    """

    variables: dict[str, Variable] = field(default_factory=dict)
    constraints: list[Constraint] = field(default_factory=list)
    goal: dict[str, float] = field(default_factory=dict)
    candidates: CandidateSet | None = None
    groups: dict[GroupKey, tuple[str, ...]] = field(default_factory=dict)
    subquery_groups: dict[SubqueryKey, tuple[str, ...]] = field(default_factory=dict)
    order_steps: dict[str, tuple[str, ...]] = field(default_factory=dict)
    requirements: dict[str, tuple[SubqueryKey, ...]] = field(default_factory=dict)

    @property
    def order_variables(self) -> list[str]:
        return [name for name, variable in self.variables.items() if variable.kind is not VariableKind.STEP]

    @property
    def step_variables(self) -> list[str]:
        return [name for name, variable in self.variables.items() if variable.kind is VariableKind.STEP]

    @property
    def binding_constraints(self) -> list[Constraint]:
        return [row for row in self.constraints if row.binding]

    def evaluate(self, assignment: Mapping[str, int]) -> float:
        """Goal value at ``assignment``."""
        return math.fsum(cost for name, cost in self.goal.items() if assignment.get(name, 0))

    def is_feasible(self, assignment: Mapping[str, int]) -> bool:
        return all(row.is_satisfied(assignment) for row in self.binding_constraints)


@dataclass(frozen=True)
class IlpSolution:
    """Solver outcome.

    Attributes:
        assignment: Value of every variable.
        objective: Goal value at the assignment (inf when infeasible).
        status: optimal, timeout (best incumbent) or infeasible.
        nodes: Search nodes explored.
        elapsed_ms: Wall time spent solving.
    """

    assignment: Mapping[str, int]
    objective: float
    status: SolveStatus
    nodes: int = 0
    elapsed_ms: float = 0.0

    def selected(self) -> list[str]:
        return sorted(name for name, value in self.assignment.items() if value)


@dataclass(frozen=True)
class ModelSize:
    variables: int = 0
    probe_orders: int = 0
    constraints: int = 0

    def __add__(self, other: "ModelSize") -> "ModelSize":
        return ModelSize(
            self.variables + other.variables,
            self.probe_orders + other.probe_orders,
            self.constraints + other.constraints,
        )


@dataclass(frozen=True)
class OptimizationOutcome:
    """Result of one optimization round.

    Attributes:
        plan: The selected plan; its ``total_cost`` is the optimized objective.
        status: Worst solver status over the solved models.
        size: Model sizes, summed over models in individual mode.
        solve_ms: Wall time of building and solving.
        model: The ILP model, when a single one was built.
    """

    plan: SelectedPlan
    status: SolveStatus
    size: ModelSize = field(default_factory=ModelSize)
    solve_ms: float = 0.0
    model: IlpModel | None = None
