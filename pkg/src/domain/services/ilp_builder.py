"""Construction of the multi-query ILP.

Rows per model:

* one-of: ``sum x = 1`` over the candidates of each ``(query, start)``;
* subquery: ``sum x' - x >= 0`` per ``(mir, input)`` group for every order
  probing the MIR, plus the export-only row ``-k x + sum x' >= 0`` with
  ``k`` the group size;
* at-most-one: ``-sum x' >= -1`` per ``(mir, input)`` group;
* cost: ``-PCost(o) x_o + sum StepCost(s) y_s >= 0`` per order ``o``.

Equal steps get one shared ``y`` variable whatever order they come from.
"""

import hashlib
import math
from collections.abc import Sequence

from src.domain.entities.catalog import Query
from src.domain.entities.ilp import Comparator, Constraint, ConstraintFamily, IlpModel, Variable, VariableKind
from src.domain.entities.planning import CandidateSet, GroupKey, Mir, PartitionedProbeOrder, ProbeStep, SubqueryKey
from src.domain.services.cost_model import CostContext, step_cost
from src.shared.logging import get_logger

logger = get_logger(__name__)


def digest(text: str, size: int = 4) -> str:
    return hashlib.blake2b(text.encode("utf-8"), digest_size=size).hexdigest()


def mir_label(mir: Mir) -> str:
    return mir.label


def order_variable_name(group: GroupKey | SubqueryKey, index: int) -> str:
    owner, start = group
    query = f"mir:{mir_label(owner)}" if isinstance(owner, Mir) else owner
    return f"x[q={query},start={start},idx={index}]"


def step_variable_name(step: ProbeStep) -> str:
    return f"y[{digest(repr(step.sort_key), 6)}]"


def _group_label(group: GroupKey | SubqueryKey) -> str:
    owner, start = group
    if isinstance(owner, Mir):
        return f"mir={mir_label(owner)},input={start}"
    return f"q={owner},start={start}"


class _ModelBuilder:
    def __init__(self, candidates: CandidateSet, ctx: CostContext):
        self.ctx = ctx
        self.model = IlpModel(candidates=candidates)
        self.step_names: dict[ProbeStep, str] = {}
        self.steps: list[tuple[str, ProbeStep]] = []
        self.taken: set[str] = set()
        self.order_names: dict[str, PartitionedProbeOrder] = {}

    def step_variable(self, step: ProbeStep) -> str:
        name = self.step_names.get(step)
        if name is not None:
            return name
        name = base = step_variable_name(step)
        suffix = 1
        while name in self.taken:
            name = f"{base[:-1]}~{suffix}]"
            suffix += 1
        self.taken.add(name)
        self.step_names[step] = name
        self.steps.append((name, step))
        self.model.goal[name] = step_cost(step, self.ctx)
        return name

    def order_variable(self, name: str, kind: VariableKind, order: PartitionedProbeOrder) -> None:
        self.model.variables[name] = Variable(name, kind, order=order)
        self.order_names[name] = order
        self.model.order_steps[name] = tuple(self.step_variable(step) for step in order.steps())
        required = {(hop, relation) for hop, _ in order.materialized_hops for relation in hop.sorted_relations}
        self.model.requirements[name] = tuple(sorted(required, key=lambda key: (key[0].sort_key, key[1])))

    def finish(self) -> IlpModel:
        for name, step in self.steps:
            self.model.variables[name] = Variable(name, VariableKind.STEP, step=step)
        return self.model


def build_ilp(queries: Sequence[Query], candidates: CandidateSet, ctx: CostContext) -> IlpModel:
    """Build the ILP choosing one probe order per ``(query, start)``.

    Only subquery groups reachable from the given queries' candidates enter
    the model.
    """
    builder = _ModelBuilder(candidates, ctx)
    model = builder.model

    for query in queries:
        for start in sorted(query.relations):
            key = (query.id, start)
            orders = candidates.query_orders.get(key, ())
            names = tuple(order_variable_name(key, index) for index in range(len(orders)))
            for name, order in zip(names, orders):
                builder.order_variable(name, VariableKind.ORDER, order)
            model.groups[key] = names

    reachable = candidates.restricted_to({query.id for query in queries})
    for sub_key, orders in reachable.subquery_orders.items():
        names = tuple(order_variable_name(sub_key, index) for index in range(len(orders)))
        for name, order in zip(names, orders):
            builder.order_variable(name, VariableKind.SUBQUERY, order)
        model.subquery_groups[sub_key] = names

    for key, names in model.groups.items():
        model.constraints.append(
            Constraint(
                f"one_of[{_group_label(key)}]",
                ConstraintFamily.ONE_OF,
                tuple((name, 1.0) for name in names),
                Comparator.EQ,
                1.0,
            )
        )

    for name, required in model.requirements.items():
        for sub_key in required:
            members = model.subquery_groups.get(sub_key, ())
            label = f"{name},{_group_label(sub_key)}"
            model.constraints.append(
                Constraint(
                    f"need[{label}]",
                    ConstraintFamily.SUBQUERY,
                    ((name, -1.0), *((member, 1.0) for member in members)),
                    Comparator.GE,
                    0.0,
                )
            )
            model.constraints.append(
                Constraint(
                    f"need_all[{label}]",
                    ConstraintFamily.SUBQUERY_AGGREGATED,
                    ((name, -float(len(members))), *((member, 1.0) for member in members)),
                    Comparator.GE,
                    0.0,
                    binding=False,
                )
            )

    for sub_key, members in model.subquery_groups.items():
        model.constraints.append(
            Constraint(
                f"at_most_one[{_group_label(sub_key)}]",
                ConstraintFamily.AT_MOST_ONE,
                tuple((member, -1.0) for member in members),
                Comparator.GE,
                -1.0,
            )
        )

    for name, step_names in model.order_steps.items():
        costs = [(step, model.goal[step]) for step in step_names]
        pcost = math.fsum(cost for _, cost in costs)
        model.constraints.append(
            Constraint(
                f"cost[{name}]",
                ConstraintFamily.COST,
                ((name, -pcost), *costs),
                Comparator.GE,
                0.0,
            )
        )

    builder.finish()
    logger.debug(
        "ilp_built",
        variables=len(model.variables),
        orders=len(model.order_variables),
        steps=len(model.goal),
        constraints=len(model.constraints),
    )
    return model
