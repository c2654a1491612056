"""Turning solver assignments into selected plans, and combining plans."""

from collections.abc import Mapping

from src.domain.entities.ilp import IlpModel, IlpSolution, SolveStatus
from src.domain.entities.planning import (
    GroupKey,
    MaterializedMir,
    Mir,
    Partition,
    PartitionedProbeOrder,
    SelectedPlan,
    SubqueryKey,
)
from src.domain.exceptions import InconsistentSolutionError
from src.shared.logging import get_logger

logger = get_logger(__name__)


def _partition_key(partition: Partition) -> tuple:
    return (partition is None, partition or ("", ""))


def assemble_plan(
    orders: Mapping[GroupKey, PartitionedProbeOrder],
    subquery_orders: Mapping[SubqueryKey, PartitionedProbeOrder],
    total_cost: float,
) -> SelectedPlan:
    """Build a plan from chosen orders, materializing every MIR hop.

    Raises:
        InconsistentSolutionError: If a probed MIR lacks a subquery order for one of its inputs.
    """
    partitions: dict[Mir, set[Partition]] = {}
    pending = list(orders.values())
    visited: set[Mir] = set()
    while pending:
        order = pending.pop()
        for hop, partition in order.materialized_hops:
            partitions.setdefault(hop, set()).add(partition)
            if hop in visited:
                continue
            visited.add(hop)
            for relation in hop.sorted_relations:
                sub_order = subquery_orders.get((hop, relation))
                if sub_order is None:
                    raise InconsistentSolutionError(f"MIR {hop.name} has no subquery order for input {relation}")
                pending.append(sub_order)

    materialized = {}
    for mir in sorted(partitions, key=lambda m: m.sort_key):
        materialized[mir] = MaterializedMir(
            mir=mir,
            partitions=tuple(sorted(partitions[mir], key=_partition_key)),
            orders=tuple(subquery_orders[(mir, relation)] for relation in mir.sorted_relations),
        )
    return SelectedPlan(orders=dict(sorted(orders.items())), materialized=materialized, total_cost=total_cost)


def extract_plan(model: IlpModel, solution: IlpSolution) -> SelectedPlan:
    """Collect the orders set to 1 into a plan.

    Subquery orders that no selected order needs are left out.

    Raises:
        InconsistentSolutionError: If the solution is infeasible, a ``(query, start)``
            does not select exactly one order, a required ``(mir, input)`` group does
            not select exactly one order, or a prefix step of a selected order is 0.
    """
    if solution.status is SolveStatus.INFEASIBLE:
        raise InconsistentSolutionError("the model has no feasible solution")
    assignment = solution.assignment

    def selected_in(names: tuple[str, ...], label: str) -> str:
        chosen = [name for name in names if assignment.get(name, 0)]
        if len(chosen) != 1:
            raise InconsistentSolutionError(f"{label} selects {len(chosen)} orders instead of one")
        return chosen[0]

    def check_steps(name: str) -> None:
        for step in model.order_steps.get(name, ()):
            if not assignment.get(step, 0):
                raise InconsistentSolutionError(f"step {step} of selected order {name} is not set")

    orders: dict[GroupKey, PartitionedProbeOrder] = {}
    required: list[SubqueryKey] = []
    for key, names in model.groups.items():
        name = selected_in(names, f"query {key[0]} start {key[1]}")
        check_steps(name)
        orders[key] = model.variables[name].order  # type: ignore[assignment]
        required.extend(model.requirements.get(name, ()))

    subquery_orders: dict[SubqueryKey, PartitionedProbeOrder] = {}
    while required:
        key = required.pop()
        if key in subquery_orders:
            continue
        name = selected_in(model.subquery_groups.get(key, ()), f"MIR {key[0].name} input {key[1]}")
        check_steps(name)
        subquery_orders[key] = model.variables[name].order  # type: ignore[assignment]
        required.extend(model.requirements.get(name, ()))

    plan = assemble_plan(orders, subquery_orders, solution.objective)
    logger.debug("plan_extracted", orders=len(plan.orders), materialized=len(plan.materialized))
    return plan


def merge_plans(first: SelectedPlan, second: SelectedPlan, total_cost: float | None = None) -> SelectedPlan:
    """Union of two plans; ``first`` wins per ``(query, start)`` and per ``(mir, input)``.

    The cost defaults to the sum of both plans' costs.
    """
    orders = {**second.orders, **first.orders}
    subquery_orders: dict[SubqueryKey, PartitionedProbeOrder] = {}
    for plan in (second, first):
        for mir, materialized in plan.materialized.items():
            for order in materialized.orders:
                subquery_orders[(mir, order.start_relation)] = order
    cost = first.total_cost + second.total_cost if total_cost is None else total_cost
    return assemble_plan(orders, subquery_orders, cost)
