"""Exhaustive plan search, the reference the exact solver is checked against."""

import math
from collections import Counter
from collections.abc import Sequence

from src.domain.entities.catalog import Query
from src.domain.entities.planning import (
    CandidateSet,
    GroupKey,
    PartitionedProbeOrder,
    ProbeStep,
    SelectedPlan,
    SubqueryKey,
)
from src.domain.exceptions import InfeasibleModelError, TooLargeError
from src.domain.services.cost_model import CostContext, step_cost
from src.domain.services.plan_extraction import assemble_plan
from src.shared.config import settings


def combination_bound(queries: Sequence[Query], candidates: CandidateSet) -> int:
    """Upper bound on the combinations ``brute_force_plan`` enumerates."""
    restricted = candidates.restricted_to({query.id for query in queries})
    bound = math.prod(len(orders) for orders in restricted.query_orders.values())
    return bound * math.prod(len(orders) for orders in restricted.subquery_orders.values() if orders)


def brute_force_plan(
    queries: Sequence[Query],
    candidates: CandidateSet,
    ctx: CostContext,
    limit: int | None = None,
) -> SelectedPlan:
    """Cheapest plan by full enumeration.

    Every combination of one order per ``(query, start)`` is closed over the
    subquery orders its MIR hops require, and costed as the sum of the
    distinct steps' costs. Ties keep the first combination in enumeration order.

    Raises:
        TooLargeError: If the combination bound exceeds ``limit``
            (default ``settings.oracle_combination_limit``).
        InfeasibleModelError: If some ``(query, start)`` has no candidate.
    """
    limit = settings.oracle_combination_limit if limit is None else limit
    bound = combination_bound(queries, candidates)
    if bound > limit:
        raise TooLargeError(bound, limit)

    groups: list[tuple[GroupKey, tuple[PartitionedProbeOrder, ...]]] = []
    for query in queries:
        for start in sorted(query.relations):
            orders = candidates.query_orders.get((query.id, start), ())
            if not orders:
                raise InfeasibleModelError(f"q={query.id},start={start}")
            groups.append(((query.id, start), orders))

    costs: dict[ProbeStep, float] = {}
    steps_of: dict[PartitionedProbeOrder, list[ProbeStep]] = {}

    def steps(order: PartitionedProbeOrder) -> list[ProbeStep]:
        if order not in steps_of:
            steps_of[order] = order.steps()
            for step in steps_of[order]:
                if step not in costs:
                    costs[step] = step_cost(step, ctx)
        return steps_of[order]

    def requirements(order: PartitionedProbeOrder) -> list[SubqueryKey]:
        return [(hop, relation) for hop, _ in order.materialized_hops for relation in hop.sorted_relations]

    active: Counter[ProbeStep] = Counter()
    required: Counter[SubqueryKey] = Counter()
    chosen: dict[GroupKey, PartitionedProbeOrder] = {}
    chosen_sub: dict[SubqueryKey, PartitionedProbeOrder] = {}
    best: dict = {"cost": math.inf, "orders": None, "sub": None}

    def take(order: PartitionedProbeOrder) -> None:
        active.update(steps(order))
        required.update(requirements(order))

    def release(order: PartitionedProbeOrder) -> None:
        active.subtract(steps(order))
        required.subtract(requirements(order))

    def visit(index: int) -> None:
        open_keys = [key for key, count in required.items() if count > 0 and key not in chosen_sub]
        if open_keys:
            key = min(open_keys, key=lambda k: (k[0].sort_key, k[1]))
            for order in candidates.subquery_orders.get(key, ()):
                chosen_sub[key] = order
                take(order)
                visit(index)
                release(order)
                del chosen_sub[key]
            return
        if index < len(groups):
            key, orders = groups[index]
            for order in orders:
                chosen[key] = order
                take(order)
                visit(index + 1)
                release(order)
            del chosen[key]
            return
        cost = math.fsum(costs[step] for step, count in active.items() if count > 0)
        if cost < best["cost"]:
            best.update(cost=cost, orders=dict(chosen), sub=dict(chosen_sub))

    visit(0)
    if best["orders"] is None:
        raise InfeasibleModelError("no combination satisfies every MIR requirement")
    return assemble_plan(best["orders"], best["sub"], best["cost"])
