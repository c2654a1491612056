"""Cardinality estimation and the probe-cost model.

A probe step costs the expected size of the intermediate result probing
the step's target, scaled by the share of arrivals for which the start
relation arrives last (``1/j`` for step ``j``) and by the broadcast factor
chi of the target store.
"""

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

from src.domain.entities.catalog import Catalog, JoinPredicate, Query, Relation, Statistics
from src.domain.entities.planning import Mir, Partition, PartitionedProbeOrder, ProbeStep
from src.domain.exceptions import MissingStatisticError


@dataclass(frozen=True)
class CostContext:
    """Statistics, windows and parallelism used to cost probe orders.

    Statistic lookups fall back from ``statistics`` to the relation's
    configured rate, and from ``statistics`` to the predicate's configured
    selectivity and then to ``1 / max(1, rate_left * window_left)``.
    """

    relations: Mapping[str, Relation]
    statistics: Statistics

    @classmethod
    def from_catalog(cls, catalog: Catalog, statistics: Statistics | None = None) -> "CostContext":
        merged = catalog.statistics if statistics is None else catalog.statistics.merged_with(statistics)
        return cls(relations=catalog.relations, statistics=merged)

    def _relation(self, name: str) -> Relation:
        relation = self.relations.get(name)
        if relation is None:
            raise MissingStatisticError(f"relation {name!r}")
        return relation

    def rate(self, relation: str) -> float:
        observed = self.statistics.rate(relation)
        return observed if observed is not None else self._relation(relation).rate

    def window(self, relation: str) -> int:
        return self._relation(relation).window

    def selectivity(self, predicate: JoinPredicate) -> float:
        observed = self.statistics.selectivity(predicate)
        if observed is not None:
            return observed
        if predicate.selectivity is not None:
            return predicate.selectivity
        left = predicate.left.relation
        return 1.0 / max(1.0, self.rate(left) * self.window(left))

    def parallelism(self, mir: Mir) -> int:
        """Workers of a MIR's store: the largest parallelism among its relations."""
        return max(self._relation(name).parallelism for name in mir.relations)

    def store_parallelism(self, mir: Mir, partition: Partition) -> int:
        return 1 if partition is None else self.parallelism(mir)


def estimate_cardinality(relations: Iterable[str], predicates: Iterable[JoinPredicate], ctx: CostContext) -> float:
    """Expected tuple count: product of window contents times predicate selectivities."""
    sizes = [ctx.rate(name) * ctx.window(name) for name in sorted(relations)]
    selectivities = [ctx.selectivity(predicate) for predicate in predicates]
    return math.prod(sizes) * math.prod(selectivities)


def chi(
    target: Mir,
    target_partition: Partition,
    head: frozenset[str],
    predicates: Iterable[JoinPredicate],
    ctx: CostContext,
) -> int:
    """Fan-out of a probe into ``target``.

    1 if the probing head carries a value for the target's partitioning
    attribute (the attribute's relation is in the head, or one of the
    predicates equates it with a head attribute); otherwise the store's
    parallelism.
    """
    if target_partition is None:
        return 1
    if target_partition.relation in head:
        return 1
    for predicate in predicates:
        other = predicate.other(target_partition)
        if other is not None and other.relation in head:
            return 1
    return ctx.parallelism(target)


def step_cost(step: ProbeStep, ctx: CostContext) -> float:
    """Cost of the ``j``-th step: ``|head| / j * chi(target)``."""
    head = step.head_relations
    cardinality = estimate_cardinality(head, step.head_predicates, ctx)
    return cardinality / step.index * chi(step.target, step.target_partition, head, step.predicates, ctx)


def probe_order_cost(order: PartitionedProbeOrder, ctx: CostContext) -> float:
    return math.fsum(step_cost(step, ctx) for step in order.steps())


def query_pcost(query: Query, chosen_orders: Iterable[PartitionedProbeOrder], ctx: CostContext) -> float:
    """Unshared cost of one order per start relation of ``query``."""
    orders = list(chosen_orders)
    starts = sorted(order.start_relation for order in orders)
    if starts != sorted(query.relations):
        raise ValueError(f"expected one order per start relation of {query.id!r}, got {starts}")
    return math.fsum(probe_order_cost(order, ctx) for order in orders)


def shared_cost(orders: Iterable[PartitionedProbeOrder], ctx: CostContext) -> float:
    """Cost of a set of orders counting every distinct step once."""
    steps = {step for order in orders for step in order.steps()}
    return math.fsum(step_cost(step, ctx) for step in steps)
