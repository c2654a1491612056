"""Candidate probe-order construction, partitioning decoration and prefixes."""

from collections.abc import Iterable, Mapping, Sequence
from itertools import product

from src.domain.entities.catalog import Query
from src.domain.entities.planning import Mir, Partition, PartitionedProbeOrder, ProbeOrder, ProbeStep


def mir_as_query(mir: Mir) -> Query:
    """The subquery computing a MIR's content, identified as ``mir:<name>``."""
    return Query(id=f"mir:{mir.name}", relations=mir.relations, predicates=mir.predicates)


def joinable(query: Query, head: frozenset[str], mirs: Iterable[Mir]) -> list[Mir]:
    """MIRs that can extend ``head`` within ``query``.

    A MIR qualifies when it lies inside the query, is disjoint from the head,
    is linked to the head by at least one query predicate, and carries exactly
    the query's predicates internal to its relations.
    """
    result = []
    for mir in mirs:
        if not mir.relations <= query.relations or mir.relations & head:
            continue
        if mir.predicates != query.predicates_within(mir.relations):
            continue
        if not query.predicates_between(head, mir.relations):
            continue
        result.append(mir)
    return sorted(result, key=lambda mir: mir.sort_key)


def construct_probe_orders(
    query: Query,
    mirs: Sequence[Mir],
    start: str,
    produces: Mir | None = None,
) -> list[ProbeOrder]:
    """All MIR sequences starting at ``start`` whose heads grow until they cover the query.

    Args:
        query: Target query (or a MIR's subquery, see ``mir_as_query``).
        mirs: MIRs usable as hops.
        start: Start relation.
        produces: The MIR materialized by the orders, for subquery orders.

    Returns:
        Orders sorted lexicographically by their hops.
    """
    start_mir = Mir.base(start)
    orders: list[ProbeOrder] = []

    def extend(head: frozenset[str], hops: tuple[Mir, ...]) -> None:
        if head == query.relations:
            orders.append(ProbeOrder(query.id, start_mir, hops, query.predicates, produces))
            return
        for mir in joinable(query, head, mirs):
            extend(head | mir.relations, hops + (mir,))

    extend(frozenset((start,)), ())
    return sorted(orders, key=lambda order: order.sort_key)


def subquery_probe_orders(mir: Mir, mirs: Sequence[Mir]) -> dict[str, list[ProbeOrder]]:
    """Per input relation of ``mir``, the orders producing its content. Empty for base relations."""
    if mir.is_base:
        return {}
    subquery = mir_as_query(mir)
    inner = [candidate for candidate in mirs if candidate.relations < mir.relations]
    return {start: construct_probe_orders(subquery, inner, start, produces=mir) for start in mir.sorted_relations}


def apply_partitioning(
    orders: Iterable[ProbeOrder],
    candidates: Mapping[Mir, Sequence[Partition]],
) -> list[PartitionedProbeOrder]:
    """Expand each order into one variant per combination of hop partitionings.

    The first hop's partitioning varies fastest, so ``<R, S, T>`` with
    ``S in {b, c}`` and ``T in {c, d}`` yields ``S[b]T[c], S[c]T[c], S[b]T[d], S[c]T[d]``.
    """
    result = []
    for order in orders:
        choices = [candidates[hop] for hop in reversed(order.hops)]
        for combination in product(*choices):
            result.append(PartitionedProbeOrder(order, tuple(reversed(combination))))
    return result


def prefixes(order: PartitionedProbeOrder) -> list[ProbeStep]:
    """The order's steps; equal prefixes of different orders compare equal."""
    return order.steps()
