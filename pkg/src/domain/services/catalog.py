"""Workload validation and join-graph structure."""

from collections.abc import Iterable, Mapping

import networkx as nx

from src.domain.entities.catalog import Catalog, JoinPredicate, Query, Relation, Statistics
from src.domain.exceptions import (
    DisconnectedQueryError,
    DuplicateQueryIdError,
    InvalidRelationError,
    UnknownAttributeError,
    UnknownRelationError,
)
from src.shared.logging import get_logger

logger = get_logger(__name__)


def _edge_order(predicate: JoinPredicate) -> tuple[str, str, str, str]:
    # Sorting by relation pair first keeps every node's neighbors lexicographic.
    return (
        predicate.left.relation,
        predicate.right.relation,
        predicate.left.attribute,
        predicate.right.attribute,
    )


def join_graph(query: Query) -> nx.MultiGraph:
    """Build the join graph of a query.

    Nodes are the query's relations, with one edge per predicate (keyed by the
    predicate). Neighbors iterate in lexicographic order.
    """
    graph = nx.MultiGraph()
    graph.add_nodes_from(sorted(query.relations))
    for predicate in sorted(query.predicates, key=_edge_order):
        graph.add_edge(predicate.left.relation, predicate.right.relation, key=predicate, predicate=predicate)
    return graph


def is_connected(subset: Iterable[str], query: Query) -> bool:
    """True iff the join graph induced on ``subset`` is connected. The empty set is not."""
    nodes = frozenset(subset)
    if not nodes:
        return False
    if len(nodes) == 1:
        return True
    return nx.is_connected(join_graph(query).subgraph(nodes))


def _check_relations(relations: Iterable[Relation]) -> dict[str, Relation]:
    by_name: dict[str, Relation] = {}
    for relation in relations:
        relation.validate()
        if relation.name in by_name:
            raise InvalidRelationError(relation.name, "relation names must be unique")
        by_name[relation.name] = relation
    return dict(sorted(by_name.items()))


def validate_query(query: Query, relations: Mapping[str, Relation]) -> None:
    """Validate one query against the relation definitions.

    Raises:
        WorkloadValidationError: The specific subclass naming the violated rule.
    """
    query.validate()
    for name in sorted(query.relations):
        if name not in relations:
            raise UnknownRelationError(query.id, name)
    for predicate in sorted(query.predicates, key=_edge_order):
        for side in (predicate.left, predicate.right):
            if not relations[side.relation].has_attribute(side.attribute):
                raise UnknownAttributeError(query.id, str(side))
    if not is_connected(query.relations, query):
        raise DisconnectedQueryError(query.id)


def configured_statistics(relations: Iterable[Relation], queries: Iterable[Query]) -> Statistics:
    """Statistics from the configured rates and predicate selectivities.

    When several queries configure the same predicate, the first one wins.
    """
    selectivities: dict[JoinPredicate, float] = {}
    for query in queries:
        for predicate in sorted(query.predicates, key=_edge_order):
            if predicate.selectivity is not None and predicate not in selectivities:
                selectivities[predicate] = predicate.selectivity
    return Statistics(
        rates={relation.name: relation.rate for relation in relations},
        selectivities=selectivities,
        source="configured",
    )


def validate_workload(
    queries: Iterable[Query],
    relations: Iterable[Relation],
    statistics: Statistics | None = None,
) -> Catalog:
    """Validate a workload and return its catalog.

    Exact duplicate queries (same relations and predicates) are removed,
    keeping the first occurrence.

    Args:
        queries: Submitted queries, in submission order.
        relations: Relation definitions.
        statistics: Optional statistics overriding the configured ones.

    Returns:
        The validated catalog.

    Raises:
        InvalidRelationError: If a relation is malformed or defined twice.
        InvalidQueryError: If a query joins fewer than two relations.
        SelfJoinError: If a predicate joins a relation with itself.
        UnknownRelationError: If a query references an undefined relation.
        UnknownAttributeError: If a predicate references an undefined attribute.
        DisconnectedQueryError: If a query's join graph is not connected.
        DuplicateQueryIdError: If two different queries share an id.
    """
    by_name = _check_relations(relations)

    kept: list[Query] = []
    seen_ids: dict[str, Query] = {}
    seen_signatures: set[tuple] = set()
    removed = 0
    for query in queries:
        validate_query(query, by_name)
        previous = seen_ids.get(query.id)
        if previous is not None and previous.signature != query.signature:
            raise DuplicateQueryIdError(query.id)
        if query.signature in seen_signatures:
            removed += 1
            continue
        seen_ids[query.id] = query
        seen_signatures.add(query.signature)
        kept.append(query)

    configured = configured_statistics(by_name.values(), kept)
    if statistics is not None:
        configured = configured.merged_with(statistics)

    if removed:
        logger.info("duplicates_removed", count=removed)
    logger.debug("workload_validated", relations=len(by_name), queries=len(kept))
    return Catalog(relations=by_name, queries=tuple(kept), statistics=configured)
