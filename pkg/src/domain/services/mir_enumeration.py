"""Enumeration of materializable intermediate results and their partitioning candidates."""

from collections import deque
from collections.abc import Iterable

from src.domain.entities.catalog import AttributeRef, Query
from src.domain.entities.planning import Mir
from src.domain.services.catalog import join_graph


def connected_subsets(query: Query) -> list[frozenset[str]]:
    """All connected, non-empty, proper subsets of the query's relations.

    Subsets are grown breadth-first one adjacent relation at a time, so the
    scan stays proportional to the number of connected subsets.
    """
    graph = join_graph(query)
    full = frozenset(query.relations)
    seen: set[frozenset[str]] = set()
    queue: deque[frozenset[str]] = deque()
    for relation in sorted(query.relations):
        subset = frozenset((relation,))
        seen.add(subset)
        queue.append(subset)

    while queue:
        subset = queue.popleft()
        frontier = sorted({n for member in subset for n in graph.neighbors(member)} - subset)
        for relation in frontier:
            grown = subset | {relation}
            if grown in seen or grown == full:
                continue
            seen.add(grown)
            queue.append(grown)

    return sorted(seen, key=lambda s: (len(s), sorted(s)))


def enumerate_mirs(queries: Iterable[Query]) -> tuple[Mir, ...]:
    """MIRs of all queries, deduplicated by relations and internal predicates.

    Each query contributes its base relations and every connected proper
    subset of its relations; the full relation set is never an MIR.
    """
    found: dict[Mir, set[str]] = {}
    for query in queries:
        for subset in connected_subsets(query):
            mir = Mir(subset, query.predicates_within(subset))
            found.setdefault(mir, set()).add(query.id)

    mirs = (Mir(mir.relations, mir.predicates, frozenset(owners)) for mir, owners in found.items())
    return tuple(sorted(mirs, key=lambda mir: mir.sort_key))


def partitioning_candidates(mir: Mir, queries: Iterable[Query]) -> tuple[AttributeRef, ...]:
    """Attributes of ``mir`` joined by some query with a relation outside it, sorted."""
    candidates: set[AttributeRef] = set()
    for query in queries:
        for predicate in query.predicates:
            for side, other in ((predicate.left, predicate.right), (predicate.right, predicate.left)):
                if side.relation in mir.relations and other.relation not in mir.relations:
                    candidates.add(side)
    return tuple(sorted(candidates))
