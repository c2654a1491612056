"""Reference windowed join: nested loops over every earlier tuple."""

from collections import defaultdict
from collections.abc import Iterable, Mapping, Sequence

import networkx as nx

from src.domain.entities.catalog import Query, Relation
from src.domain.entities.runtime import BaseTuple, JoinResult, QueryLifecycle, values_join
from src.domain.services.catalog import join_graph


def _visit_order(query: Query, start: str) -> list[str]:
    return [start, *(target for _, target in nx.bfs_edges(join_graph(query), start))]


def oracle_join(
    trace: Iterable[BaseTuple],
    queries: Sequence[Query],
    relations: Mapping[str, Relation],
) -> list[JoinResult]:
    """All windowed join results, emitted at the tick of their newest tuple.

    For every arriving tuple ``u`` and every query over ``u``'s relation, all
    combinations of earlier tuples satisfying the query's predicates are
    enumerated, keeping those with ``u.ts - v.ts <= W(v.relation)`` for
    every constituent ``v``.
    """
    windows = {name: relation.window for name, relation in relations.items()}
    events = sorted(trace, key=lambda item: (item.ts, item.relation, item.seq))
    arrived: defaultdict[str, list[BaseTuple]] = defaultdict(list)
    orders = {(query.id, start): _visit_order(query, start) for query in queries for start in query.relations}
    results: list[JoinResult] = []

    for item in events:
        for query in queries:
            if item.relation not in query.relations:
                continue
            order = orders[(query.id, item.relation)]
            chosen: dict[str, BaseTuple] = {item.relation: item}

            def extend(position: int) -> None:
                if position == len(order):
                    parts = tuple(chosen[name] for name in sorted(chosen))
                    results.append(JoinResult(query.id, item.ts, parts))
                    return
                relation = order[position]
                checks = [
                    predicate
                    for predicate in query.predicates
                    if relation in predicate.relations and (predicate.relations - {relation}) <= set(chosen)
                ]
                for candidate in arrived[relation]:
                    if item.ts - candidate.ts > windows[relation]:
                        continue
                    if all(_agree(predicate, chosen, relation, candidate) for predicate in checks):
                        chosen[relation] = candidate
                        extend(position + 1)
                        del chosen[relation]

            extend(1)
        arrived[item.relation].append(item)
    return sorted(results, key=lambda result: result.sort_key)


def _agree(predicate, chosen: Mapping[str, BaseTuple], relation: str, candidate: BaseTuple) -> bool:
    mine = predicate.side(relation)
    other = predicate.other(mine)
    return values_join(candidate.attrs.get(mine.attribute), chosen[other.relation].attrs.get(other.attribute))


def covered_results(results: Iterable[JoinResult], lifecycles: Mapping[str, QueryLifecycle]) -> list[JoinResult]:
    """Results a query must answer given when it was registered, bootstrapped or removed."""
    kept = []
    for result in results:
        lifecycle = lifecycles.get(result.query)
        if lifecycle is not None and lifecycle.covers(result):
            kept.append(result)
    return kept
