"""Seeded synthetic workloads and traces."""

import math
import random

from src.domain.entities.bench import WorkloadConfig
from src.domain.entities.catalog import AttributeRef, Catalog, JoinPredicate, Query, Relation
from src.domain.entities.runtime import BaseTuple
from src.domain.exceptions import GenerationExhaustedError
from src.domain.services.catalog import validate_workload
from src.domain.services.cost_model import CostContext
from src.shared.config import settings
from src.shared.logging import get_logger

logger = get_logger(__name__)


PairPredicates = dict[frozenset[str], JoinPredicate]


def _pair_predicate(
    rng: random.Random,
    relations: dict[str, Relation],
    pairs: PairPredicates,
    left: str,
    right: str,
    selectivity: float,
) -> JoinPredicate:
    """The workload's predicate between two relations, drawn on first use."""
    key = frozenset((left, right))
    predicate = pairs.get(key)
    if predicate is None:
        predicate = pairs[key] = JoinPredicate(
            AttributeRef(left, rng.choice(relations[left].attributes)),
            AttributeRef(right, rng.choice(relations[right].attributes)),
            selectivity=selectivity,
        )
    return predicate


def _random_query(
    rng: random.Random,
    relations: dict[str, Relation],
    pairs: PairPredicates,
    size: int,
    selectivity: float,
    query_id: str,
) -> Query:
    names = list(relations)
    members = [rng.choice(names)]
    predicates = set()
    while len(members) < size:
        left = rng.choice(members)
        right = rng.choice([name for name in names if name not in members])
        predicates.add(_pair_predicate(rng, relations, pairs, left, right, selectivity))
        members.append(right)
    return Query(query_id, frozenset(members), frozenset(predicates))


def gen_workload(config: WorkloadConfig) -> Catalog:
    """Random connected queries grown from a random relation by random joins.

    Each pair of relations joins on one attribute pair for the whole
    workload, drawn the first time a query joins the two.

    Exact duplicates are drawn again, up to ``generation_retry_factor``
    attempts per requested query.

    Raises:
        GenerationExhaustedError: If the retry bound is hit first.
    """
    rng = random.Random(config.seed)
    window = config.window or settings.default_window
    relations = [
        Relation(
            name=f"R{index}",
            attributes=tuple(f"a{position}" for position in range(config.attrs_per_relation)),
            rate=config.rate,
            window=window,
            parallelism=config.parallelism,
        )
        for index in range(config.n_relations)
    ]
    selectivity = min(1.0, 1.0 / config.rate)
    by_name = {relation.name: relation for relation in relations}
    pairs: PairPredicates = {}

    queries: list[Query] = []
    signatures: set[tuple] = set()
    attempts = 0
    limit = settings.generation_retry_factor * config.n_queries
    while len(queries) < config.n_queries:
        if attempts >= limit:
            raise GenerationExhaustedError(config.n_queries, len(queries))
        attempts += 1
        query = _random_query(rng, by_name, pairs, config.query_size, selectivity, f"q{len(queries) + 1}")
        if query.signature in signatures:
            continue
        signatures.add(query.signature)
        queries.append(query)

    logger.debug("workload_generated", queries=len(queries), attempts=attempts, seed=config.seed)
    return validate_workload(queries, relations)


def attribute_domains(catalog: Catalog) -> dict[AttributeRef, int]:
    """Value-domain size per attribute: ``ceil(1 / s)`` for the smallest selectivity touching it."""
    ctx = CostContext.from_catalog(catalog)
    domains: dict[AttributeRef, int] = {}
    for query in catalog.queries:
        for predicate in query.predicates:
            size = math.ceil(1.0 / max(ctx.selectivity(predicate), 1e-12))
            for side in (predicate.left, predicate.right):
                domains[side] = max(domains.get(side, 1), size)
    return domains


def gen_trace(catalog: Catalog, duration: int, seed: int) -> list[BaseTuple]:
    """Arrivals at every relation's rate over ``duration`` ticks.

    Tick ``t`` receives ``floor((t + 1) r) - floor(t r)`` tuples of a rate-``r``
    relation. Values are uniform over each attribute's domain, so two joined
    attributes agree with the configured selectivity in expectation.
    """
    if duration <= 0:
        raise ValueError(f"duration must be positive, got {duration}")
    rng = random.Random(seed)
    domains = attribute_domains(catalog)
    trace: list[BaseTuple] = []
    seq = 0
    for tick in range(duration):
        for name, relation in catalog.relations.items():
            count = math.floor((tick + 1) * relation.rate) - math.floor(tick * relation.rate)
            for _ in range(count):
                attrs = {
                    attribute: rng.randrange(
                        domains.get(AttributeRef(name, attribute), settings.unbound_attribute_domain)
                    )
                    for attribute in relation.attributes
                }
                trace.append(BaseTuple(name, tick, attrs, seq))
                seq += 1
    logger.debug("trace_generated", events=len(trace), duration=duration, seed=seed)
    return trace
