"""Candidate generation: every partitioned probe order the optimizer may select."""

from src.domain.entities.catalog import Catalog
from src.domain.entities.planning import (
    CandidateSet,
    Mir,
    Partition,
    PartitionedProbeOrder,
    PlannerOptions,
    SubqueryKey,
)
from src.domain.services.mir_enumeration import enumerate_mirs, partitioning_candidates
from src.domain.services.probe_orders import apply_partitioning, construct_probe_orders, subquery_probe_orders
from src.shared.logging import get_logger

logger = get_logger(__name__)


def generate_candidates(catalog: Catalog, options: PlannerOptions | None = None) -> CandidateSet:
    """Build the candidate set of a catalog.

    Query orders are generated per ``(query, start relation)``. Every
    composite MIR reachable as a hop, directly or through another MIR's
    subquery orders, gets its subquery orders per input relation. A MIR's
    content does not depend on its partitioning, so these orders are shared
    by all partitioning variants of the MIR.
    """
    options = options or PlannerOptions()
    mirs = enumerate_mirs(catalog.queries)
    if not options.materialize:
        mirs = tuple(mir for mir in mirs if mir.is_base)

    partitioning: dict[Mir, tuple[Partition, ...]] = {}
    for mir in mirs:
        if options.partitioning:
            partitioning[mir] = partitioning_candidates(mir, catalog.queries)
        else:
            partitioning[mir] = (None,)

    query_orders: dict[tuple[str, str], tuple[PartitionedProbeOrder, ...]] = {}
    for query in catalog.queries:
        for start in sorted(query.relations):
            orders = construct_probe_orders(query, mirs, start)
            query_orders[(query.id, start)] = tuple(apply_partitioning(orders, partitioning))

    subquery_orders: dict[SubqueryKey, tuple[PartitionedProbeOrder, ...]] = {}
    pending = sorted(
        {hop for orders in query_orders.values() for order in orders for hop, _ in order.materialized_hops},
        key=lambda mir: mir.sort_key,
    )
    expanded: set[Mir] = set()
    while pending:
        mir = pending.pop(0)
        if mir in expanded:
            continue
        expanded.add(mir)
        for start, orders in subquery_probe_orders(mir, mirs).items():
            partitioned = tuple(apply_partitioning(orders, partitioning))
            subquery_orders[(mir, start)] = partitioned
            for order in partitioned:
                pending.extend(hop for hop, _ in order.materialized_hops if hop not in expanded)

    candidates = CandidateSet(
        query_orders=query_orders,
        subquery_orders=dict(sorted(subquery_orders.items(), key=lambda item: (item[0][0].sort_key, item[0][1]))),
        mirs=mirs,
        partitioning=partitioning,
    )
    logger.debug(
        "candidates_generated",
        mirs=len(mirs),
        query_groups=len(query_orders),
        subquery_groups=len(subquery_orders),
        orders=candidates.order_count,
    )
    return candidates
