"""Catalog and runtime test data factories.

This module provides factory classes for generating relations, queries and
stream tuples using the factory_boy library, plus helpers for hand-written
probe orders.
"""

from collections.abc import Sequence

import factory

from src.domain.entities.catalog import AttributeRef, JoinPredicate, Query, Relation
from src.domain.entities.planning import Mir, PartitionedProbeOrder, ProbeOrder
from src.domain.entities.runtime import BaseTuple


class RelationFactory(factory.Factory):
    """Factory for creating Relation entities.

    Usage:
        # A relation with default values
        relation = RelationFactory.build()

        # A named relation with custom attributes
        relation = RelationFactory.build(name="S", attributes=("a", "b"))

        # Several relations with distinct names
        relations = RelationFactory.build_batch(3)
    """

    class Meta:
        model = Relation

    name = factory.Sequence(lambda n: f"R{n}")
    attributes = ("a", "b")
    rate = 10.0
    window = 5
    parallelism = 1


class InvalidRelationFactory(RelationFactory):
    """Factory for relations violating the window invariant."""

    window = 0


class QueryFactory(factory.Factory):
    """Factory for creating two-relation Query entities.

    Usage:
        query = QueryFactory.build(left="R", right="S")
    """

    class Meta:
        model = Query
        exclude = ("left", "right", "attribute")

    id = factory.Sequence(lambda n: f"q{n + 1}")
    left = "R"
    right = "S"
    attribute = "a"
    relations = factory.LazyAttribute(lambda obj: frozenset((obj.left, obj.right)))
    predicates = factory.LazyAttribute(
        lambda obj: frozenset(
            (JoinPredicate(AttributeRef(obj.left, obj.attribute), AttributeRef(obj.right, obj.attribute)),)
        )
    )


class BaseTupleFactory(factory.Factory):
    """Factory for creating stream tuples with increasing sequence numbers.

    Usage:
        item = BaseTupleFactory.build(relation="S", ts=3, attrs={"a": 1})
    """

    class Meta:
        model = BaseTuple

    relation = "R"
    ts = 0
    attrs = factory.LazyFunction(dict)
    seq = factory.Sequence(lambda n: n)


def make_order(
    query: Query,
    start: str,
    hops: Sequence[str],
    partitions: Sequence[str | None] | None = None,
) -> PartitionedProbeOrder:
    """A probe order over base relations.

    Args:
        query: The query the order answers.
        start: Start relation.
        hops: Relations probed in turn.
        partitions: Partitioning attribute of each hop's store, None for unpartitioned.
    """
    partitions = partitions if partitions is not None else [None] * len(hops)
    base = ProbeOrder(query.id, Mir.base(start), tuple(Mir.base(hop) for hop in hops), query.predicates)
    return PartitionedProbeOrder(
        base,
        tuple(
            AttributeRef(hop, attribute) if attribute is not None else None
            for hop, attribute in zip(hops, partitions)
        ),
    )
