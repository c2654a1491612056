"""Catalog entities.

Relations, join predicates, queries and statistics: the declarative workload
the optimizer plans for and the simulator executes.
"""

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import NamedTuple

from src.domain.exceptions import InvalidQueryError, InvalidRelationError, SelfJoinError, UnknownRelationError


class AttributeRef(NamedTuple):
    """A ``(relation, attribute)`` pair, e.g. ``S.b``."""

    relation: str
    attribute: str

    def __str__(self) -> str:
        return f"{self.relation}.{self.attribute}"


@dataclass(frozen=True)
class Relation:
    """A streamed input relation.

    Attributes:
        name: Unique relation name.
        attributes: Attribute names, unique within the relation.
        rate: Tuples per tick.
        window: Maximal age difference (ticks) a stored tuple of this relation may have.
        parallelism: Number of workers of this relation's store.
    """

    name: str
    attributes: tuple[str, ...]
    rate: float
    window: int
    parallelism: int = 1

    def validate(self) -> None:
        """Validate relation invariants.

        Raises:
            InvalidRelationError: If a field is out of range or attributes repeat.
        """
        if not self.name:
            raise InvalidRelationError(self.name, "name must not be empty")
        if len(set(self.attributes)) != len(self.attributes):
            raise InvalidRelationError(self.name, "attribute names must be unique")
        if self.rate < 0:
            raise InvalidRelationError(self.name, f"rate must be non-negative, got {self.rate}")
        if self.window < 1:
            raise InvalidRelationError(self.name, f"window must be at least 1, got {self.window}")
        if self.parallelism < 1:
            raise InvalidRelationError(self.name, f"parallelism must be at least 1, got {self.parallelism}")

    def has_attribute(self, attribute: str) -> bool:
        return attribute in self.attributes


@dataclass(frozen=True)
class JoinPredicate:
    """An equi-join predicate ``left = right`` between two relations.

    The sides are stored in canonical order (``left < right``) so that
    ``R.a = S.a`` and ``S.a = R.a`` are the same predicate. The configured
    selectivity does not take part in equality.

    Attributes:
        left: Lexicographically smaller side.
        right: Lexicographically larger side.
        selectivity: Configured selectivity in [0, 1], or None for the default rule.
    """

    left: AttributeRef
    right: AttributeRef
    selectivity: float | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        left, right = AttributeRef(*self.left), AttributeRef(*self.right)
        if right < left:
            left, right = right, left
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @property
    def relations(self) -> frozenset[str]:
        return frozenset((self.left.relation, self.right.relation))

    @property
    def is_self_join(self) -> bool:
        return self.left.relation == self.right.relation

    @property
    def sort_key(self) -> tuple[AttributeRef, AttributeRef]:
        return (self.left, self.right)

    def side(self, relation: str) -> AttributeRef | None:
        """Return the side referencing ``relation``, if any."""
        if self.left.relation == relation:
            return self.left
        if self.right.relation == relation:
            return self.right
        return None

    def other(self, attribute: AttributeRef) -> AttributeRef | None:
        """Return the side opposite to ``attribute``, or None if it is not part of this predicate."""
        if attribute == self.left:
            return self.right
        if attribute == self.right:
            return self.left
        return None

    def within(self, relations: Iterable[str]) -> bool:
        """True if both sides reference relations of the given set."""
        names = relations if isinstance(relations, (set, frozenset)) else set(relations)
        return self.left.relation in names and self.right.relation in names

    def connects(self, first: Iterable[str], second: Iterable[str]) -> bool:
        """True if one side lies in ``first`` and the other in ``second``."""
        a, b = frozenset(first), frozenset(second)
        return (self.left.relation in a and self.right.relation in b) or (
            self.right.relation in a and self.left.relation in b
        )

    def __str__(self) -> str:
        return f"{self.left} = {self.right}"


def sorted_predicates(predicates: Iterable[JoinPredicate]) -> list[JoinPredicate]:
    """Predicates in deterministic (lexicographic) order."""
    return sorted(predicates, key=lambda predicate: predicate.sort_key)


@dataclass(frozen=True)
class Query:
    """A windowed multi-way equi-join query.

    Attributes:
        id: Query identifier.
        relations: Names of the joined relations.
        predicates: Equi-join predicates over those relations.
    """

    id: str
    relations: frozenset[str]
    predicates: frozenset[JoinPredicate]

    @property
    def signature(self) -> tuple[frozenset[str], frozenset[JoinPredicate]]:
        """Identity of the query's content, independent of its id."""
        return (self.relations, self.predicates)

    def predicates_within(self, relations: Iterable[str]) -> frozenset[JoinPredicate]:
        names = frozenset(relations)
        return frozenset(p for p in self.predicates if p.within(names))

    def predicates_between(self, first: Iterable[str], second: Iterable[str]) -> frozenset[JoinPredicate]:
        a, b = frozenset(first), frozenset(second)
        return frozenset(p for p in self.predicates if p.connects(a, b))

    def validate(self) -> None:
        """Validate the query's own structure.

        Raises:
            InvalidQueryError: If the query joins fewer than two relations.
            SelfJoinError: If a predicate joins a relation with itself.
            UnknownRelationError: If a predicate references a relation outside the query.
        """
        if len(self.relations) < 2:
            raise InvalidQueryError(self.id, "a query joins at least two relations")
        for predicate in sorted_predicates(self.predicates):
            if predicate.is_self_join:
                raise SelfJoinError(self.id, predicate.left.relation)
            for side in (predicate.left, predicate.right):
                if side.relation not in self.relations:
                    raise UnknownRelationError(self.id, side.relation)


@dataclass(frozen=True)
class Statistics:
    """Data characteristics used by the cost model.

    Attributes:
        rates: Tuples per tick per relation.
        selectivities: Selectivity per predicate.
        source: ``"configured"`` or the epoch id the values were gathered in.
    """

    rates: Mapping[str, float] = field(default_factory=dict)
    selectivities: Mapping[JoinPredicate, float] = field(default_factory=dict)
    source: str = "configured"

    def rate(self, relation: str) -> float | None:
        return self.rates.get(relation)

    def selectivity(self, predicate: JoinPredicate) -> float | None:
        return self.selectivities.get(predicate)

    def merged_with(self, other: "Statistics") -> "Statistics":
        """Entries of ``other`` override the ones of this instance."""
        return Statistics(
            rates={**self.rates, **other.rates},
            selectivities={**self.selectivities, **other.selectivities},
            source=other.source,
        )


@dataclass(frozen=True)
class Catalog:
    """A validated workload: relations, deduplicated queries and statistics."""

    relations: Mapping[str, Relation]
    queries: tuple[Query, ...]
    statistics: Statistics = field(default_factory=Statistics)

    def relation(self, name: str) -> Relation:
        return self.relations[name]

    def query(self, query_id: str) -> Query:
        for query in self.queries:
            if query.id == query_id:
                return query
        raise KeyError(query_id)

    @property
    def query_ids(self) -> tuple[str, ...]:
        return tuple(query.id for query in self.queries)

    def with_queries(self, queries: Iterable[Query]) -> "Catalog":
        return Catalog(relations=self.relations, queries=tuple(queries), statistics=self.statistics)

    def with_statistics(self, statistics: Statistics) -> "Catalog":
        return Catalog(relations=self.relations, queries=self.queries, statistics=statistics)
