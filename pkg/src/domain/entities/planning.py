"""Planning entities.

Materializable intermediate results (MIRs), probe orders with their
partitioning decorations, probe steps, candidate sets and selected plans.
"""

import hashlib
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field

from src.domain.entities.catalog import AttributeRef, JoinPredicate, sorted_predicates

# A hop's partitioning attribute; None when partitioning is switched off.
Partition = AttributeRef | None


def format_partition(partition: Partition) -> str:
    return partition.attribute if partition is not None else "*"


@dataclass(frozen=True)
class Mir:
    """A materializable intermediate result.

    A connected subset of a query's relations together with the query's
    predicates internal to that subset. Two MIRs with equal relations and
    equal internal predicates are the same MIR, whichever queries define them.

    Attributes:
        relations: Relation names covered by the MIR.
        predicates: Predicates internal to ``relations``.
        defining_queries: Ids of the queries the MIR was enumerated from.
    """

    relations: frozenset[str]
    predicates: frozenset[JoinPredicate] = frozenset()
    defining_queries: frozenset[str] = field(default=frozenset(), compare=False)

    @classmethod
    def base(cls, relation: str, defining_queries: frozenset[str] = frozenset()) -> "Mir":
        return cls(frozenset((relation,)), frozenset(), defining_queries)

    @property
    def is_base(self) -> bool:
        return len(self.relations) == 1

    @property
    def sorted_relations(self) -> tuple[str, ...]:
        return tuple(sorted(self.relations))

    @property
    def name(self) -> str:
        names = self.sorted_relations
        if all(len(name) == 1 for name in names):
            return "".join(names)
        return "+".join(names)

    @property
    def label(self) -> str:
        """Stable label; composite MIRs carry a digest of their predicates."""
        if self.is_base:
            return self.name
        return f"{self.name}.{hashlib.blake2b(repr(self.sort_key).encode(), digest_size=3).hexdigest()}"

    @property
    def sort_key(self) -> tuple:
        return (self.sorted_relations, tuple(p.sort_key for p in sorted_predicates(self.predicates)))

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class PartitioningCandidate:
    """An attribute of a MIR by which the MIR's store may be partitioned."""

    mir: Mir
    attribute: AttributeRef


@dataclass(frozen=True)
class ProbeOrder:
    """A start relation followed by a sequence of MIR hops.

    Attributes:
        query: Query id, or ``mir:<name>`` for orders computing a MIR's content.
        start: The base relation whose tuples start probing.
        hops: MIRs visited in order.
        predicates: The target's predicates (the query's, or the produced MIR's).
        produces: The MIR this order materializes, None for query orders.
    """

    query: str
    start: Mir
    hops: tuple[Mir, ...]
    predicates: frozenset[JoinPredicate]
    produces: Mir | None = None

    @property
    def relations(self) -> frozenset[str]:
        covered = set(self.start.relations)
        for hop in self.hops:
            covered |= hop.relations
        return frozenset(covered)

    @property
    def start_relation(self) -> str:
        return next(iter(self.start.relations))

    @property
    def sort_key(self) -> tuple:
        return tuple(hop.sort_key for hop in self.hops)

    def __str__(self) -> str:
        return "<" + ", ".join([self.start.name, *(hop.name for hop in self.hops)]) + ">"


@dataclass(frozen=True)
class ProbeStep:
    """A probe-order prefix: the unit of cost and of sharing.

    Steps compare equal across queries when start, hops, partitionings and
    the joined predicates agree.
    """

    start: Mir
    hops: tuple[Mir, ...]
    partitionings: tuple[Partition, ...]
    predicates: frozenset[JoinPredicate]

    @property
    def index(self) -> int:
        return len(self.hops)

    @property
    def target(self) -> Mir:
        return self.hops[-1]

    @property
    def target_partition(self) -> Partition:
        return self.partitionings[-1]

    @property
    def head_relations(self) -> frozenset[str]:
        """Relations joined before the last hop is probed."""
        covered = set(self.start.relations)
        for hop in self.hops[:-1]:
            covered |= hop.relations
        return frozenset(covered)

    @property
    def relations(self) -> frozenset[str]:
        return self.head_relations | self.target.relations

    @property
    def head_predicates(self) -> frozenset[JoinPredicate]:
        head = self.head_relations
        return frozenset(p for p in self.predicates if p.within(head))

    @property
    def linking_predicates(self) -> tuple[JoinPredicate, ...]:
        """Predicates between the probing head and the probed target, sorted."""
        head, target = self.head_relations, self.target.relations
        return tuple(sorted_predicates(p for p in self.predicates if p.connects(head, target)))

    @property
    def parent(self) -> "ProbeStep | None":
        if self.index == 1:
            return None
        relations = self.head_relations
        return ProbeStep(
            self.start,
            self.hops[:-1],
            self.partitionings[:-1],
            frozenset(p for p in self.predicates if p.within(relations)),
        )

    @property
    def node_label(self) -> str:
        return f"{self.target.name}[{format_partition(self.target_partition)}]"

    @property
    def sort_key(self) -> tuple:
        return (
            self.start.sort_key,
            tuple(hop.sort_key for hop in self.hops),
            tuple((p is None, p or ("", "")) for p in self.partitionings),
            tuple(p.sort_key for p in sorted_predicates(self.predicates)),
        )

    def __str__(self) -> str:
        hops = (f"{hop.name}[{format_partition(part)}]" for hop, part in zip(self.hops, self.partitionings))
        return "<" + ", ".join([self.start.name, *hops]) + ">"


@dataclass(frozen=True)
class PartitionedProbeOrder:
    """A probe order whose hops carry the partitioning of their target stores."""

    base: ProbeOrder
    hop_partitionings: tuple[Partition, ...]

    @property
    def query(self) -> str:
        return self.base.query

    @property
    def start(self) -> Mir:
        return self.base.start

    @property
    def start_relation(self) -> str:
        return self.base.start_relation

    @property
    def hops(self) -> tuple[Mir, ...]:
        return self.base.hops

    @property
    def produces(self) -> Mir | None:
        return self.base.produces

    @property
    def materialized_hops(self) -> Iterator[tuple[Mir, Partition]]:
        """Composite MIR hops (with their partitioning) this order probes."""
        for hop, partition in zip(self.hops, self.hop_partitionings):
            if not hop.is_base:
                yield hop, partition

    def steps(self) -> list[ProbeStep]:
        """The order's prefixes, the j-th carrying hops and partitionings 1..j."""
        result = []
        covered = set(self.start.relations)
        for j, hop in enumerate(self.hops, start=1):
            covered |= hop.relations
            predicates = frozenset(p for p in self.base.predicates if p.within(covered))
            result.append(ProbeStep(self.start, self.hops[:j], self.hop_partitionings[:j], predicates))
        return result

    @property
    def sort_key(self) -> tuple:
        return (self.base.sort_key, tuple((p is None, p or ("", "")) for p in reversed(self.hop_partitionings)))

    def __str__(self) -> str:
        hops = (f"{hop.name}[{format_partition(part)}]" for hop, part in zip(self.hops, self.hop_partitionings))
        return "<" + ", ".join([self.start.name, *hops]) + ">"


@dataclass(frozen=True)
class PlannerOptions:
    """Switches for candidate generation.

    Attributes:
        materialize: Allow composite MIR hops.
        partitioning: Decorate hops with partitioning candidates; when off,
            every store is unpartitioned.
    """

    materialize: bool = True
    partitioning: bool = True


GroupKey = tuple[str, str]
SubqueryKey = tuple[Mir, str]


@dataclass(frozen=True)
class CandidateSet:
    """All partitioned probe-order candidates the optimizer chooses from.

    Attributes:
        query_orders: Candidates per ``(query id, start relation)``.
        subquery_orders: Candidates per ``(mir, input relation)`` computing a MIR's content.
        mirs: Every enumerated MIR.
        partitioning: Partitioning options per MIR.
    """

    query_orders: Mapping[GroupKey, tuple[PartitionedProbeOrder, ...]]
    subquery_orders: Mapping[SubqueryKey, tuple[PartitionedProbeOrder, ...]]
    mirs: tuple[Mir, ...] = ()
    partitioning: Mapping[Mir, tuple[Partition, ...]] = field(default_factory=dict)

    @property
    def order_count(self) -> int:
        return sum(len(orders) for orders in self.query_orders.values()) + sum(
            len(orders) for orders in self.subquery_orders.values()
        )

    def restricted_to(self, query_ids: set[str] | frozenset[str]) -> "CandidateSet":
        """The candidates needed by a subset of the queries."""
        query_orders = {key: orders for key, orders in self.query_orders.items() if key[0] in query_ids}
        needed: set[Mir] = set()
        pending = [order for orders in query_orders.values() for order in orders]
        while pending:
            order = pending.pop()
            for hop, _ in order.materialized_hops:
                if hop in needed:
                    continue
                needed.add(hop)
                for key, orders in self.subquery_orders.items():
                    if key[0] == hop:
                        pending.extend(orders)
        subquery_orders = {key: orders for key, orders in self.subquery_orders.items() if key[0] in needed}
        return CandidateSet(query_orders, subquery_orders, self.mirs, self.partitioning)


@dataclass(frozen=True)
class MaterializedMir:
    """A MIR selected for materialization.

    Attributes:
        mir: The materialized MIR.
        partitions: Partitionings under which some chosen order probes it.
        orders: One subquery order per input relation, computing its content.
    """

    mir: Mir
    partitions: tuple[Partition, ...]
    orders: tuple[PartitionedProbeOrder, ...]


@dataclass(frozen=True)
class SelectedPlan:
    """The probe orders chosen for every query and start relation.

    Attributes:
        orders: Chosen order per ``(query id, start relation)``.
        materialized: Materialized MIRs with partitionings and subquery orders.
        total_cost: Shared cost of the plan.
    """

    orders: Mapping[GroupKey, PartitionedProbeOrder]
    materialized: Mapping[Mir, MaterializedMir] = field(default_factory=dict)
    total_cost: float = 0.0

    @property
    def query_ids(self) -> frozenset[str]:
        return frozenset(query_id for query_id, _ in self.orders)

    def all_orders(self) -> list[PartitionedProbeOrder]:
        """Query orders followed by subquery orders, deterministic order."""
        result = [self.orders[key] for key in sorted(self.orders)]
        for mir in sorted(self.materialized, key=lambda m: m.sort_key):
            result.extend(self.materialized[mir].orders)
        return result

    def steps(self) -> set[ProbeStep]:
        """Distinct steps of every order of the plan."""
        return {step for order in self.all_orders() for step in order.steps()}

    def routing_table(self) -> dict[str, str]:
        """Human-readable ``query/start -> order`` mapping, used to compare plans."""
        table = {f"{query}/{start}": str(order) for (query, start), order in sorted(self.orders.items())}
        for mir in sorted(self.materialized, key=lambda m: m.sort_key):
            for order in self.materialized[mir].orders:
                table[f"mir:{mir.name}/{order.start_relation}"] = str(order)
        return table
