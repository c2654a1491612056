"""Pydantic schemas for the workload, trace, result, metrics, plan and bench files.

Each schema validates one record of a file format and converts between the
record and the domain entity it describes.
"""

from collections.abc import Iterable, Mapping
from statistics import median
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field

from src.domain.entities.bench import BenchConfig, BenchReport, BenchRow
from src.domain.entities.catalog import AttributeRef, Catalog, JoinPredicate, Query, Relation, Statistics
from src.domain.entities.ilp import OptimizationOutcome
from src.domain.entities.planning import (
    MaterializedMir,
    Mir,
    Partition,
    PartitionedProbeOrder,
    ProbeOrder,
    SelectedPlan,
)
from src.domain.entities.runtime import BaseTuple, ChangeKind, JoinResult, MetricsLog, QueryChange
from src.domain.entities.topology import Topology
from src.domain.exceptions import InvalidQueryError
from src.domain.services.catalog import validate_workload
from src.domain.services.cost_model import CostContext, probe_order_cost
from src.domain.services.probe_orders import mir_as_query
from src.shared.config import settings

# ---------------------------------------------------------------------------
# Workload
# ---------------------------------------------------------------------------


class RelationSchema(BaseModel):
    """Schema for an input relation."""

    name: str = Field(..., min_length=1, examples=["R"], description="Unique relation name")
    attributes: list[str] = Field(..., examples=[["a", "b"]], description="Attribute names")
    rate: float = Field(..., ge=0, examples=[10.0], description="Tuples per tick")
    window: int | None = Field(None, ge=1, examples=[50], description="Window in ticks, default from settings")
    parallelism: int = Field(1, ge=1, examples=[4], description="Workers of the relation's store")

    def to_entity(self) -> Relation:
        window = self.window if self.window is not None else settings.default_window
        return Relation(self.name, tuple(self.attributes), self.rate, window, self.parallelism)

    @classmethod
    def from_entity(cls, relation: Relation) -> "RelationSchema":
        return cls(
            name=relation.name,
            attributes=list(relation.attributes),
            rate=relation.rate,
            window=relation.window,
            parallelism=relation.parallelism,
        )


class PredicateSchema(BaseModel):
    """Schema for an equi-join predicate ``left = right``."""

    left: tuple[str, str] = Field(..., examples=[["R", "a"]], description="(relation, attribute)")
    right: tuple[str, str] = Field(..., examples=[["S", "a"]], description="(relation, attribute)")
    selectivity: float | None = Field(None, ge=0, le=1, examples=[0.01], description="Configured selectivity")

    def to_entity(self) -> JoinPredicate:
        return JoinPredicate(AttributeRef(*self.left), AttributeRef(*self.right), self.selectivity)

    @classmethod
    def from_entity(cls, predicate: JoinPredicate, selectivity: float | None = None) -> "PredicateSchema":
        return cls(
            left=tuple(predicate.left),
            right=tuple(predicate.right),
            selectivity=predicate.selectivity if selectivity is None else selectivity,
        )


def _sorted_predicates(predicates: Iterable[JoinPredicate]) -> list[JoinPredicate]:
    return sorted(predicates, key=lambda predicate: predicate.sort_key)


class QuerySchema(BaseModel):
    """Schema for a windowed equi-join query."""

    id: str = Field(..., min_length=1, examples=["q1"], description="Query identifier")
    relations: list[str] = Field(..., examples=[["R", "S"]], description="Joined relations")
    predicates: list[PredicateSchema] = Field(default_factory=list, description="Join predicates")

    def to_entity(self) -> Query:
        return Query(
            id=self.id,
            relations=frozenset(self.relations),
            predicates=frozenset(predicate.to_entity() for predicate in self.predicates),
        )

    @classmethod
    def from_entity(cls, query: Query, statistics: Statistics | None = None) -> "QuerySchema":
        predicates = []
        for predicate in _sorted_predicates(query.predicates):
            observed = statistics.selectivity(predicate) if statistics is not None else None
            predicates.append(PredicateSchema.from_entity(predicate, observed))
        return cls(id=query.id, relations=sorted(query.relations), predicates=predicates)


class StatisticsSchema(BaseModel):
    """Schema for statistics overriding the configured rates and selectivities."""

    rates: dict[str, float] = Field(default_factory=dict, description="Tuples per tick per relation")
    selectivities: list[PredicateSchema] = Field(default_factory=list, description="Selectivity per predicate")
    source: str = Field("configured", description="Where the values come from")

    def to_entity(self) -> Statistics:
        selectivities = {
            predicate.to_entity(): predicate.selectivity
            for predicate in self.selectivities
            if predicate.selectivity is not None
        }
        return Statistics(rates=dict(self.rates), selectivities=selectivities, source=self.source)

    @classmethod
    def from_entity(cls, statistics: Statistics) -> "StatisticsSchema":
        return cls(
            rates=dict(sorted(statistics.rates.items())),
            selectivities=[
                PredicateSchema.from_entity(predicate, statistics.selectivities[predicate])
                for predicate in _sorted_predicates(statistics.selectivities)
            ],
            source=statistics.source,
        )


class ChangeSchema(BaseModel):
    """Schema for a query registration or removal during a run."""

    tick: int = Field(..., ge=0, examples=[25], description="Tick the change applies at")
    kind: ChangeKind = Field(..., description="register or remove")
    query: QuerySchema | None = Field(None, description="The registered query")
    query_id: str | None = Field(None, description="The removed query's id")

    def to_entity(self) -> QueryChange:
        if self.kind is ChangeKind.REGISTER and self.query is None:
            raise InvalidQueryError(self.query_id or "?", "a registration needs the query definition")
        if self.kind is ChangeKind.REMOVE and not self.query_id:
            raise InvalidQueryError("?", "a removal needs the query id")
        query = self.query.to_entity() if self.query is not None else None
        return QueryChange(self.tick, self.kind, query, self.query_id)

    @classmethod
    def from_entity(cls, change: QueryChange) -> "ChangeSchema":
        return cls(
            tick=change.tick,
            kind=change.kind,
            query=QuerySchema.from_entity(change.query) if change.query is not None else None,
            query_id=change.query_id,
        )


class WorkloadSchema(BaseModel):
    """Schema for a workload file: relations, queries, statistics and query changes."""

    relations: list[RelationSchema] = Field(..., description="Input relations")
    queries: list[QuerySchema] = Field(default_factory=list, description="Initial queries")
    statistics: StatisticsSchema | None = Field(None, description="Statistics overriding the configured ones")
    changes: list[ChangeSchema] = Field(default_factory=list, description="Registrations and removals")

    def to_catalog(self) -> Catalog:
        """Validate the workload.

        Raises:
            WorkloadValidationError: The specific subclass naming the violated rule.
        """
        return validate_workload(
            [query.to_entity() for query in self.queries],
            [relation.to_entity() for relation in self.relations],
            self.statistics.to_entity() if self.statistics is not None else None,
        )

    def to_changes(self) -> tuple[QueryChange, ...]:
        return tuple(change.to_entity() for change in self.changes)

    @classmethod
    def from_catalog(cls, catalog: Catalog, changes: Iterable[QueryChange] = ()) -> "WorkloadSchema":
        return cls(
            relations=[RelationSchema.from_entity(relation) for relation in catalog.relations.values()],
            queries=[QuerySchema.from_entity(query, catalog.statistics) for query in catalog.queries],
            changes=[ChangeSchema.from_entity(change) for change in changes],
        )


# ---------------------------------------------------------------------------
# Trace and results
# ---------------------------------------------------------------------------


class TraceEventSchema(BaseModel):
    """Schema for one arrival, one line of a trace file."""

    rel: str = Field(..., min_length=1, examples=["R"], description="Relation of the tuple")
    ts: int = Field(..., ge=0, examples=[12], description="Arrival tick")
    attrs: dict[str, Any] = Field(default_factory=dict, examples=[{"a": "v7"}], description="Attribute values")
    seq: int | None = Field(None, ge=0, description="Sequence number, the line index when omitted")

    def to_entity(self, line: int) -> BaseTuple:
        return BaseTuple(self.rel, self.ts, dict(self.attrs), line if self.seq is None else self.seq)

    @classmethod
    def from_entity(cls, item: BaseTuple, with_seq: bool = True) -> "TraceEventSchema":
        return cls(rel=item.relation, ts=item.ts, attrs=dict(item.attrs), seq=item.seq if with_seq else None)


class JoinResultSchema(BaseModel):
    """Schema for one join result, one line of a results file."""

    query: str = Field(..., examples=["q1"], description="Query answered")
    ts: int = Field(..., ge=0, examples=[16], description="Emission tick")
    tuples: list[TraceEventSchema] = Field(..., description="Constituents sorted by relation")

    def to_entity(self) -> JoinResult:
        return JoinResult(self.query, self.ts, tuple(part.to_entity(0) for part in self.tuples))

    @classmethod
    def from_entity(cls, result: JoinResult) -> "JoinResultSchema":
        return cls(
            query=result.query,
            ts=result.ts,
            tuples=[TraceEventSchema.from_entity(part) for part in result.parts],
        )


class MetricsSnapshotSchema(BaseModel):
    """Schema for the counters at the end of one epoch."""

    kind: Literal["epoch"] = "epoch"
    epoch: int = Field(..., ge=0, description="Epoch the snapshot closes")
    probe_messages: int
    store_messages: int
    tuples_stored: int
    tuples_evicted: int = 0
    results: dict[str, int]
    stores_registered: int
    stores_deregistered: int
    config_switches: int


class MetricsSummarySchema(BaseModel):
    """Schema for the closing line of a metrics file."""

    kind: Literal["summary"] = "summary"
    probe_messages: int = Field(..., description="Probe messages sent, one per target worker")
    store_messages: int = Field(..., description="Store messages sent")
    tuples_stored: int = Field(..., description="Tuples inserted into stores")
    tuples_evicted: int = Field(0, description="Tuples dropped once out of every window")
    results: dict[str, int] = Field(..., description="Results per query")
    median_latency: float | None = Field(None, description="Median ticks from newest constituent to emission")
    probe_messages_per_edge: dict[str, int] = Field(default_factory=dict, description="Probe messages per edge")
    fanout: dict[str, dict[str, int]] = Field(default_factory=dict, description="Workers reached per probe")
    stores_registered: int = Field(0, description="Stores registered")
    stores_deregistered: int = Field(0, description="Stores deregistered")
    config_switches: int = Field(0, description="Configuration switches")
    epoch_statistics: dict[str, StatisticsSchema] = Field(default_factory=dict, description="Observed statistics")
    routing_tables: dict[str, dict[str, str]] = Field(default_factory=dict, description="Routing table per epoch")

    @classmethod
    def from_entity(cls, metrics: MetricsLog) -> "MetricsSummarySchema":
        return cls(
            probe_messages=metrics.probe_messages,
            store_messages=metrics.store_messages,
            tuples_stored=metrics.tuples_stored,
            tuples_evicted=metrics.tuples_evicted,
            results=dict(sorted(metrics.results.items())),
            median_latency=median(metrics.latencies) if metrics.latencies else None,
            probe_messages_per_edge=dict(sorted(metrics.probe_messages_per_edge.items())),
            fanout={
                store: {str(workers): count for workers, count in sorted(histogram.items())}
                for store, histogram in sorted(metrics.fanout.items())
            },
            stores_registered=metrics.stores_registered,
            stores_deregistered=metrics.stores_deregistered,
            config_switches=metrics.config_switches,
            epoch_statistics={
                str(epoch): StatisticsSchema.from_entity(statistics)
                for epoch, statistics in sorted(metrics.epoch_statistics.items())
            },
            routing_tables={str(epoch): dict(table) for epoch, table in sorted(metrics.routing_tables.items())},
        )


# ---------------------------------------------------------------------------
# Plans and topologies
# ---------------------------------------------------------------------------


class HopSchema(BaseModel):
    """Schema for one probe-order hop."""

    relations: list[str] = Field(..., examples=[["S"]], description="Relations of the probed MIR")
    partition: tuple[str, str] | None = Field(None, examples=[["S", "b"]], description="Store partitioning")


def _partition(value: tuple[str, str] | None) -> Partition:
    return AttributeRef(*value) if value is not None else None


class ProbeOrderSchema(BaseModel):
    """Schema for a partitioned probe order."""

    query: str = Field(..., examples=["q1"], description="Query id, or mir:<name> for subquery orders")
    start: str = Field(..., examples=["R"], description="Start relation")
    hops: list[HopSchema] = Field(..., description="Probed MIRs in order")
    cost: float | None = Field(None, description="Probe cost of the order on its own")
    label: str | None = Field(None, examples=["<R, S[b], T[c]>"], description="Readable rendering")

    def to_entity(self, target: Query, produces: Mir | None = None) -> PartitionedProbeOrder:
        hops = tuple(Mir(frozenset(hop.relations), target.predicates_within(hop.relations)) for hop in self.hops)
        base = ProbeOrder(target.id, Mir.base(self.start), hops, target.predicates, produces)
        return PartitionedProbeOrder(base, tuple(_partition(hop.partition) for hop in self.hops))

    @classmethod
    def from_entity(cls, order: PartitionedProbeOrder, ctx: CostContext | None = None) -> "ProbeOrderSchema":
        return cls(
            query=order.query,
            start=order.start_relation,
            hops=[
                HopSchema(relations=list(hop.sorted_relations), partition=tuple(part) if part is not None else None)
                for hop, part in zip(order.hops, order.hop_partitionings)
            ],
            cost=probe_order_cost(order, ctx) if ctx is not None else None,
            label=str(order),
        )


class MaterializedMirSchema(BaseModel):
    """Schema for a materialized MIR with its subquery orders."""

    relations: list[str] = Field(..., examples=[["S", "T"]], description="Relations of the MIR")
    predicates: list[PredicateSchema] = Field(default_factory=list, description="Predicates internal to the MIR")
    partitions: list[tuple[str, str] | None] = Field(..., description="Partitionings probed")
    orders: list[ProbeOrderSchema] = Field(..., description="One subquery order per input relation")

    def to_entity(self) -> MaterializedMir:
        mir = Mir(frozenset(self.relations), frozenset(predicate.to_entity() for predicate in self.predicates))
        subquery = mir_as_query(mir)
        return MaterializedMir(
            mir=mir,
            partitions=tuple(_partition(partition) for partition in self.partitions),
            orders=tuple(order.to_entity(subquery, produces=mir) for order in self.orders),
        )

    @classmethod
    def from_entity(cls, materialized: MaterializedMir, ctx: CostContext | None = None) -> "MaterializedMirSchema":
        return cls(
            relations=list(materialized.mir.sorted_relations),
            predicates=[PredicateSchema.from_entity(p) for p in _sorted_predicates(materialized.mir.predicates)],
            partitions=[tuple(p) if p is not None else None for p in materialized.partitions],
            orders=[ProbeOrderSchema.from_entity(order, ctx) for order in materialized.orders],
        )


class RuleSchema(BaseModel):
    in_edge: str = Field(..., description="Edge the rule is keyed by")
    kind: str = Field(..., examples=["probe"], description="store or probe")
    predicates: list[str] = Field(default_factory=list, description="Predicates checked by the probe")
    out_edges: list[str] = Field(default_factory=list, description="Edges receiving each result")


class StoreSchema(BaseModel):
    label: str = Field(..., examples=["S[b]"], description="Store label")
    relations: list[str] = Field(..., description="Relations of the stored MIR")
    partition: tuple[str, str] | None = Field(None, description="Partitioning attribute")
    parallelism: int = Field(..., ge=1, description="Workers")
    indices: list[str] = Field(default_factory=list, description="Indexed attributes")
    rules: list[RuleSchema] = Field(default_factory=list, description="Ruleset")


class EdgeSchema(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    label: str = Field(..., description="Edge label")
    kind: str = Field(..., description="input, probe or materialize")
    source: str = Field(..., alias="from", description="Sending relation or store")
    target: str = Field(..., alias="to", description="Receiving store")


class TopologySchema(BaseModel):
    """Summary of a compiled topology."""

    stores: list[StoreSchema] = Field(default_factory=list)
    edges: list[EdgeSchema] = Field(default_factory=list)
    sources: dict[str, list[str]] = Field(default_factory=dict, description="Input edges per relation")

    @classmethod
    def from_entity(cls, topology: Topology) -> "TopologySchema":
        stores = []
        for label in sorted(topology.stores):
            spec = topology.stores[label]
            stores.append(
                StoreSchema(
                    label=label,
                    relations=list(spec.key.mir.sorted_relations),
                    partition=tuple(spec.key.partition) if spec.key.partition is not None else None,
                    parallelism=spec.parallelism,
                    indices=sorted(str(attribute) for attribute in spec.indices),
                    rules=[
                        RuleSchema(
                            in_edge=edge,
                            kind=rule.kind.value,
                            predicates=[str(predicate) for predicate in rule.predicates],
                            out_edges=list(rule.out_edges),
                        )
                        for edge, rule in sorted(spec.rules.items())
                    ],
                )
            )
        edges = [
            EdgeSchema(label=edge.label, kind=edge.kind.value, source=edge.source, target=edge.target)
            for _, edge in sorted(topology.edges.items())
        ]
        sources = {relation: list(labels) for relation, labels in sorted(topology.sources.items())}
        return cls(stores=stores, edges=edges, sources=sources)


class ModelSizeSchema(BaseModel):
    variables: int = Field(0, ge=0)
    probe_orders: int = Field(0, ge=0)
    constraints: int = Field(0, ge=0)


class PlanSchema(BaseModel):
    """Schema for a plan file: chosen orders, materialized MIRs and the compiled topology."""

    model_config = ConfigDict(populate_by_name=True)

    status: str = Field("optimal", description="Solver status")
    mode: str | None = Field(None, description="shared or individual")
    total_cost: float = Field(..., description="Shared cost of the plan")
    size: ModelSizeSchema = Field(default_factory=ModelSizeSchema, description="Model size")
    solve_ms: float = Field(0.0, description="Optimization wall time")
    orders: list[ProbeOrderSchema] = Field(..., description="Chosen order per query and start")
    materialized: list[MaterializedMirSchema] = Field(default_factory=list, description="Materialized MIRs")
    routing_table: dict[str, str] = Field(default_factory=dict, description="query/start -> order")
    topology: TopologySchema | None = Field(None, description="Compiled topology summary")

    def to_plan(self, catalog: Catalog) -> SelectedPlan:
        """Rebuild the plan against the catalog's queries.

        Raises:
            InvalidQueryError: If an order names an unknown query, or a query
                lacks an order for one of its relations.
        """
        queries = {query.id: query for query in catalog.queries}
        orders: dict[tuple[str, str], PartitionedProbeOrder] = {}
        for order in self.orders:
            query = queries.get(order.query)
            if query is None:
                raise InvalidQueryError(order.query, "the plan references an unknown query")
            orders[(order.query, order.start)] = order.to_entity(query)
        for query in catalog.queries:
            for start in sorted(query.relations):
                if (query.id, start) not in orders:
                    raise InvalidQueryError(query.id, f"the plan has no probe order starting at {start}")
        materialized = {entry.mir: entry for entry in (item.to_entity() for item in self.materialized)}
        return SelectedPlan(orders=orders, materialized=materialized, total_cost=self.total_cost)

    @classmethod
    def from_outcome(
        cls,
        outcome: OptimizationOutcome,
        catalog: Catalog,
        topology: Topology | None = None,
        mode: str | None = None,
    ) -> "PlanSchema":
        plan = outcome.plan
        ctx = CostContext.from_catalog(catalog)
        return cls(
            status=outcome.status.value,
            mode=mode,
            total_cost=plan.total_cost,
            size=ModelSizeSchema(
                variables=outcome.size.variables,
                probe_orders=outcome.size.probe_orders,
                constraints=outcome.size.constraints,
            ),
            solve_ms=outcome.solve_ms,
            orders=[ProbeOrderSchema.from_entity(plan.orders[key], ctx) for key in sorted(plan.orders)],
            materialized=[
                MaterializedMirSchema.from_entity(plan.materialized[mir], ctx)
                for mir in sorted(plan.materialized, key=lambda m: m.sort_key)
            ],
            routing_table=plan.routing_table(),
            topology=TopologySchema.from_entity(topology) if topology is not None else None,
        )


# ---------------------------------------------------------------------------
# Benchmarks
# ---------------------------------------------------------------------------

BENCH_COLUMNS = ("n_q", "individual_cost", "mqo_cost", "variables", "probe_orders", "solve_ms")


class BenchRowSchema(BaseModel):
    """Schema for one sweep point."""

    n_q: int = Field(..., ge=1, description="Number of queries")
    individual_cost: float = Field(..., description="Sum of per-query optima")
    mqo_cost: float = Field(..., description="Shared optimum")
    variables: int = Field(..., ge=0, description="ILP variables of the shared model")
    probe_orders: int = Field(..., ge=0, description="Probe-order variables of the shared model")
    solve_ms: float = Field(..., ge=0, description="Shared solve wall time")

    def to_entity(self) -> BenchRow:
        return BenchRow(**self.model_dump())

    @classmethod
    def from_entity(cls, row: BenchRow) -> "BenchRowSchema":
        return cls(**{column: getattr(row, column) for column in BENCH_COLUMNS})


class BenchConfigSchema(BaseModel):
    n_relations: int = Field(..., ge=1)
    n_queries: list[int] = Field(..., min_length=1)
    attrs_per_relation: int = Field(3, ge=1)
    query_size: int = Field(3, ge=1)
    seed: int = 0
    repetitions: int = Field(5, ge=1)
    rate: float = Field(100.0, gt=0)
    window: int | None = Field(None, ge=1)
    time_limit_ms: int | None = Field(None, ge=1)
    materialize: bool = False
    partitioning: bool = False

    def to_entity(self) -> BenchConfig:
        values: Mapping[str, Any] = self.model_dump()
        return BenchConfig(**{**values, "n_queries": tuple(self.n_queries)})

    @classmethod
    def from_entity(cls, config: BenchConfig) -> "BenchConfigSchema":
        return cls(
            n_relations=config.n_relations,
            n_queries=list(config.n_queries),
            attrs_per_relation=config.attrs_per_relation,
            query_size=config.query_size,
            seed=config.seed,
            repetitions=config.repetitions,
            rate=config.rate,
            window=config.window,
            time_limit_ms=config.time_limit_ms,
            materialize=config.materialize,
            partitioning=config.partitioning,
        )


class BenchReportSchema(BaseModel):
    """Schema for a benchmark report in JSON form."""

    config: BenchConfigSchema
    rows: list[BenchRowSchema] = Field(default_factory=list)

    def to_entity(self) -> BenchReport:
        return BenchReport(self.config.to_entity(), tuple(row.to_entity() for row in self.rows))

    @classmethod
    def from_entity(cls, report: BenchReport) -> "BenchReportSchema":
        return cls(
            config=BenchConfigSchema.from_entity(report.config),
            rows=[BenchRowSchema.from_entity(row) for row in report.rows],
        )
