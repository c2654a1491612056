"""Deterministic discrete-event simulation of compiled topologies.

Every base tuple is stored on arrival in all registered stores of its
relation, in the container of its arrival epoch. In adaptive mode the
tuple is then processed once under the configuration of every epoch its
window reaches. Under configuration ``e`` probes read base containers of
epochs ``>= e`` and MIR containers of epoch ``e`` only, and a result is
emitted only when its oldest constituent arrived in epoch ``e``. Each
result therefore has exactly one owning configuration.

Statistics observed during epoch ``i`` are evaluated at the start of
``i + 1`` and shape the configuration of ``i + 2``.
"""

import heapq
from collections import Counter
from collections.abc import Callable, Iterable, Sequence

from src.domain.entities.catalog import AttributeRef, Catalog, JoinPredicate, Query, Statistics
from src.domain.entities.ilp import OptimizationOutcome, SolveStatus
from src.domain.entities.planning import PlannerOptions, SelectedPlan
from src.domain.entities.runtime import (
    BaseTuple,
    ChangeKind,
    CompositeTuple,
    EpochConfig,
    JoinResult,
    MetricsLog,
    QueryChange,
    QueryLifecycle,
    SimulationMode,
    SimulationOptions,
    SimulationReport,
    values_join,
)
from src.domain.entities.topology import OUTPUT_PREFIX, EdgeKind, Rule, RuleKind, StoreKey, StoreSpec, Topology
from src.domain.exceptions import DuplicateQueryIdError, UnknownEpochError, UnknownQueryError
from src.domain.services.catalog import validate_query
from src.domain.services.cost_model import CostContext
from src.domain.services.optimizer import optimize_catalog
from src.domain.services.plan_extraction import merge_plans
from src.domain.services.routing import partition_route
from src.domain.services.statistics import EpochObservations, collect_statistics
from src.domain.services.topology_compiler import compile_topology
from src.shared.logging import get_logger

logger = get_logger(__name__)

Planner = Callable[[Catalog, PlannerOptions], OptimizationOutcome]


def default_planner(time_limit_ms: int | None = None) -> Planner:
    def plan(catalog: Catalog, options: PlannerOptions) -> OptimizationOutcome:
        return optimize_catalog(catalog, options, time_limit_ms)

    return plan


def same_routing(first: SelectedPlan, second: SelectedPlan) -> bool:
    """Equal orders and materializations; the cost does not count."""
    return dict(first.orders) == dict(second.orders) and dict(first.materialized) == dict(second.materialized)


def epochs_for(ts: int, window: int, epoch_length: int) -> list[int]:
    """Epochs overlapping ``[ts - window, ts]``."""
    first = max(0, (ts - window) // epoch_length)
    return list(range(first, ts // epoch_length + 1))


class _Container:
    """Tuples of one (store, worker, epoch) with lazily built value indices.

    ``deadline`` is the earliest expiry tick among the items, None when empty.
    """

    def __init__(self) -> None:
        self.items: list[CompositeTuple] = []
        self.expiries: list[int] = []
        self.indices: dict[AttributeRef, dict] = {}
        self.deadline: int | None = None

    def add(self, item: CompositeTuple, expires: int) -> None:
        self.items.append(item)
        self.expiries.append(expires)
        self.deadline = expires if self.deadline is None else min(self.deadline, expires)
        for attribute, index in self.indices.items():
            index.setdefault(item.value(attribute), []).append(item)

    def evict(self, now: int) -> int:
        """Drop the items no arrival at ``now`` or later can join; returns how many."""
        if self.deadline is None or self.deadline >= now:
            return 0
        kept = [(item, expires) for item, expires in zip(self.items, self.expiries) if expires >= now]
        evicted = len(self.items) - len(kept)
        self.items = [item for item, _ in kept]
        self.expiries = [expires for _, expires in kept]
        self.deadline = min(self.expiries, default=None)
        self.indices = {}
        return evicted

    def lookup(self, attribute: AttributeRef, value) -> list[CompositeTuple]:
        if value is None:
            return []
        index = self.indices.get(attribute)
        if index is None:
            index = {}
            for item in self.items:
                index.setdefault(item.value(attribute), []).append(item)
            self.indices[attribute] = index
        return index.get(value, [])


class _StoreState:
    def __init__(self, spec: StoreSpec, since: int):
        self.spec = spec
        self.since = since
        self.containers: dict[int, dict[int, _Container]] = {}

    @property
    def is_base(self) -> bool:
        return self.spec.key.mir.is_base

    def container(self, worker: int, epoch: int) -> _Container:
        return self.containers.setdefault(worker, {}).setdefault(epoch, _Container())

    def drop_before(self, epoch: int) -> None:
        for by_epoch in self.containers.values():
            for key in [key for key in by_epoch if key < epoch]:
                del by_epoch[key]

    def evict(self, now: int) -> int:
        return sum(container.evict(now) for by_epoch in self.containers.values() for container in by_epoch.values())

    @property
    def size(self) -> int:
        return sum(len(container.items) for by_epoch in self.containers.values() for container in by_epoch.values())


class StreamJoinSimulator:
    """Store/probe execution of a workload over a trace.

    Args:
        catalog: Relations, initial queries and configured statistics.
        options: Run parameters.
        planner: Optimizer used for the initial plan, replanning and bootstraps.
    """

    def __init__(self, catalog: Catalog, options: SimulationOptions | None = None, planner: Planner | None = None):
        self.catalog = catalog
        self.options = options or SimulationOptions()
        self.planner = planner or default_planner(self.options.time_limit_ms)
        self.adaptive = self.options.mode is SimulationMode.ADAPTIVE
        self.length = self.options.epoch_length
        self.windows = {name: relation.window for name, relation in catalog.relations.items()}
        self.global_window = max(self.windows.values(), default=0)

        self.known: dict[str, Query] = {query.id: query for query in catalog.queries}
        self.active: dict[str, Query] = dict(self.known)
        self.lifecycles: dict[str, QueryLifecycle] = {query.id: QueryLifecycle() for query in catalog.queries}
        self.configs: dict[int, EpochConfig] = {}
        self.stores: dict[str, _StoreState] = {}
        self.observations: dict[int, EpochObservations] = {}
        self.metrics = MetricsLog()
        self.results: list[JoinResult] = []
        self.now = 0
        self.closed = -1
        self.evicted_at = -1
        self._window_cache: dict[str, int] = {}
        self.estimates = self._prior_statistics(self.known.values(), Statistics())
        self.started = False

    # ------------------------------------------------------------------
    # Configuration
    # ------------------------------------------------------------------

    def _prior_statistics(self, queries: Iterable[Query], base: Statistics) -> Statistics:
        ctx = CostContext.from_catalog(self.catalog)
        rates = {name: ctx.rate(name) for name in self.catalog.relations}
        selectivities = {predicate: ctx.selectivity(predicate) for query in queries for predicate in query.predicates}
        return Statistics(rates, selectivities).merged_with(base)

    def _catalog_for(self, queries: Sequence[Query]) -> Catalog:
        statistics = self.catalog.statistics.merged_with(self.estimates)
        return self.catalog.with_queries(queries).with_statistics(statistics)

    def _plan(self, queries: Sequence[Query], options: PlannerOptions | None = None) -> OptimizationOutcome:
        if not queries:
            return OptimizationOutcome(SelectedPlan(orders={}), SolveStatus.OPTIMAL)
        return self.planner(self._catalog_for(queries), options or self.options.planner)

    def _configure(self, epoch: int, plan: SelectedPlan) -> EpochConfig:
        topology = compile_topology(plan, self.catalog)
        self._register_stores(topology)
        return EpochConfig(epoch, plan, topology, frozenset(plan.query_ids))

    def _register_stores(self, topology: Topology) -> None:
        for label, spec in topology.stores.items():
            if label in self.stores:
                continue
            self.stores[label] = _StoreState(spec, self.now)
            self.metrics.stores_registered += 1

    def _install(self, config: EpochConfig) -> None:
        self.configs[config.epoch] = config
        self.metrics.routing_tables[config.epoch] = config.plan.routing_table()
        for query_id in config.active:
            lifecycle = self.lifecycles.get(query_id)
            if lifecycle is not None and lifecycle.complete_from is None:
                lifecycle.complete_from = config.epoch * self.length

    def start(self) -> None:
        """Install the configurations of the first epochs."""
        if self.started:
            return
        self.started = True
        overrides = self.options.plan_overrides
        initial = overrides.get(0) or self.options.plan or self._plan(list(self.active.values())).plan
        first = self._configure(0, initial)
        self._install(first)
        if self.adaptive:
            second = overrides.get(1)
            if second is None:
                self._install(EpochConfig(1, first.plan, first.topology, first.active))
            else:
                self._install(self._configure(1, second))
        logger.info("simulation_started", mode=self.options.mode.value, stores=len(self.stores))

    # ------------------------------------------------------------------
    # Epoch bookkeeping
    # ------------------------------------------------------------------

    def arrival_epoch(self, ts: int) -> int:
        return ts // self.length if self.adaptive else 0

    def max_window(self, relation: str) -> int:
        """Largest window among relations co-queried with ``relation``."""
        cached = self._window_cache.get(relation)
        if cached is None:
            windows = [
                self.windows[name]
                for query in self.known.values()
                if relation in query.relations
                for name in query.relations
            ]
            cached = self._window_cache[relation] = max(windows, default=self.windows.get(relation, 0))
        return cached

    def target_epochs(self, item: BaseTuple) -> list[int]:
        if not self.adaptive:
            return [0]
        return epochs_for(item.ts, self.max_window(item.relation), self.length)

    def _predicates(self) -> list[JoinPredicate]:
        predicates = {predicate for query in self.known.values() for predicate in query.predicates}
        return sorted(predicates, key=lambda predicate: predicate.sort_key)

    def advance_epoch(self, now: int) -> EpochConfig | None:
        """Close epoch ``now / L - 1`` and configure epoch ``now / L + 1``.

        Returns:
            The new configuration, or None when the incumbent is kept.
        """
        self.now = now
        closing = now // self.length - 1
        self.closed = closing
        observed = collect_statistics(
            closing,
            self.observations.pop(closing, EpochObservations()),
            self.length,
            self._predicates(),
            self.estimates,
        )
        injected = self.options.statistics_overrides.get(closing)
        if injected is not None:
            observed = observed.merged_with(injected)
        self.estimates = observed
        self.metrics.epoch_statistics[closing] = observed

        target = closing + 2
        previous = self.configs[target - 1]
        active = frozenset(self.active)
        plan = self.options.plan_overrides.get(target)
        if plan is None:
            outcome = self._plan(list(self.active.values()))
            keep = outcome.status is SolveStatus.TIMEOUT and active == previous.active
            plan = previous.plan if keep else outcome.plan

        created: EpochConfig | None = None
        if same_routing(plan, previous.plan) and frozenset(plan.query_ids) == previous.active:
            self._install(EpochConfig(target, previous.plan, previous.topology, previous.active))
        else:
            created = self._configure(target, plan)
            self._install(created)
            self.metrics.config_switches += 1
            logger.info("config_switched", epoch=target, orders=len(plan.orders), cost=plan.total_cost)

        self._expire(now)
        self.metrics.snapshot(closing)
        logger.debug("epoch_advanced", closed=closing, configured=target, stores=len(self.stores))
        return created

    def _expire(self, now: int) -> None:
        # Epoch e can own no result once every tuple of it is older than any window.
        horizon = self.global_window
        for epoch in sorted(self.configs):
            if now > (epoch + 1) * self.length + horizon:
                del self.configs[epoch]
        oldest = min(self.configs, default=now // self.length)
        for state in self.stores.values():
            state.drop_before(oldest)
        referenced = {label for config in self.configs.values() for label in config.topology.stores}
        for label in sorted(set(self.stores) - referenced):
            del self.stores[label]
            self.metrics.stores_deregistered += 1
            logger.info("store_deregistered", store=label, tick=now)

    def evict(self, now: int) -> None:
        """Drop stored tuples and MIR composites that fell out of every window by ``now``, in either mode."""
        evicted = sum(state.evict(now) for state in self.stores.values())
        self.metrics.tuples_evicted += evicted
        self.evicted_at = now

    def stored_tuples(self, label: str | None = None) -> int:
        """Tuples currently held by one store, or by all stores when ``label`` is None."""
        if label is not None:
            return self.stores[label].size
        return sum(state.size for state in self.stores.values())

    def store_refcounts(self) -> Counter[str]:
        """Active queries served by each store of the newest configuration."""
        counts: Counter[str] = Counter()
        if not self.configs:
            return counts
        topology = self.configs[max(self.configs)].topology
        for (query_id, _), order in topology.plan.orders.items():
            if query_id not in self.active:
                continue
            labels = {StoreKey(hop, part).label for hop, part in zip(order.hops, order.hop_partitionings)}
            for mir, materialized in topology.plan.materialized.items():
                if any(hop == mir for hop in order.hops):
                    labels.update(StoreKey(mir, part).label for part in materialized.partitions)
            counts.update(labels)
        return counts

    # ------------------------------------------------------------------
    # Query lifecycle
    # ------------------------------------------------------------------

    def _covered(self, relation: str, now: int) -> bool:
        return any(
            state.is_base and relation in state.spec.key.mir.relations and state.since <= now - self.windows[relation]
            for state in self.stores.values()
        )

    def register_query(self, query: Query, now: int) -> QueryLifecycle:
        """Add a query to the running workload.

        When all but at most one of its relations are stored over a full
        window, its bootstrap orders are merged into every live
        configuration and it answers completely from now on. Otherwise it
        joins the next planning round.

        Raises:
            DuplicateQueryIdError: If the id was ever registered.
            WorkloadValidationError: If the query is invalid for the catalog.
        """
        if query.id in self.known:
            raise DuplicateQueryIdError(query.id)
        validate_query(query, self.catalog.relations)
        self.now = now
        self.known[query.id] = query
        self.active[query.id] = query
        self._window_cache.clear()
        self.estimates = self._prior_statistics([query], self.estimates)

        uncovered = frozenset(name for name in query.relations if not self._covered(name, now))
        if len(uncovered) > 1:
            lifecycle = self.lifecycles[query.id] = QueryLifecycle(registered_at=now, complete_from=None)
            logger.info("query_registered", query=query.id, tick=now, uncovered=sorted(uncovered))
            return lifecycle

        options = PlannerOptions(materialize=False, partitioning=self.options.planner.partitioning)
        bootstrap = self._plan([query], options).plan
        existing = set(self.stores)
        for epoch in sorted(self.configs):
            config = self.configs[epoch]
            merged = merge_plans(config.plan, bootstrap)
            self._install(self._configure(epoch, merged))
        for label in sorted(set(self.stores) - existing):
            self._fill(self.stores[label])
        lifecycle = self.lifecycles[query.id] = QueryLifecycle(
            registered_at=now, complete_from=0, fresh_relations=uncovered
        )
        logger.info("query_bootstrapped", query=query.id, tick=now, fresh=sorted(uncovered))
        return lifecycle

    def _fill(self, state: _StoreState) -> None:
        """Copy a new base store's content from an existing store of the same relation."""
        if not state.is_base:
            return
        relation = state.spec.key.mir.sorted_relations[0]
        sources = [
            other
            for other in self.stores.values()
            if other is not state
            and other.is_base
            and relation in other.spec.key.mir.relations
            and other.since < state.since
        ]
        if not sources:
            return
        source = min(sources, key=lambda other: (other.since, other.spec.label))
        for by_epoch in source.containers.values():
            for epoch, container in by_epoch.items():
                for item in container.items:
                    self._put(state, item, epoch)
        state.since = source.since

    def remove_query(self, query_id: str, now: int) -> None:
        """Stop answering a query; stores only it used are released once no live epoch needs them.

        Raises:
            UnknownQueryError: If the query is not active.
        """
        if query_id not in self.active:
            raise UnknownQueryError(query_id)
        self.now = now
        del self.active[query_id]
        self.lifecycles[query_id].removed_at = now
        logger.info("query_removed", query=query_id, tick=now, refcounts=dict(self.store_refcounts()))

    def apply_change(self, change: QueryChange) -> None:
        if change.kind is ChangeKind.REGISTER and change.query is not None:
            self.register_query(change.query, change.tick)
        else:
            self.remove_query(change.target_id, change.tick)

    # ------------------------------------------------------------------
    # Tuple handling
    # ------------------------------------------------------------------

    def _put(self, state: _StoreState, item: CompositeTuple, epoch: int) -> None:
        key = state.spec.key
        workers = partition_route(item, key.partition, state.spec.parallelism, (), self.options.seed)
        expires = item.expires(self.windows)
        for worker in workers:
            state.container(worker, epoch).add(item, expires)
        self.metrics.store_messages += len(workers)
        self.metrics.tuples_stored += len(workers)

    def handle_input(self, item: BaseTuple) -> None:
        """Store an arriving tuple and probe it under every epoch its window reaches.

        Raises:
            UnknownEpochError: If one of those epochs has no configuration.
        """
        self.now = item.ts
        if item.ts > self.evicted_at:
            self.evict(item.ts)
        arrival = self.arrival_epoch(item.ts)
        self.observations.setdefault(arrival, EpochObservations()).observe(item)
        composite = CompositeTuple.of(item)
        for label in sorted(self.stores):
            state = self.stores[label]
            if state.is_base and item.relation in state.spec.key.mir.relations:
                self._put(state, composite, arrival)
        for epoch in self.target_epochs(item):
            config = self.configs.get(epoch)
            if config is None:
                raise UnknownEpochError(epoch)
            for edge in config.topology.sources.get(item.relation, ()):
                if config.topology.edges[edge].kind is EdgeKind.PROBE:
                    self.handle(edge, epoch, composite, config)

    def handle(self, edge: str, epoch: int, item: CompositeTuple, config: EpochConfig) -> None:
        """Dispatch a tuple arriving on ``edge`` under the configuration of ``epoch``.

        Raises:
            UnroutableEdgeError: If no store handles the edge.
        """
        spec, rule = config.topology.route(edge)
        state = self.stores[spec.label]
        if rule.kind is RuleKind.STORE:
            self._put(state, item, epoch)
            return
        workers = partition_route(item, spec.key.partition, spec.parallelism, rule.predicates, self.options.seed)
        self.metrics.probe_messages += len(workers)
        self.metrics.probe_messages_per_edge[edge] += len(workers)
        self.metrics.record_fanout(spec.label, len(workers))
        for worker in workers:
            for match in self._matches(state, worker, epoch, rule, item):
                joined = item.joined(match)
                if not joined.window_ok(self.windows):
                    continue
                for out in rule.out_edges:
                    if out.startswith(OUTPUT_PREFIX):
                        self._emit(out[len(OUTPUT_PREFIX) :], joined, epoch)
                    else:
                        self.handle(out, epoch, joined, config)

    def _matches(self, state: _StoreState, worker: int, epoch: int, rule: Rule, item: CompositeTuple):
        by_epoch = state.containers.get(worker, {})
        if state.is_base:
            containers = [by_epoch[key] for key in sorted(by_epoch) if key >= epoch]
        else:
            containers = [by_epoch[epoch]] if epoch in by_epoch else []
        lookups = rule.lookups
        for container in containers:
            if lookups:
                first = lookups[0]
                candidates = container.lookup(first.stored, item.value(first.incoming))
            else:
                candidates = container.items
            for candidate in candidates:
                rest = lookups[1:]
                if all(values_join(item.value(look.incoming), candidate.value(look.stored)) for look in rest):
                    yield candidate

    def _emit(self, query_id: str, joined: CompositeTuple, epoch: int) -> None:
        if self.arrival_epoch(joined.min_ts) != epoch:
            return
        lifecycle = self.lifecycles.get(query_id)
        if lifecycle is None or not lifecycle.is_active(self.now):
            return
        self.results.append(JoinResult(query_id, self.now, joined.parts))
        self.metrics.results[query_id] += 1
        self.metrics.latencies.append(self.now - joined.max_ts)

    # ------------------------------------------------------------------
    # Driver
    # ------------------------------------------------------------------

    def advance_to(self, tick: int, changes: list[tuple[int, int, QueryChange]]) -> None:
        """Process epoch boundaries and query changes up to ``tick``; boundaries go first within a tick."""
        while True:
            boundary = (self.closed + 2) * self.length if self.adaptive else None
            change_tick = changes[0][0] if changes else None
            if boundary is not None and boundary <= tick and (change_tick is None or boundary <= change_tick):
                self.advance_epoch(boundary)
            elif change_tick is not None and change_tick <= tick:
                _, _, change = heapq.heappop(changes)
                self.apply_change(change)
            else:
                return

    def run(self, trace: Iterable[BaseTuple]) -> SimulationReport:
        """Process a whole trace in ``(ts, relation, seq)`` order.

        Query changes after the last event and the horizon are not applied.
        """
        self.start()
        events = sorted(trace, key=lambda item: (item.ts, item.relation, item.seq))
        changes = [(change.tick, index, change) for index, change in enumerate(self.options.query_changes)]
        heapq.heapify(changes)
        for item in events:
            self.advance_to(item.ts, changes)
            self.handle_input(item)
        last = events[-1].ts if events else 0
        horizon = max(last, self.options.horizon or 0)
        self.advance_to(horizon, changes)
        if not self.adaptive:
            self.metrics.snapshot(0)
        results = tuple(sorted(self.results, key=lambda result: result.sort_key))
        logger.info(
            "simulation_finished",
            results=len(results),
            probe_messages=self.metrics.probe_messages,
            config_switches=self.metrics.config_switches,
        )
        return SimulationReport(
            results=results,
            metrics=self.metrics,
            routing_tables=dict(self.metrics.routing_tables),
            lifecycles=dict(self.lifecycles),
        )


def run_simulation(
    catalog: Catalog,
    trace: Iterable[BaseTuple],
    options: SimulationOptions | None = None,
    planner: Planner | None = None,
) -> SimulationReport:
    """Simulate ``catalog``'s queries over ``trace``; identical inputs give identical reports."""
    return StreamJoinSimulator(catalog, options, planner).run(trace)
