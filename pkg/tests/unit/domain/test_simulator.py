"""Unit and property-based tests for the stream-join simulator.

The simulator must produce exactly the results of the nested-loop reference
join: no result lost, none emitted twice, whatever the mode and however the
configuration changes between epochs.
"""

import random
from collections import Counter
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from src.domain.entities.catalog import AttributeRef, Catalog, Relation, Statistics
from src.domain.entities.planning import Mir, Partition, PartitionedProbeOrder, PlannerOptions, SelectedPlan
from src.domain.entities.runtime import ChangeKind, QueryChange, SimulationMode, SimulationOptions
from src.domain.entities.topology import StoreKey
from src.domain.exceptions import DuplicateQueryIdError, UnknownQueryError
from src.domain.services.candidates import generate_candidates
from src.domain.services.catalog import validate_workload
from src.domain.services.cost_model import CostContext, shared_cost, step_cost
from src.domain.services.generators import gen_trace
from src.domain.services.join_oracle import covered_results, oracle_join
from src.domain.services.plan_extraction import assemble_plan
from src.domain.services.simulator import StreamJoinSimulator, epochs_for, run_simulation
from tests.factories.catalog_factory import BaseTupleFactory, make_order
from tests.factories.workload_factory import predicate, query, small_workload

ADAPTIVE = SimulationMode.ADAPTIVE
BASE_ONLY = PlannerOptions(materialize=False, partitioning=False)


def _pick_plan(catalog: Catalog, position: int) -> SelectedPlan:
    """Every (query, start) takes its first (0) or last (-1) unpartitioned candidate."""
    candidates = generate_candidates(catalog, BASE_ONLY)
    return SelectedPlan(orders={key: orders[position] for key, orders in candidates.query_orders.items()})


def _random_plan(catalog: Catalog, rng: random.Random) -> SelectedPlan:
    """One random candidate per (query, start) and per (MIR, input), MIR hops and partitionings included."""
    candidates = generate_candidates(catalog, PlannerOptions())
    orders = {key: rng.choice(options) for key, options in candidates.query_orders.items()}
    subquery_orders = {key: rng.choice(options) for key, options in candidates.subquery_orders.items() if options}
    return assemble_plan(orders, subquery_orders, 0.0)


def _mixed_windows(catalog: Catalog, rng: random.Random) -> Catalog:
    relations = [replace(relation, window=rng.randint(1, 4)) for relation in catalog.relations.values()]
    return validate_workload(catalog.queries, relations)


def _broadcast_catalog() -> Catalog:
    relations = [
        Relation("R", ("a",), rate=4.0, window=3),
        Relation("S", ("a", "b"), rate=4.0, window=3, parallelism=5),
    ]
    return validate_workload([query("q1", predicate("R.a", "S.a", 0.25))], relations)


def _pair_catalog(window: int = 3) -> Catalog:
    relations = [
        Relation("R", ("a",), rate=1.0, window=window),
        Relation("S", ("a",), rate=1.0, window=window),
    ]
    return validate_workload([query("q1", predicate("R.a", "S.a", 0.5))], relations)


def _pair_plan(catalog: Catalog) -> SelectedPlan:
    q1 = catalog.query("q1")
    return SelectedPlan(orders={("q1", "R"): make_order(q1, "R", ["S"]), ("q1", "S"): make_order(q1, "S", ["R"])})


def _chain_catalog() -> Catalog:
    """``R.a = S.a, S.b = T.b`` at rate 2, window 20 and selectivity 1/8."""
    relations = [
        Relation("R", ("a",), rate=2.0, window=20),
        Relation("S", ("a", "b"), rate=2.0, window=20),
        Relation("T", ("b",), rate=2.0, window=20),
    ]
    return validate_workload([query("q1", predicate("R.a", "S.a", 0.125), predicate("S.b", "T.b", 0.125))], relations)


def _twin_partition_catalog() -> Catalog:
    """Both queries share ``ST``, whose candidates ``S.a`` and ``T.a`` have the same attribute name."""
    relations = [
        Relation("R", ("a",), rate=3.0, window=3, parallelism=2),
        Relation("S", ("a", "c"), rate=3.0, window=3, parallelism=2),
        Relation("T", ("c", "a"), rate=3.0, window=3, parallelism=2),
        Relation("U", ("a",), rate=3.0, window=3, parallelism=2),
    ]
    st_join = predicate("S.c", "T.c", 0.25)
    return validate_workload(
        [
            query("q1", predicate("R.a", "S.a", 0.25), st_join),
            query("q2", st_join, predicate("T.a", "U.a", 0.25)),
        ],
        relations,
    )


def _with_hop(orders: tuple[PartitionedProbeOrder, ...], mir: Mir, partition: Partition) -> PartitionedProbeOrder:
    return next(order for order in orders if (mir, partition) in list(order.materialized_hops))


def _without_hops(orders: tuple[PartitionedProbeOrder, ...]) -> PartitionedProbeOrder:
    return next(order for order in orders if not list(order.materialized_hops))


# =============================================================================
# Unit Tests for Epoch Arithmetic
# =============================================================================


class TestEpochsFor:
    """Unit tests for the epochs a tuple is processed under."""

    def test_window_reaching_back_one_epoch(self) -> None:
        """Test L=10, W=5 and ts=12 reach epochs 0 and 1."""
        assert epochs_for(12, 5, 10) == [0, 1]

    def test_window_within_one_epoch(self) -> None:
        """Test ts=18, W=5 stays in epoch 1."""
        assert epochs_for(18, 5, 10) == [1]

    def test_no_negative_epochs(self) -> None:
        """Test early tuples never reach before epoch 0."""
        assert epochs_for(3, 50, 10) == [0]


# =============================================================================
# Unit Tests for the Reference Join
# =============================================================================


class TestOracleJoin:
    """Unit tests for window semantics of the reference join."""

    def test_window_of_the_stored_relation_applies(self) -> None:
        """Test a stored tuple joins while younger than its own relation's window."""
        relations = {
            "R": Relation("R", ("a",), rate=1.0, window=2),
            "S": Relation("S", ("a",), rate=1.0, window=10),
        }
        q1 = query("q1", predicate("R.a", "S.a"))
        trace = [
            BaseTupleFactory.build(relation="R", ts=0, attrs={"a": 1}, seq=0),
            BaseTupleFactory.build(relation="S", ts=3, attrs={"a": 1}, seq=1),
            BaseTupleFactory.build(relation="R", ts=5, attrs={"a": 1}, seq=2),
        ]

        results = oracle_join(trace, [q1], relations)

        assert [(result.ts, result.keys) for result in results] == [(5, (("R", 5, 2), ("S", 3, 1)))]

    def test_missing_attribute_joins_nothing(self) -> None:
        """Test tuples lacking the join attribute match no tuple, not even another one lacking it."""
        catalog = _pair_catalog()
        trace = [
            BaseTupleFactory.build(relation="R", ts=0, attrs={}, seq=0),
            BaseTupleFactory.build(relation="S", ts=0, attrs={}, seq=1),
            BaseTupleFactory.build(relation="R", ts=1, attrs={"a": 1}, seq=2),
            BaseTupleFactory.build(relation="S", ts=1, attrs={"a": 1}, seq=3),
        ]

        results = oracle_join(trace, catalog.queries, catalog.relations)

        assert [result.keys for result in results] == [(("R", 1, 2), ("S", 1, 3))]

    def test_covered_results_respect_lifecycles(self, dense_catalog: Catalog, dense_trace: list) -> None:
        """Test results of unknown or removed queries are dropped."""
        results = oracle_join(dense_trace, dense_catalog.queries, dense_catalog.relations)
        first = dense_catalog.queries[0].id
        sim = StreamJoinSimulator(dense_catalog, SimulationOptions(mode=ADAPTIVE))
        sim.start()
        sim.remove_query(first, 20)

        kept = covered_results(results, sim.lifecycles)

        assert kept == [result for result in results if result.query != first or result.ts < 20]


# =============================================================================
# Unit Tests for Static Mode
# =============================================================================


class TestStaticSimulation:
    """Unit tests for one-configuration runs."""

    def test_results_match_the_oracle(self, dense_catalog: Catalog, dense_trace: list) -> None:
        """Test the optimized plan answers exactly the reference results."""
        report = run_simulation(dense_catalog, dense_trace)

        expected = oracle_join(dense_trace, dense_catalog.queries, dense_catalog.relations)

        assert report.results
        assert list(report.results) == expected
        assert report.metrics.results == Counter(result.query for result in expected)

    def test_fixed_plan_matches_the_oracle(self, dense_catalog: Catalog, dense_trace: list) -> None:
        """Test any valid plan, not only the optimal one, is exact."""
        options = SimulationOptions(plan=_pick_plan(dense_catalog, -1))

        report = run_simulation(dense_catalog, dense_trace, options)

        assert list(report.results) == oracle_join(dense_trace, dense_catalog.queries, dense_catalog.relations)

    def test_partitioned_stores_match_the_oracle(self) -> None:
        """Test results are exact with three workers per store."""
        catalog = small_workload(seed=23, parallelism=3)
        trace = gen_trace(catalog, duration=30, seed=2)

        report = run_simulation(catalog, trace, SimulationOptions(seed=9))

        assert list(report.results) == oracle_join(trace, catalog.queries, catalog.relations)

    def test_single_snapshot(self, dense_catalog: Catalog, dense_trace: list) -> None:
        """Test static runs record one metrics snapshot."""
        report = run_simulation(dense_catalog, dense_trace)

        assert [row["epoch"] for row in report.metrics.snapshots] == [0]
        assert report.metrics.config_switches == 0

    def test_runs_are_deterministic(self, dense_catalog: Catalog, dense_trace: list) -> None:
        """Test identical inputs give identical results and counters."""
        first = run_simulation(dense_catalog, dense_trace)
        second = run_simulation(dense_catalog, list(reversed(dense_trace)))

        assert first.results == second.results
        assert first.metrics.probe_messages == second.metrics.probe_messages
        assert first.metrics.store_messages == second.metrics.store_messages

    def test_query_changes_need_adaptive_mode(self, dense_catalog: Catalog) -> None:
        """Test static options reject query changes."""
        change = QueryChange(5, ChangeKind.REMOVE, query_id=dense_catalog.queries[0].id)

        with pytest.raises(ValueError):
            SimulationOptions(query_changes=(change,))

    def test_missing_attribute_joins_nothing(self) -> None:
        """Test the simulator drops the same pairs the reference join drops."""
        catalog = _pair_catalog()
        trace = [
            BaseTupleFactory.build(relation="R", ts=0, attrs={}, seq=0),
            BaseTupleFactory.build(relation="S", ts=0, attrs={}, seq=1),
            BaseTupleFactory.build(relation="R", ts=1, attrs={"a": 1}, seq=2),
            BaseTupleFactory.build(relation="S", ts=1, attrs={"a": 1}, seq=3),
        ]

        report = run_simulation(catalog, trace, SimulationOptions(plan=_pair_plan(catalog)))

        assert [result.keys for result in report.results] == [(("R", 1, 2), ("S", 1, 3))]
        assert list(report.results) == oracle_join(trace, catalog.queries, catalog.relations)

    @pytest.mark.parametrize("mode", list(SimulationMode))
    def test_stores_hold_one_window_of_tuples(self, mode: SimulationMode) -> None:
        """Test a window-3 store keeps four ticks of one-per-tick arrivals after 100 ticks."""
        catalog = _pair_catalog(window=3)
        trace = []
        for tick in range(100):
            trace.append(BaseTupleFactory.build(relation="R", ts=tick, attrs={"a": 0}, seq=2 * tick))
            trace.append(BaseTupleFactory.build(relation="S", ts=tick, attrs={"a": 1}, seq=2 * tick + 1))
        plan = _pair_plan(catalog)
        options = SimulationOptions(mode=mode, epoch_length=10, plan_overrides={0: plan}, planner=BASE_ONLY)
        sim = StreamJoinSimulator(catalog, options)

        report = sim.run(trace)

        assert report.results == ()
        assert sim.stored_tuples("R[*]") == 4
        assert sim.stored_tuples("S[*]") == 4
        assert report.metrics.tuples_evicted > 0

    def test_variants_of_one_mir_keep_separate_stores(self) -> None:
        """Test ST partitioned by S.a and by T.a are two stores, each result emitted once."""
        catalog = _twin_partition_catalog()
        candidates = generate_candidates(catalog)
        shared = next(mir for mir in candidates.mirs if mir.relations == {"S", "T"})
        by_s, by_t = AttributeRef("S", "a"), AttributeRef("T", "a")
        orders = {key: _without_hops(options) for key, options in candidates.query_orders.items()}
        orders[("q1", "R")] = _with_hop(candidates.query_orders[("q1", "R")], shared, by_s)
        orders[("q2", "U")] = _with_hop(candidates.query_orders[("q2", "U")], shared, by_t)
        subquery_orders = {key: options[0] for key, options in candidates.subquery_orders.items() if options}
        plan = assemble_plan(orders, subquery_orders, 0.0)
        trace = gen_trace(catalog, duration=30, seed=3)
        sim = StreamJoinSimulator(catalog, SimulationOptions(plan=plan, seed=1))

        report = sim.run(trace)

        assert StoreKey(shared, by_s).label != StoreKey(shared, by_t).label
        assert {StoreKey(shared, by_s).label, StoreKey(shared, by_t).label} <= set(sim.stores)
        assert report.results
        assert list(report.results) == oracle_join(trace, catalog.queries, catalog.relations)


class TestBroadcastFanout:
    """Unit tests for the measured fan-out of broadcast probes."""

    def test_broadcast_hop_reaches_all_five_workers(self) -> None:
        """Test every R tuple probing S partitioned by b sends five messages."""
        catalog = _broadcast_catalog()
        q1 = catalog.query("q1")
        plan = SelectedPlan(
            orders={
                ("q1", "R"): make_order(q1, "R", ["S"], ["b"]),
                ("q1", "S"): make_order(q1, "S", ["R"]),
            }
        )
        trace = gen_trace(catalog, duration=20, seed=4)
        arrivals = Counter(item.relation for item in trace)

        report = run_simulation(catalog, trace, SimulationOptions(plan=plan))

        assert report.metrics.fanout["S[b]"] == Counter({5: arrivals["R"]})
        assert report.metrics.fanout["R[*]"] == Counter({1: arrivals["S"]})
        assert report.metrics.probe_messages == 5 * arrivals["R"] + arrivals["S"]
        assert list(report.results) == oracle_join(trace, catalog.queries, catalog.relations)

    def test_partition_value_known_hits_one_worker(self) -> None:
        """Test probing S partitioned by the join attribute sends one message."""
        catalog = _broadcast_catalog()
        q1 = catalog.query("q1")
        plan = SelectedPlan(
            orders={
                ("q1", "R"): make_order(q1, "R", ["S"], ["a"]),
                ("q1", "S"): make_order(q1, "S", ["R"]),
            }
        )
        trace = gen_trace(catalog, duration=20, seed=4)

        report = run_simulation(catalog, trace, SimulationOptions(plan=plan))

        assert set(report.metrics.fanout["S[a]"]) == {1}
        assert list(report.results) == oracle_join(trace, catalog.queries, catalog.relations)


class TestModeledCost:
    """Unit tests relating measured message counts to the cost model.

    Step costs are per window; the j-th step's messages per window come to
    ``j`` times its step cost.
    """

    def test_first_steps_match_the_plan_cost(self) -> None:
        """Test messages per window of a two-relation plan equal its shared cost."""
        catalog = _broadcast_catalog()
        q1 = catalog.query("q1")
        plan = SelectedPlan(
            orders={
                ("q1", "R"): make_order(q1, "R", ["S"], ["b"]),
                ("q1", "S"): make_order(q1, "S", ["R"]),
            }
        )
        duration = 60
        trace = gen_trace(catalog, duration=duration, seed=4)

        report = run_simulation(catalog, trace, SimulationOptions(plan=plan))

        measured = report.metrics.probe_messages * catalog.relations["R"].window / duration
        expected = shared_cost(plan.all_orders(), CostContext.from_catalog(catalog))
        assert measured == pytest.approx(expected, rel=0.2)

    def test_every_step_tracks_its_step_cost(self) -> None:
        """Test each edge of a three-relation plan carries j x step cost messages per window, within 20%."""
        catalog = _chain_catalog()
        q1 = catalog.query("q1")
        plan = SelectedPlan(
            orders={
                ("q1", "R"): make_order(q1, "R", ["S", "T"]),
                ("q1", "S"): make_order(q1, "S", ["R", "T"]),
                ("q1", "T"): make_order(q1, "T", ["S", "R"]),
            }
        )
        duration, window = 400, 20
        trace = gen_trace(catalog, duration=duration, seed=7)
        sim = StreamJoinSimulator(catalog, SimulationOptions(plan=plan))
        ctx = CostContext.from_catalog(catalog)

        report = sim.run(trace)

        topology = sim.configs[0].topology
        per_edge = report.metrics.probe_messages_per_edge
        assert len(per_edge) == 6
        for edge, count in sorted(per_edge.items()):
            _, rule = topology.route(edge)
            assert rule.step is not None
            expected = rule.step.index * step_cost(rule.step, ctx)
            assert count * window / duration == pytest.approx(expected, rel=0.2), edge


# =============================================================================
# Unit Tests for Adaptive Mode
# =============================================================================


class TestAdaptiveSimulation:
    """Unit tests for per-epoch configurations."""

    def test_results_match_the_oracle(self, dense_catalog: Catalog, dense_trace: list) -> None:
        """Test replanning every epoch loses and duplicates nothing."""
        report = run_simulation(dense_catalog, dense_trace, SimulationOptions(mode=ADAPTIVE, epoch_length=10))

        assert list(report.results) == oracle_join(dense_trace, dense_catalog.queries, dense_catalog.relations)
        assert len(report.metrics.snapshots) >= 3

    def test_forced_switch_applies_two_epochs_later(self, dense_catalog: Catalog, dense_trace: list) -> None:
        """Test a plan forced for epoch 2 is installed there and results stay exact."""
        first = _pick_plan(dense_catalog, 0)
        second = _pick_plan(dense_catalog, -1)
        options = SimulationOptions(mode=ADAPTIVE, epoch_length=10, plan_overrides={0: first, 2: second})

        report = run_simulation(dense_catalog, dense_trace, options)

        assert first.routing_table() != second.routing_table()
        assert report.routing_tables[0] == first.routing_table()
        assert report.routing_tables[1] == first.routing_table()
        assert report.routing_tables[2] == second.routing_table()
        assert report.metrics.config_switches >= 1
        assert list(report.results) == oracle_join(dense_trace, dense_catalog.queries, dense_catalog.relations)

    def test_injected_statistics_are_recorded(self, dense_catalog: Catalog, dense_trace: list) -> None:
        """Test statistics injected for epoch 0 become that epoch's estimates."""
        relation = next(iter(dense_catalog.relations))
        options = SimulationOptions(
            mode=ADAPTIVE,
            epoch_length=10,
            statistics_overrides={0: Statistics(rates={relation: 9.0})},
        )

        report = run_simulation(dense_catalog, dense_trace, options)

        assert report.metrics.epoch_statistics[0].rates[relation] == 9.0

    def test_registration_and_removal(self, dense_catalog: Catalog, dense_trace: list) -> None:
        """Test queries answer completely while active, and only then."""
        relations = list(dense_catalog.relations)
        added = query("q_new", predicate(f"{relations[0]}.a0", f"{relations[1]}.a1", 0.5))
        removed = dense_catalog.queries[0].id
        changes = (
            QueryChange(15, ChangeKind.REGISTER, query=added),
            QueryChange(25, ChangeKind.REMOVE, query_id=removed),
        )
        options = SimulationOptions(mode=ADAPTIVE, epoch_length=10, query_changes=changes)

        report = run_simulation(dense_catalog, dense_trace, options)

        reference = oracle_join(dense_trace, [*dense_catalog.queries, added], dense_catalog.relations)
        assert list(report.results) == covered_results(reference, report.lifecycles)
        assert report.lifecycles[removed].removed_at == 25
        assert report.lifecycles["q_new"].registered_at == 15
        assert all(result.ts < 25 for result in report.results if result.query == removed)

    def test_removing_an_unknown_query(self, dense_catalog: Catalog) -> None:
        """Test removals must name an active query."""
        sim = StreamJoinSimulator(dense_catalog, SimulationOptions(mode=ADAPTIVE))
        sim.start()

        with pytest.raises(UnknownQueryError):
            sim.remove_query("missing", 0)

    def test_registering_a_known_id(self, dense_catalog: Catalog) -> None:
        """Test a registration may not reuse an id."""
        sim = StreamJoinSimulator(dense_catalog, SimulationOptions(mode=ADAPTIVE))
        sim.start()

        with pytest.raises(DuplicateQueryIdError):
            sim.register_query(dense_catalog.queries[0], 0)


# =============================================================================
# Property-Based Tests for Exactly-Once Results
# =============================================================================


class TestExactlyOnceProperty:
    """Property tests: simulator results equal the reference join."""

    @settings(max_examples=15, deadline=None)
    @given(
        seed=st.integers(min_value=0, max_value=10_000),
        mode=st.sampled_from(list(SimulationMode)),
        epoch_length=st.integers(min_value=2, max_value=12),
    )
    def test_random_workload_and_trace(self, seed: int, mode: SimulationMode, epoch_length: int) -> None:
        """
        For any seeded workload and trace, in either mode and for any epoch
        length, the simulator emits every reference result exactly once.
        """
        catalog = small_workload(seed=seed, n_queries=2)
        trace = gen_trace(catalog, duration=25, seed=seed + 1)

        report = run_simulation(catalog, trace, SimulationOptions(mode=mode, epoch_length=epoch_length, seed=seed))

        assert list(report.results) == oracle_join(trace, catalog.queries, catalog.relations)


class TestRandomPlanProperty:
    """Property tests: any valid plan, MIR hops and partitioned stores included, is exact."""

    @settings(max_examples=100, deadline=None)
    @given(
        seed=st.integers(min_value=0, max_value=10_000),
        query_size=st.sampled_from([3, 4]),
        parallelism=st.integers(min_value=1, max_value=3),
        rng=st.randoms(use_true_random=False),
    )
    def test_static_run_of_a_random_plan(
        self, seed: int, query_size: int, parallelism: int, rng: random.Random
    ) -> None:
        """
        For any workload with per-relation windows and any random choice of
        candidates, the single configuration emits every reference result
        exactly once.
        """
        workload = small_workload(seed=seed, n_queries=2, query_size=query_size, parallelism=parallelism)
        catalog = _mixed_windows(workload, rng)
        trace = gen_trace(catalog, duration=16, seed=seed + 1)
        options = SimulationOptions(plan=_random_plan(catalog, rng), seed=seed)

        report = run_simulation(catalog, trace, options)

        assert list(report.results) == oracle_join(trace, catalog.queries, catalog.relations)

    @settings(max_examples=100, deadline=None)
    @given(
        seed=st.integers(min_value=0, max_value=10_000),
        query_size=st.sampled_from([3, 4]),
        parallelism=st.integers(min_value=1, max_value=3),
        epoch_length=st.integers(min_value=3, max_value=5),
        rng=st.randoms(use_true_random=False),
    )
    def test_adaptive_run_switching_between_random_plans(
        self, seed: int, query_size: int, parallelism: int, epoch_length: int, rng: random.Random
    ) -> None:
        """
        For any workload with per-relation windows, switching from one random
        plan to another while a query is registered and another removed loses
        and duplicates no result the lifecycles cover.
        """
        workload = small_workload(seed=seed, n_queries=2, query_size=query_size, parallelism=parallelism)
        catalog = _mixed_windows(workload, rng)
        trace = gen_trace(catalog, duration=16, seed=seed + 1)
        relations = list(catalog.relations)
        added = query("q_new", predicate(f"{relations[0]}.a0", f"{relations[1]}.a1", 0.5))
        removed = catalog.queries[0].id
        changes = (
            QueryChange(epoch_length + 1, ChangeKind.REGISTER, query=added),
            QueryChange(2 * epoch_length + 1, ChangeKind.REMOVE, query_id=removed),
        )
        options = SimulationOptions(
            mode=ADAPTIVE,
            epoch_length=epoch_length,
            seed=seed,
            plan_overrides={0: _random_plan(catalog, rng), 2: _random_plan(catalog, rng)},
            query_changes=changes,
        )

        report = run_simulation(catalog, trace, options)

        reference = oracle_join(trace, [*catalog.queries, added], catalog.relations)
        assert list(report.results) == covered_results(reference, report.lifecycles)
