"""Unit and property-based tests for the probe-order ILP, its exact solver and the enumeration oracle."""

import pytest
from hypothesis import assume, given, settings, strategies as st

from src.domain.entities.bench import WorkloadConfig
from src.domain.entities.catalog import Catalog
from src.domain.entities.ilp import Comparator, ConstraintFamily, IlpModel, SolveStatus, VariableKind
from src.domain.entities.planning import CandidateSet, PlannerOptions
from src.domain.exceptions import InconsistentSolutionError, InfeasibleModelError, TooLargeError
from src.domain.services.candidates import generate_candidates
from src.domain.services.cost_model import CostContext, shared_cost
from src.domain.services.generators import gen_workload
from src.domain.services.ilp_builder import build_ilp, order_variable_name
from src.domain.services.ilp_solver import solve
from src.domain.services.optimizer import optimize_catalog
from src.domain.services.plan_extraction import extract_plan
from src.domain.services.plan_oracle import brute_force_plan
from tests.factories.workload_factory import mir_catalog

BASE_ONLY = PlannerOptions(materialize=False, partitioning=False)


def _model(catalog: Catalog, options: PlannerOptions | None = None) -> IlpModel:
    return build_ilp(catalog.queries, generate_candidates(catalog, options), CostContext.from_catalog(catalog))


def _rows(model: IlpModel, prefix: str) -> list:
    return [row for row in model.constraints if row.name.startswith(prefix)]


def _check_against_oracle(catalog: Catalog, options: PlannerOptions) -> None:
    candidates = generate_candidates(catalog, options)
    ctx = CostContext.from_catalog(catalog)
    try:
        expected = brute_force_plan(catalog.queries, candidates, ctx)
    except TooLargeError:
        assume(False)
    model = build_ilp(catalog.queries, candidates, ctx)

    solution = solve(model)
    plan = extract_plan(model, solution)

    assert solution.status is SolveStatus.OPTIMAL
    assert model.is_feasible(solution.assignment)
    assert solution.objective == pytest.approx(expected.total_cost, rel=1e-9)
    assert shared_cost(plan.all_orders(), ctx) == pytest.approx(solution.objective, rel=1e-9)


# =============================================================================
# Unit Tests for Model Construction
# =============================================================================


class TestBuildIlp:
    """Unit tests for the rows and variables of the MIR instance."""

    def test_one_of_row(self) -> None:
        """Test the six candidates from R form one equality row."""
        model = _model(mir_catalog())
        names = model.groups[("q1", "R")]

        (row,) = _rows(model, "one_of[q=q1,start=R]")

        assert names == tuple(order_variable_name(("q1", "R"), index) for index in range(6))
        assert names[0] == "x[q=q1,start=R,idx=0]"
        assert row.comparator is Comparator.EQ
        assert row.rhs == 1.0
        assert row.coefficients == tuple((name, 1.0) for name in names)

    def test_equal_prefixes_share_a_step_variable(self) -> None:
        """Test <R,S[b],T[c]> and <R,S[b],T[d]> share their first step variable only."""
        model = _model(mir_catalog())
        first = model.order_steps["x[q=q1,start=R,idx=0]"]
        third = model.order_steps["x[q=q1,start=R,idx=2]"]

        assert first[0] == third[0]
        assert first[1] != third[1]
        assert first[0].startswith("y[")
        assert model.variables[first[0]].kind is VariableKind.STEP

    def test_mir_hop_requires_both_inputs(self) -> None:
        """Test <R,ST[b]> needs a subquery order for each input of ST."""
        model = _model(mir_catalog())
        name = "x[q=q1,start=R,idx=4]"

        binding = _rows(model, f"need[{name},")
        export_only = _rows(model, f"need_all[{name},")

        assert len(binding) == 2
        assert all(row.binding and row.family is ConstraintFamily.SUBQUERY for row in binding)
        assert all(row.coefficients[0] == (name, -1.0) for row in binding)
        assert len(export_only) == 2
        for row in export_only:
            assert not row.binding
            assert row.family is ConstraintFamily.SUBQUERY_AGGREGATED
            assert row.coefficients[0] == (name, -2.0)
            assert [coefficient for _, coefficient in row.coefficients[1:]] == [1.0, 1.0]

    def test_subquery_groups_and_at_most_one_rows(self) -> None:
        """Test each input of ST has two subquery variables bounded by one."""
        model = _model(mir_catalog())
        st_groups = {key: names for key, names in model.subquery_groups.items() if key[0].name == "ST"}

        assert sorted(start for _, start in st_groups) == ["S", "T"]
        for (mir, start), names in st_groups.items():
            assert len(names) == 2
            assert all(model.variables[name].kind is VariableKind.SUBQUERY for name in names)
            (row,) = _rows(model, f"at_most_one[mir={mir.label},input={start}]")
            assert row.rhs == -1.0
            assert row.coefficients == tuple((name, -1.0) for name in names)

    def test_cost_rows(self, mqo_catalog: Catalog) -> None:
        """Test the cost row of <S,T,R> is -175 x + 100 y1 + 75 y2 >= 0."""
        model = _model(mqo_catalog, BASE_ONLY)
        name = "x[q=q1,start=S,idx=1]"

        (row,) = _rows(model, f"cost[{name}]")

        assert row.coefficients[0] == (name, pytest.approx(-175.0))
        assert [cost for _, cost in row.coefficients[1:]] == pytest.approx([100.0, 75.0])
        assert row.rhs == 0.0

    def test_goal_holds_one_cost_per_distinct_step(self, mqo_catalog: Catalog) -> None:
        """Test goal coefficients are the 100/75/50 step costs."""
        model = _model(mqo_catalog, BASE_ONLY)

        assert sorted(set(round(cost, 9) for cost in model.goal.values())) == [50.0, 75.0, 100.0]
        assert set(model.goal) == set(model.step_variables)


# =============================================================================
# Unit Tests for Solving
# =============================================================================


class TestSolve:
    """Unit tests for the exact solver on the hand-written instances."""

    def test_shared_optimum_picks_the_locally_worse_order(self, mqo_catalog: Catalog) -> None:
        """Test sharing makes <S,T,R> the choice for (q1, S) at a total of 800."""
        outcome = optimize_catalog(mqo_catalog, BASE_ONLY)

        assert outcome.status is SolveStatus.OPTIMAL
        assert outcome.plan.total_cost == pytest.approx(800.0)
        assert str(outcome.plan.orders[("q1", "S")].base) == "<S, T, R>"
        assert str(outcome.plan.orders[("q2", "T")].base) == "<T, S, U>"
        assert outcome.model is not None
        assert outcome.plan.orders[("q1", "S")] == outcome.model.variables["x[q=q1,start=S,idx=1]"].order

    def test_shared_optimum_matches_the_oracle(self, mqo_catalog: Catalog) -> None:
        """Test the oracle confirms 800 on the sharing instance."""
        candidates = generate_candidates(mqo_catalog, BASE_ONLY)

        plan = brute_force_plan(mqo_catalog.queries, candidates, CostContext.from_catalog(mqo_catalog))

        assert plan.total_cost == pytest.approx(800.0)

    def test_mir_instance_matches_the_oracle(self) -> None:
        """Test the solver and the oracle agree with MIRs and partitioning on."""
        _check_against_oracle(mir_catalog(), PlannerOptions())

    def test_selected_mir_is_materialized(self) -> None:
        """Test every MIR hop of the optimal plan comes with one subquery order per input."""
        outcome = optimize_catalog(mir_catalog())

        for order in outcome.plan.orders.values():
            for hop, partition in order.materialized_hops:
                materialized = outcome.plan.materialized[hop]
                assert partition in materialized.partitions
                assert [sub.start_relation for sub in materialized.orders] == list(hop.sorted_relations)

    def test_empty_group_is_infeasible(self, mqo_catalog: Catalog) -> None:
        """Test a (query, start) without candidates makes the model infeasible."""
        model = build_ilp(mqo_catalog.queries, CandidateSet({}, {}), CostContext.from_catalog(mqo_catalog))

        solution = solve(model)

        assert solution.status is SolveStatus.INFEASIBLE
        with pytest.raises(InconsistentSolutionError):
            extract_plan(model, solution)

    def test_extract_rejects_missing_selection(self, mqo_catalog: Catalog) -> None:
        """Test an assignment selecting nothing is not a plan."""
        model = _model(mqo_catalog, BASE_ONLY)
        solution = solve(model)
        empty = type(solution)({name: 0 for name in model.variables}, 0.0, SolveStatus.OPTIMAL)

        with pytest.raises(InconsistentSolutionError):
            extract_plan(model, empty)


class TestBruteForcePlan:
    """Unit tests for the enumeration oracle's guards."""

    def test_combination_limit(self) -> None:
        """Test workloads beyond the bound raise TooLargeError."""
        catalog = mir_catalog()

        with pytest.raises(TooLargeError):
            brute_force_plan(catalog.queries, generate_candidates(catalog), CostContext.from_catalog(catalog), 1)

    def test_missing_candidates(self, mqo_catalog: Catalog) -> None:
        """Test a (query, start) without candidates raises InfeasibleModelError."""
        with pytest.raises(InfeasibleModelError):
            brute_force_plan(mqo_catalog.queries, CandidateSet({}, {}), CostContext.from_catalog(mqo_catalog))


# =============================================================================
# Property-Based Tests for Solver and Oracle Equivalence
# =============================================================================


class TestSolverOracleEquivalence:
    """Property tests: the exact solver finds the oracle's optimum."""

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=100_000))
    def test_random_workloads_with_mirs(self, seed: int) -> None:
        """
        For any seeded workload of three size-3 queries over five relations,
        with MIR hops enabled, the solver's objective equals the oracle's cost.
        """
        config = WorkloadConfig(n_relations=5, attrs_per_relation=2, n_queries=3, query_size=3, seed=seed, rate=10.0)

        _check_against_oracle(gen_workload(config), PlannerOptions(partitioning=False))

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=100_000))
    def test_random_workloads_with_partitioning(self, seed: int) -> None:
        """
        For any seeded workload of pairwise joins over partitioned stores, the
        solver's objective equals the oracle's cost.
        """
        config = WorkloadConfig(
            n_relations=4,
            attrs_per_relation=2,
            n_queries=3,
            query_size=2,
            seed=seed,
            rate=10.0,
            parallelism=3,
        )

        _check_against_oracle(gen_workload(config), PlannerOptions())

    @settings(max_examples=100, deadline=None)
    @given(
        seed=st.integers(min_value=0, max_value=100_000),
        query_size=st.integers(min_value=2, max_value=4),
        n_relations=st.integers(min_value=4, max_value=8),
        n_queries=st.integers(min_value=1, max_value=5),
    )
    def test_random_workload_shapes(self, seed: int, query_size: int, n_relations: int, n_queries: int) -> None:
        """
        For up to five queries of up to four relations over at most eight
        relations, the solver's objective equals the oracle's cost.
        """
        config = WorkloadConfig(
            n_relations=n_relations,
            attrs_per_relation=2,
            n_queries=n_queries if query_size < 4 else min(n_queries, 3),
            query_size=query_size,
            seed=seed,
            rate=10.0,
        )

        _check_against_oracle(gen_workload(config), BASE_ONLY)


class TestMonotoneOptimum:
    """Property tests: more queries never make the shared optimum cheaper."""

    @settings(max_examples=30, deadline=None)
    @given(
        seed=st.integers(min_value=0, max_value=100_000),
        n_queries=st.integers(min_value=2, max_value=4),
    )
    def test_adding_a_query_never_lowers_the_optimum(self, seed: int, n_queries: int) -> None:
        """
        For any seeded workload, the optimum over all queries costs at least
        the optimum over all but the last one.
        """
        config = WorkloadConfig(
            n_relations=5,
            attrs_per_relation=2,
            n_queries=n_queries,
            query_size=3,
            seed=seed,
            rate=10.0,
        )
        catalog = gen_workload(config)
        options = PlannerOptions(partitioning=False)

        fewer = optimize_catalog(catalog.with_queries(catalog.queries[:-1]), options)
        more = optimize_catalog(catalog, options)

        assert fewer.status is SolveStatus.OPTIMAL
        assert more.status is SolveStatus.OPTIMAL
        assert more.plan.total_cost >= fewer.plan.total_cost - 1e-6
