"""Unit tests for per-epoch statistics collection."""

import pytest

from src.domain.entities.catalog import Relation, Statistics
from src.domain.services.catalog import validate_workload
from src.domain.services.generators import gen_trace
from src.domain.services.statistics import EpochObservations, collect_statistics
from tests.factories.catalog_factory import BaseTupleFactory
from tests.factories.workload_factory import predicate, query


class TestEpochObservations:
    """Unit tests for arrival counts and pair matches."""

    def test_matches_count_agreeing_pairs(self) -> None:
        """Test two R and two S tuples with a = 1 agree in four pairs."""
        observations = EpochObservations()
        for relation, value in [("R", 1), ("R", 1), ("R", 2), ("S", 1), ("S", 1), ("S", 3)]:
            observations.observe(BaseTupleFactory.build(relation=relation, attrs={"a": value}))

        assert observations.arrivals == {"R": 3, "S": 3}
        assert observations.matches(predicate("R.a", "S.a")) == 4

    def test_unobserved_attribute_has_no_matches(self) -> None:
        """Test predicates over attributes never seen match nothing."""
        observations = EpochObservations()
        observations.observe(BaseTupleFactory.build(relation="R", attrs={"a": 1}))

        assert observations.matches(predicate("R.a", "S.a")) == 0


class TestCollectStatistics:
    """Unit tests for the per-epoch estimates."""

    def test_smoothed_selectivity_and_rates(self) -> None:
        """Test (4 + 1) / (9 + 1 / 0.5) with rates per tick of a five-tick epoch."""
        rs = predicate("R.a", "S.a")
        observations = EpochObservations()
        for relation, value in [("R", 1), ("R", 1), ("R", 2), ("S", 1), ("S", 1), ("S", 3)]:
            observations.observe(BaseTupleFactory.build(relation=relation, attrs={"a": value}))
        prior = Statistics(rates={"T": 3.0}, selectivities={rs: 0.5})

        estimates = collect_statistics(4, observations, 5, [rs], prior)

        assert estimates.selectivity(rs) == pytest.approx(5 / 11)
        assert estimates.rates == {"T": 3.0, "R": 0.6, "S": 0.6}
        assert estimates.source == "4"

    def test_predicates_without_pairs_keep_the_prior(self) -> None:
        """Test a side without arrivals leaves the selectivity unchanged."""
        rs = predicate("R.a", "S.a")
        observations = EpochObservations()
        observations.observe(BaseTupleFactory.build(relation="R", attrs={"a": 1}))

        estimates = collect_statistics(0, observations, 10, [rs], Statistics(selectivities={rs: 0.2}))

        assert estimates.selectivity(rs) == 0.2

    def test_estimates_track_generated_data(self) -> None:
        """Test a trace generated for selectivity 0.1 is measured within 20%."""
        rs = predicate("R.a", "S.a", 0.1)
        relations = [Relation("R", ("a",), rate=10.0, window=5), Relation("S", ("a",), rate=10.0, window=5)]
        catalog = validate_workload([query("q1", rs)], relations)
        observations = EpochObservations()
        for item in gen_trace(catalog, duration=100, seed=12):
            observations.observe(item)

        estimates = collect_statistics(0, observations, 100, [rs], Statistics(selectivities={rs: 0.1}))

        assert estimates.rates == {"R": 10.0, "S": 10.0}
        assert estimates.selectivity(rs) == pytest.approx(0.1, rel=0.2)

    def test_zero_prior_recovers_from_observed_matches(self) -> None:
        """Test a selectivity estimated at 0 moves to (4 + 1) / (9 + 1) once matches show up."""
        rs = predicate("R.a", "S.a")
        observations = EpochObservations()
        for relation, value in [("R", 1), ("R", 1), ("R", 2), ("S", 1), ("S", 1), ("S", 3)]:
            observations.observe(BaseTupleFactory.build(relation=relation, attrs={"a": value}))

        estimates = collect_statistics(3, observations, 5, [rs], Statistics(selectivities={rs: 0.0}))

        assert estimates.selectivity(rs) == pytest.approx(0.5)
        assert estimates.selectivity(rs) > 0

    def test_missing_values_never_match(self) -> None:
        """Test tuples without the join attribute count as arrivals but not as matches."""
        rs = predicate("R.a", "S.a")
        observations = EpochObservations()
        observations.observe(BaseTupleFactory.build(relation="R", attrs={"a": None}))
        observations.observe(BaseTupleFactory.build(relation="S", attrs={"a": None}))

        assert observations.arrivals == {"R": 1, "S": 1}
        assert observations.matches(rs) == 0
