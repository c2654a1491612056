"""Per-epoch statistics gathered from arrivals."""

from collections import Counter, defaultdict
from collections.abc import Iterable

from src.domain.entities.catalog import AttributeRef, JoinPredicate, Statistics
from src.domain.entities.runtime import BaseTuple


class EpochObservations:
    """Arrival counts and value histograms of one epoch."""

    def __init__(self) -> None:
        self.arrivals: Counter[str] = Counter()
        self.histograms: defaultdict[AttributeRef, Counter] = defaultdict(Counter)

    def observe(self, item: BaseTuple) -> None:
        self.arrivals[item.relation] += 1
        for attribute, value in item.attrs.items():
            if value is None:
                continue
            self.histograms[AttributeRef(item.relation, attribute)][value] += 1

    def matches(self, predicate: JoinPredicate) -> int:
        """Pairs of this epoch's arrivals agreeing on the predicate."""
        left = self.histograms.get(predicate.left, Counter())
        right = self.histograms.get(predicate.right, Counter())
        if len(right) < len(left):
            left, right = right, left
        return sum(count * right.get(value, 0) for value, count in left.items())


def collect_statistics(
    epoch: int,
    observations: EpochObservations,
    epoch_length: int,
    predicates: Iterable[JoinPredicate],
    prior: Statistics,
) -> Statistics:
    """Epoch-local rates and selectivities.

    Rates are arrivals per tick; relations without arrivals keep the prior
    rate. Selectivities are ``(matches + 1) / (n_left * n_right + 1 / prior)``;
    predicates with no observed pair keep the prior value. A prior of zero
    (or a missing one) counts as a single pseudo-pair: ``(matches + 1) / (pairs + 1)``.

    Args:
        epoch: The closed epoch.
        observations: Its arrivals.
        epoch_length: Ticks per epoch.
        predicates: Predicates to estimate.
        prior: Previous estimates (rates and selectivities for every predicate).
    """
    rates = dict(prior.rates)
    for relation, count in sorted(observations.arrivals.items()):
        rates[relation] = count / epoch_length

    selectivities = dict(prior.selectivities)
    for predicate in predicates:
        pairs = observations.arrivals[predicate.left.relation] * observations.arrivals[predicate.right.relation]
        if not pairs:
            continue
        previous = prior.selectivity(predicate)
        weight = 1 / previous if previous else 1.0
        selectivities[predicate] = (observations.matches(predicate) + 1) / (pairs + weight)
    return Statistics(rates=rates, selectivities=selectivities, source=str(epoch))
