"""Hash partition routing of tuples to store workers."""

from collections.abc import Iterable
from typing import Any

from src.domain.entities.catalog import JoinPredicate
from src.domain.entities.planning import Partition
from src.domain.entities.runtime import CompositeTuple
from src.shared.config import settings

FNV_PRIME = 0x100000001B3
MASK_64 = (1 << 64) - 1


def _canonical(value: Any) -> Any:
    if isinstance(value, float) and value.is_integer():
        return int(value)
    return value


def stable_hash(value: Any, seed: int = 0) -> int:
    """64-bit FNV-1a over the value's canonical string encoding."""
    result = (settings.hash_seed ^ seed) & MASK_64
    for byte in repr(_canonical(value)).encode("utf-8"):
        result ^= byte
        result = (result * FNV_PRIME) & MASK_64
    return result


def bound_value(item: CompositeTuple, partition: Partition, predicates: Iterable[JoinPredicate]) -> tuple[bool, Any]:
    """The tuple's value for ``partition``, directly or through an equating predicate."""
    if partition is None:
        return False, None
    if partition.relation in item.relations:
        return True, item.value(partition)
    for predicate in predicates:
        other = predicate.other(partition)
        if other is not None and other.relation in item.relations:
            return True, item.value(other)
    return False, None


def partition_route(
    item: CompositeTuple,
    partition: Partition,
    parallelism: int,
    predicates: Iterable[JoinPredicate] = (),
    seed: int = 0,
) -> tuple[int, ...]:
    """Workers of a ``parallelism``-wide store that must receive ``item``.

    A single worker when the partition value is known, every worker otherwise.
    """
    if partition is None or parallelism <= 1:
        return (0,)
    known, value = bound_value(item, partition, predicates)
    if known:
        return (stable_hash(value, seed) % parallelism,)
    return tuple(range(parallelism))
