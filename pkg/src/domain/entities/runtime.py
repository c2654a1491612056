"""Runtime entities: stream tuples, join results, simulation options and reports."""

from collections import Counter
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any

from src.domain.entities.catalog import AttributeRef, Query, Statistics
from src.domain.entities.planning import PlannerOptions, SelectedPlan
from src.domain.entities.topology import Topology


def values_join(left: Any, right: Any) -> bool:
    """Equi-join test on two attribute values; a missing value joins nothing."""
    return left is not None and right is not None and left == right


@dataclass(frozen=True)
class BaseTuple:
    """An input tuple. Identity is ``(relation, ts, seq)``; attributes do not take part."""

    relation: str
    ts: int
    attrs: Mapping[str, Any] = field(default_factory=dict, compare=False, hash=False)
    seq: int = 0

    @property
    def key(self) -> tuple[str, int, int]:
        return (self.relation, self.ts, self.seq)


@dataclass(frozen=True)
class CompositeTuple:
    """A partial or complete join result, at most one base tuple per relation.

    Attributes:
        parts: Constituents sorted by relation.
    """

    parts: tuple[BaseTuple, ...]

    @classmethod
    def of(cls, *parts: BaseTuple) -> "CompositeTuple":
        return cls(tuple(sorted(parts, key=lambda part: part.relation)))

    @cached_property
    def by_relation(self) -> dict[str, BaseTuple]:
        return {part.relation: part for part in self.parts}

    @property
    def relations(self) -> frozenset[str]:
        return frozenset(self.by_relation)

    @property
    def max_ts(self) -> int:
        return max(part.ts for part in self.parts)

    @property
    def min_ts(self) -> int:
        return min(part.ts for part in self.parts)

    def value(self, attribute: AttributeRef) -> Any:
        """The attribute's value, or None when the relation is not a constituent."""
        part = self.by_relation.get(attribute.relation)
        if part is None:
            return None
        return part.attrs.get(attribute.attribute)

    def joined(self, other: "CompositeTuple") -> "CompositeTuple":
        return CompositeTuple.of(*self.parts, *other.parts)

    def window_ok(self, windows: Mapping[str, int]) -> bool:
        """Every constituent is at most its relation's window older than the newest one."""
        newest = self.max_ts
        return all(newest - part.ts <= windows[part.relation] for part in self.parts)

    def expires(self, windows: Mapping[str, int]) -> int:
        """Last tick at which an arriving tuple can still join this one."""
        return min(part.ts + windows[part.relation] for part in self.parts)


@dataclass(frozen=True, order=True)
class JoinResult:
    """A complete result of one query, emitted at tick ``ts``."""

    query: str
    ts: int
    parts: tuple[BaseTuple, ...] = field(compare=False)
    keys: tuple[tuple[str, int, int], ...] = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "keys", tuple(part.key for part in self.parts))

    @property
    def sort_key(self) -> tuple:
        return (self.query, self.ts, self.keys)


class SimulationMode(str, Enum):
    STATIC = "static"
    ADAPTIVE = "adaptive"


class ChangeKind(str, Enum):
    REGISTER = "register"
    REMOVE = "remove"


@dataclass(frozen=True)
class QueryChange:
    """A query registered or removed at ``tick``; removals name only the id."""

    tick: int
    kind: ChangeKind
    query: Query | None = None
    query_id: str | None = None

    @property
    def target_id(self) -> str:
        if self.query is not None:
            return self.query.id
        return self.query_id or ""


@dataclass(frozen=True)
class SimulationOptions:
    """Parameters of one simulation run.

    Attributes:
        mode: Static (one configuration) or adaptive (per-epoch configurations).
        epoch_length: Ticks per epoch.
        seed: Seed mixed into partition routing.
        plan: Fixed initial plan; planned from the catalog when None.
        plan_overrides: Plans forced for given epochs.
        statistics_overrides: Statistics injected as if observed during given epochs.
        query_changes: Registrations and removals, adaptive mode only.
        planner: Candidate switches used when (re)planning.
        time_limit_ms: Solver limit per planning round.
        horizon: Last tick to advance epochs to, even without arrivals.
    """

    mode: SimulationMode = SimulationMode.STATIC
    epoch_length: int = 10
    seed: int = 0
    plan: SelectedPlan | None = None
    plan_overrides: Mapping[int, SelectedPlan] = field(default_factory=dict)
    statistics_overrides: Mapping[int, Statistics] = field(default_factory=dict)
    query_changes: tuple[QueryChange, ...] = ()
    planner: PlannerOptions = field(default_factory=PlannerOptions)
    time_limit_ms: int | None = None
    horizon: int | None = None

    def __post_init__(self) -> None:
        if self.epoch_length < 1:
            raise ValueError(f"epoch_length must be at least 1, got {self.epoch_length}")
        if self.query_changes and self.mode is not SimulationMode.ADAPTIVE:
            raise ValueError("query changes require adaptive mode")


@dataclass(frozen=True)
class EpochConfig:
    """The routing configuration tuples of one epoch are processed under."""

    epoch: int
    plan: SelectedPlan
    topology: Topology
    active: frozenset[str]


@dataclass
class MetricsLog:
    """Counters of one run; all monotone during the run."""

    probe_messages: int = 0
    store_messages: int = 0
    tuples_stored: int = 0
    tuples_evicted: int = 0
    results: Counter = field(default_factory=Counter)
    latencies: list[int] = field(default_factory=list)
    probe_messages_per_edge: Counter = field(default_factory=Counter)
    fanout: dict[str, Counter] = field(default_factory=dict)
    stores_registered: int = 0
    stores_deregistered: int = 0
    config_switches: int = 0
    epoch_statistics: dict[int, Statistics] = field(default_factory=dict)
    routing_tables: dict[int, dict[str, str]] = field(default_factory=dict)
    snapshots: list[dict[str, Any]] = field(default_factory=list)

    def record_fanout(self, store: str, workers: int) -> None:
        self.fanout.setdefault(store, Counter())[workers] += 1

    def snapshot(self, epoch: int) -> dict[str, Any]:
        """Counter values at the end of ``epoch``, appended to ``snapshots``."""
        row = {
            "epoch": epoch,
            "probe_messages": self.probe_messages,
            "store_messages": self.store_messages,
            "tuples_stored": self.tuples_stored,
            "tuples_evicted": self.tuples_evicted,
            "results": dict(sorted(self.results.items())),
            "stores_registered": self.stores_registered,
            "stores_deregistered": self.stores_deregistered,
            "config_switches": self.config_switches,
        }
        self.snapshots.append(row)
        return row


@dataclass
class QueryLifecycle:
    """When a query answered, and from which tick its answers are complete.

    Attributes:
        registered_at: Registration tick (0 for initial queries).
        removed_at: Removal tick, None while active.
        complete_from: Results whose constituents all arrived at or after this tick are complete.
        fresh_relations: Relations without a covering store at registration; only
            constituents arriving after registration can be matched.
    """

    registered_at: int = 0
    removed_at: int | None = None
    complete_from: int | None = 0
    fresh_relations: frozenset[str] = frozenset()

    def is_active(self, tick: int) -> bool:
        return self.registered_at <= tick and (self.removed_at is None or tick < self.removed_at)

    def covers(self, result: JoinResult) -> bool:
        """True if the simulator must produce ``result`` for this query."""
        if not self.is_active(result.ts) or self.complete_from is None:
            return False
        for part in result.parts:
            if part.ts < self.complete_from:
                return False
            if part.relation in self.fresh_relations and part.ts < self.registered_at:
                return False
        return True


@dataclass(frozen=True)
class SimulationReport:
    """Results and metrics of one run.

    Attributes:
        results: Join results sorted by query, tick and constituents.
        metrics: Counters of the run.
        routing_tables: Routing table of every configured epoch.
        lifecycles: Active interval and completeness per query.
    """

    results: tuple[JoinResult, ...]
    metrics: MetricsLog
    routing_tables: Mapping[int, Mapping[str, str]] = field(default_factory=dict)
    lifecycles: Mapping[str, QueryLifecycle] = field(default_factory=dict)
