"""Benchmark configuration and report entities."""

import statistics
from dataclasses import dataclass, field


@dataclass(frozen=True)
class WorkloadConfig:
    """Parameters of one synthetic workload.

    Attributes:
        n_relations: Number of input relations ``R0 .. R{n-1}``.
        attrs_per_relation: Attributes ``a0 ..`` per relation.
        n_queries: Number of distinct queries.
        query_size: Relations joined per query.
        seed: Generator seed.
        rate: Common arrival rate; every predicate gets selectivity ``1 / rate``.
        window: Common window, ``settings.default_window`` when None.
        parallelism: Workers per relation store.
    """

    n_relations: int
    attrs_per_relation: int = 3
    n_queries: int = 10
    query_size: int = 3
    seed: int = 0
    rate: float = 100.0
    window: int | None = None
    parallelism: int = 1

    def __post_init__(self) -> None:
        for name in ("n_relations", "attrs_per_relation", "n_queries", "query_size", "parallelism"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.rate <= 0:
            raise ValueError(f"rate must be positive, got {self.rate}")
        if self.query_size > self.n_relations:
            raise ValueError(f"query_size {self.query_size} exceeds n_relations {self.n_relations}")


@dataclass(frozen=True)
class BenchConfig:
    """A sweep over query counts with repetitions per point."""

    n_relations: int
    n_queries: tuple[int, ...]
    attrs_per_relation: int = 3
    query_size: int = 3
    seed: int = 0
    repetitions: int = 5
    rate: float = 100.0
    window: int | None = None
    time_limit_ms: int | None = None
    materialize: bool = False
    partitioning: bool = False

    def __post_init__(self) -> None:
        if not self.n_queries or min(self.n_queries) < 1:
            raise ValueError("n_queries must list positive query counts")
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be positive, got {self.repetitions}")
        # Validates the remaining fields.
        self.workload(self.n_queries[0], 0)

    def workload(self, n_queries: int, repetition: int) -> WorkloadConfig:
        return WorkloadConfig(
            n_relations=self.n_relations,
            attrs_per_relation=self.attrs_per_relation,
            n_queries=n_queries,
            query_size=self.query_size,
            seed=self.seed + 7919 * repetition + n_queries,
            rate=self.rate,
            window=self.window,
        )


@dataclass(frozen=True)
class BenchRow:
    n_q: int
    individual_cost: float
    mqo_cost: float
    variables: int
    probe_orders: int
    solve_ms: float

    @classmethod
    def median_of(cls, rows: list["BenchRow"]) -> "BenchRow":
        """Per-column medians of repeated measurements of one sweep point."""
        return cls(
            n_q=rows[0].n_q,
            individual_cost=statistics.median(row.individual_cost for row in rows),
            mqo_cost=statistics.median(row.mqo_cost for row in rows),
            variables=int(statistics.median(row.variables for row in rows)),
            probe_orders=int(statistics.median(row.probe_orders for row in rows)),
            solve_ms=statistics.median(row.solve_ms for row in rows),
        )


@dataclass(frozen=True)
class BenchReport:
    config: BenchConfig
    rows: tuple[BenchRow, ...] = field(default_factory=tuple)
