"""File adapters for workloads, traces, plans, results and metrics.

JSON documents are indented; line-delimited files hold one compact JSON
object per line. All files are UTF-8.
"""

from collections.abc import Iterable, Sequence
from pathlib import Path

from pydantic import BaseModel

from src.application.interfaces.workload_port import (
    PlanRepositoryPort,
    ResultSinkPort,
    TraceRepositoryPort,
    WorkloadRepositoryPort,
)
from src.domain.entities.catalog import Catalog
from src.domain.entities.ilp import OptimizationMode, OptimizationOutcome
from src.domain.entities.planning import SelectedPlan
from src.domain.entities.runtime import BaseTuple, JoinResult, MetricsLog, QueryChange
from src.domain.entities.topology import Topology
from src.infrastructure.io.schemas import (
    JoinResultSchema,
    MetricsSnapshotSchema,
    MetricsSummarySchema,
    PlanSchema,
    TraceEventSchema,
    WorkloadSchema,
)
from src.shared.logging import get_logger

logger = get_logger(__name__)

ENCODING = "utf-8"


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding=ENCODING)


def _write_lines(path: Path, records: Iterable[BaseModel], exclude_none: bool = False) -> int:
    count = 0
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding=ENCODING) as handle:
        for record in records:
            handle.write(record.model_dump_json(exclude_none=exclude_none))
            handle.write("\n")
            count += 1
    return count


def _read_lines(path: Path) -> list[str]:
    with path.open("r", encoding=ENCODING) as handle:
        return [line for line in (raw.strip() for raw in handle) if line]


class JsonWorkloadRepository(WorkloadRepositoryPort):
    """Workload stored as one JSON document."""

    def __init__(self, path: Path):
        """Initialize the repository.

        Args:
            path: Location of the workload file.
        """
        self.path = Path(path)

    def load(self) -> tuple[Catalog, tuple[QueryChange, ...]]:
        """Read and validate the workload.

        Raises:
            FileNotFoundError: If the file does not exist.
            pydantic.ValidationError: If the document is not a workload.
            WorkloadValidationError: If the workload violates a validation rule.
        """
        schema = WorkloadSchema.model_validate_json(self.path.read_text(encoding=ENCODING))
        catalog = schema.to_catalog()
        changes = schema.to_changes()
        logger.info(
            "workload_loaded",
            path=str(self.path),
            relations=len(catalog.relations),
            queries=len(catalog.queries),
            changes=len(changes),
        )
        return catalog, changes

    def save(self, catalog: Catalog, changes: Sequence[QueryChange] = ()) -> None:
        schema = WorkloadSchema.from_catalog(catalog, changes)
        _write_text(self.path, schema.model_dump_json(indent=2, exclude_none=True) + "\n")
        logger.info("workload_saved", path=str(self.path), queries=len(catalog.queries))


class JsonlTraceRepository(TraceRepositoryPort):
    """Trace stored as ``{"rel", "ts", "attrs"}`` lines."""

    def __init__(self, path: Path):
        """Initialize the repository.

        Args:
            path: Location of the trace file.
        """
        self.path = Path(path)

    def load(self) -> list[BaseTuple]:
        trace = [
            TraceEventSchema.model_validate_json(line).to_entity(index)
            for index, line in enumerate(_read_lines(self.path))
        ]
        logger.info("trace_loaded", path=str(self.path), events=len(trace))
        return trace

    def save(self, trace: Sequence[BaseTuple]) -> None:
        count = _write_lines(
            self.path,
            (TraceEventSchema.from_entity(item, with_seq=False) for item in trace),
            exclude_none=True,
        )
        logger.info("trace_saved", path=str(self.path), events=count)


class JsonPlanRepository(PlanRepositoryPort):
    """Plan stored as one JSON document, with the compiled topology summary."""

    def __init__(self, path: Path):
        """Initialize the repository.

        Args:
            path: Location of the plan file.
        """
        self.path = Path(path)

    def load(self, catalog: Catalog) -> SelectedPlan:
        schema = PlanSchema.model_validate_json(self.path.read_text(encoding=ENCODING))
        plan = schema.to_plan(catalog)
        logger.info("plan_loaded", path=str(self.path), orders=len(plan.orders), mirs=len(plan.materialized))
        return plan

    def save(
        self,
        outcome: OptimizationOutcome,
        catalog: Catalog,
        topology: Topology | None = None,
        mode: OptimizationMode | None = None,
    ) -> None:
        schema = PlanSchema.from_outcome(outcome, catalog, topology, mode.value if mode is not None else None)
        _write_text(self.path, schema.model_dump_json(indent=2, by_alias=True) + "\n")
        logger.info("plan_saved", path=str(self.path), cost=outcome.plan.total_cost)


class JsonlResultSink(ResultSinkPort):
    """Results and metrics as line-delimited JSON."""

    def __init__(self, results_path: Path, metrics_path: Path | None = None):
        """Initialize the sink.

        Args:
            results_path: Where results are written.
            metrics_path: Where metrics are written; metrics are dropped when None.
        """
        self.results_path = Path(results_path)
        self.metrics_path = Path(metrics_path) if metrics_path is not None else None

    def write_results(self, results: Sequence[JoinResult]) -> None:
        ordered = sorted(results, key=lambda result: result.sort_key)
        count = _write_lines(self.results_path, (JoinResultSchema.from_entity(result) for result in ordered))
        logger.info("results_written", path=str(self.results_path), results=count)

    def write_metrics(self, metrics: MetricsLog) -> None:
        if self.metrics_path is None:
            return
        records: list[BaseModel] = [MetricsSnapshotSchema(**row) for row in metrics.snapshots]
        records.append(MetricsSummarySchema.from_entity(metrics))
        _write_lines(self.metrics_path, records)
        logger.info("metrics_written", path=str(self.metrics_path), epochs=len(metrics.snapshots))


def read_results(path: Path) -> list[JoinResult]:
    """Parse a results file."""
    return [JoinResultSchema.model_validate_json(line).to_entity() for line in _read_lines(Path(path))]
