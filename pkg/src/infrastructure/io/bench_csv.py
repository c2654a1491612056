"""Benchmark report files: one CSV row per sweep point plus a JSON document with the sweep config."""

import csv
import io
from collections.abc import Iterable
from pathlib import Path

from src.domain.entities.bench import BenchReport, BenchRow
from src.infrastructure.io.schemas import BENCH_COLUMNS, BenchReportSchema, BenchRowSchema
from src.shared.logging import get_logger

logger = get_logger(__name__)


def format_bench_csv(rows: Iterable[BenchRow]) -> str:
    """Render rows with a header line; floats keep their full precision."""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(
            {
                column: repr(value) if isinstance(value, float) else value
                for column, value in BenchRowSchema.from_entity(row).model_dump().items()
            }
        )
    return buffer.getvalue()


def parse_bench_csv(text: str) -> tuple[BenchRow, ...]:
    """Parse rows written by ``format_bench_csv``.

    Raises:
        pydantic.ValidationError: If a row is missing a column or holds a malformed value.
    """
    reader = csv.DictReader(io.StringIO(text))
    return tuple(BenchRowSchema.model_validate(record).to_entity() for record in reader)


def write_bench_report(report: BenchReport, csv_path: Path, json_path: Path | None = None) -> None:
    """Write the CSV rows, and the full report as JSON when ``json_path`` is given."""
    csv_path = Path(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    csv_path.write_text(format_bench_csv(report.rows), encoding="utf-8")
    if json_path is not None:
        json_path = Path(json_path)
        json_path.parent.mkdir(parents=True, exist_ok=True)
        json_path.write_text(BenchReportSchema.from_entity(report).model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info("bench_written", csv=str(csv_path), json=str(json_path) if json_path else None, rows=len(report.rows))


def read_bench_report(json_path: Path) -> BenchReport:
    return BenchReportSchema.model_validate_json(Path(json_path).read_text(encoding="utf-8")).to_entity()
