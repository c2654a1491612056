"""Shared test fixtures for the probeplan test suite.

This module provides the workloads and workload files used across unit and
integration tests.
"""

import json
from pathlib import Path

import pytest

from src.domain.entities.catalog import Catalog
from src.domain.entities.runtime import BaseTuple
from src.domain.services.generators import gen_trace
from src.infrastructure.io.json_files import JsonlTraceRepository, JsonWorkloadRepository
from tests.factories.workload_factory import mir_catalog, sharing_catalog, small_workload


@pytest.fixture
def mqo_catalog() -> Catalog:
    """Two queries sharing the ``S-T`` join."""
    return sharing_catalog()


@pytest.fixture
def shared_mir_catalog() -> Catalog:
    """Two queries sharing the ``ST`` intermediate result."""
    return mir_catalog()


@pytest.fixture
def dense_catalog() -> Catalog:
    return small_workload(seed=11)


@pytest.fixture
def dense_trace(dense_catalog: Catalog) -> list[BaseTuple]:
    return gen_trace(dense_catalog, duration=40, seed=5)


@pytest.fixture
def workload_file(tmp_path: Path, dense_catalog: Catalog) -> Path:
    """The dense workload written as a workload JSON file."""
    path = tmp_path / "workload.json"
    JsonWorkloadRepository(path).save(dense_catalog)
    return path


@pytest.fixture
def trace_file(tmp_path: Path, dense_trace: list[BaseTuple]) -> Path:
    path = tmp_path / "trace.jsonl"
    JsonlTraceRepository(path).save(dense_trace)
    return path


@pytest.fixture
def invalid_workload_file(tmp_path: Path) -> Path:
    """A workload whose only query references an undefined relation."""
    path = tmp_path / "invalid.json"
    path.write_text(
        json.dumps(
            {
                "relations": [{"name": "R", "attributes": ["a"], "rate": 1.0, "window": 5}],
                "queries": [
                    {
                        "id": "q1",
                        "relations": ["R", "X"],
                        "predicates": [{"left": ["R", "a"], "right": ["X", "a"]}],
                    }
                ],
            }
        ),
        encoding="utf-8",
    )
    return path
