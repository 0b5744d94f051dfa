import json
from importlib import resources
from pathlib import Path

import pytest

from hecix.backends import MockBackend
from hecix.graph import snapshot_load
from hecix.ingest import default_disease_specs
from hecix.pipeline import PromptTemplate

DATA = Path(__file__).parent / "data"


def pkg_data(name: str) -> Path:
    with resources.as_file(resources.files("hecix").joinpath(f"data/{name}")) as path:
        return Path(path)


@pytest.fixture(scope="session")
def golden_snapshot_path() -> Path:
    return DATA / "golden.snapshot"


@pytest.fixture()
def golden_graph(golden_snapshot_path):
    return snapshot_load(golden_snapshot_path)


@pytest.fixture(scope="session")
def disease_specs():
    return default_disease_specs()


@pytest.fixture(scope="session")
def mock_fixture_path() -> Path:
    return pkg_data("mock_completions.jsonl")


@pytest.fixture()
def mock_backend(mock_fixture_path):
    return MockBackend.from_file(mock_fixture_path)


@pytest.fixture(scope="session")
def templates():
    return PromptTemplate.load()


@pytest.fixture(scope="session")
def suite_path() -> Path:
    return pkg_data("eval_suite.jsonl")


@pytest.fixture(scope="session")
def full_study_doc() -> dict:
    return json.loads((DATA / "study_full.json").read_text(encoding="utf-8"))
