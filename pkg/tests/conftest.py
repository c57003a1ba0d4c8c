import pathlib
import sys

import pytest

from reconkit.datamodel import load_dataset_files
from reconkit.index import build_index
from reconkit.service import ReconciliationService

DATA = pathlib.Path(__file__).parent / "data"
sys.path.insert(0, str(pathlib.Path(__file__).parent))

FIXTURE_NAMES = [
    "greentech distribution",
    "greentech services",
    "globafrik distribution",
    "acme distribution",
    "foo distribution",
]


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def dataset():
    return load_dataset_files(str(DATA / "companies.csv"), str(DATA / "schema.json"))


@pytest.fixture(scope="session")
def ix(dataset):
    return build_index(dataset, 3)


@pytest.fixture(scope="session")
def service(dataset):
    return ReconciliationService(dataset)


@pytest.fixture(scope="session")
def http_service(service):
    from reconkit.server import serve_in_thread

    server, url = serve_in_thread(service)
    yield url
    server.shutdown()
    server.server_close()


ACCEPTANCE_LINES = []


def record_acceptance(name, ok, detail=""):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" - {detail}" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
