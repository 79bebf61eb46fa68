import json
from pathlib import Path

import pytest

from docmart import Store

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# (name, passed) pairs filled by test_acceptance; printed after the run so
# the per-criterion verdict lines survive pytest's output capture
ACCEPTANCE_RESULTS: list[tuple[str, bool]] = []


def fixture_records() -> list[dict]:
    text = (FIXTURES / "corpus_f5.jsonl").read_text(encoding="utf-8")
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def directory_csv() -> str:
    return (FIXTURES / "staff_directory.csv").read_text(encoding="utf-8")


@pytest.fixture
def corpus_records():
    return fixture_records()


@pytest.fixture
def store(tmp_path):
    with Store(tmp_path / "store") as s:
        yield s


@pytest.fixture
def loaded_store(store, corpus_records):
    store.ingest(corpus_records)
    return store


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, passed in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"ACCEPTANCE {name}: {'PASS' if passed else 'FAIL'}")
