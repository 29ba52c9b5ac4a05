from pathlib import Path

import pytest

from devinv import kernels
from devinv.corpus import ingest_corpus
from devinv.extraction import TemplateSet
from devinv.gateway import ProviderConfig
from devinv.index import build_index

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# designed related pairs in the fixture corpus (by record id)
RELATED_PAIRS = [
    ("inc-001", "inc-010"),  # visible particle
    ("inc-004", "inc-006"),  # particle false rejects
    ("inc-014", "inc-020"),  # glass breakage
]


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def corpus():
    return ingest_corpus(FIXTURES / "corpus.jsonl")


@pytest.fixture(scope="session")
def hash_provider():
    return ProviderConfig(kind="hash_embed", dimension=64, seed=42)


@pytest.fixture(scope="session")
def replay_provider():
    return ProviderConfig(
        kind="replay_chat",
        model_name="replay",
        transcript_path=str(FIXTURES / "transcripts" / "replay.jsonl"),
    )


@pytest.fixture(scope="session")
def templates():
    return TemplateSet.load(FIXTURES / "templates")


@pytest.fixture(scope="session")
def fixture_index(corpus, hash_provider):
    return build_index(corpus, hash_provider)


@pytest.fixture(scope="session")
def warm_kernels():
    """JIT-compile every kernel so timed assertions measure steady state."""
    kernels.warmup()


# --- acceptance summary: one PASS/FAIL line per criterion ---------------------

_acceptance_outcomes: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    _acceptance_outcomes.append((report.nodeid.split("::")[-1], status))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_outcomes:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, status in _acceptance_outcomes:
        terminalreporter.write_line(f"{status}  {name}")
