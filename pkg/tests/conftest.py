import sys
from pathlib import Path

import pytest

from add4riot.catalog import default_catalog
from add4riot.diagnostics import ResolveError
from add4riot.parser import load_model, parse_model, resolve
from add4riot.validator import validate

ROOT = Path(__file__).parent
FIXTURES = ROOT / "fixtures"
GOLDEN = ROOT / "golden"
DATA = ROOT.parent / "src" / "add4riot" / "data"
NURSING = DATA / "nursing_home.riot"


def nursing_source() -> str:
    return NURSING.read_text(encoding="utf-8")


def without_block(source: str, header: str) -> str:
    """Drop the ``{ ... }`` block that starts at ``header``."""
    start = source.index(header)
    end = source.index("\n}\n", start) + 3
    return source[:start] + source[end:]


def without_decisions(source: str) -> str:
    return source[: source.index("# --- Phase 4")]


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture(scope="session")
def nursing_text():
    return nursing_source()


@pytest.fixture(scope="session")
def nursing(nursing_text):
    return load_model(nursing_text)


def pipeline_diagnostics(source: str, catalog) -> list:
    """Parse, resolve and validate, returning whichever stage's diagnostics end the run."""
    result = parse_model(source)
    if not result.ok:
        return list(result.diagnostics)
    try:
        model = resolve(result)
    except ResolveError as exc:
        return list(exc.diagnostics)
    return validate(model, catalog)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("tests.test_acceptance")
    if acceptance is not None and acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in acceptance.RESULTS:
            terminalreporter.write_line(line)
