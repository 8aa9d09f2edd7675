import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from apfree.exact import Cache  # noqa: E402


@pytest.fixture
def cache():
    return Cache()


@pytest.fixture(scope="session")
def shared_cache():
    return Cache()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
