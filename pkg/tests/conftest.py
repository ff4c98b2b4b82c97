import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_RESULTS = {}


@pytest.fixture
def record_criterion():
    """Record one acceptance outcome for the end-of-run summary."""

    def record(key, title, passed, detail=""):
        _RESULTS[key] = (title, bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_RESULTS):
        title, passed, detail = _RESULTS[key]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {key}. {title}: {detail}")
