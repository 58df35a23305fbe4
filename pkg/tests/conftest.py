import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

# Acceptance outcomes, filled by the ``criterion`` fixture and the report hook.
_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, name): acceptance criterion test")


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


@pytest.fixture
def criterion(request):
    """Record a numeric summary for the acceptance line of the current test."""
    marker = request.node.get_closest_marker("criterion")
    number, name = marker.args
    entry = _CRITERIA.setdefault(number, {"name": name, "details": [], "outcome": None})

    def record(detail: str):
        entry["details"].append(detail)

    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not report.failed:
        return
    number, name = marker.args
    entry = _CRITERIA.setdefault(number, {"name": name, "details": [], "outcome": None})
    passed = report.passed if report.when == "call" else False
    entry["outcome"] = passed if entry["outcome"] is None else entry["outcome"] and passed


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        status = {True: "PASS", False: "FAIL", None: "NOT RUN"}[entry["outcome"]]
        detail = "; ".join(entry["details"])
        terminalreporter.write_line(f"C{number} {status} {entry['name']}: {detail}")
