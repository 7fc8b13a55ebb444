from __future__ import annotations

import pytest

from adares.camera import CameraProfile
from adares.synthetic import PSYN

P0 = CameraProfile(10.0, 7.5, 10.0, 1000, 750, name="p0")

_criteria: list[tuple[int, str, str]] = []


@pytest.fixture(scope="session")
def p0() -> CameraProfile:
    return P0


@pytest.fixture(scope="session")
def psyn() -> CameraProfile:
    return PSYN


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        number, title = marker.args
        _criteria.append((number, title, report.outcome.upper()))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, outcome in sorted(_criteria):
        verdict = "PASS" if outcome == "PASSED" else "FAIL"
        terminalreporter.write_line(f"[{verdict}] criterion {number}: {title}")
