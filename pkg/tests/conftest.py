"""Shared pytest wiring: acceptance-criterion lines survive output capture.

Each acceptance test records exactly one PASS/FAIL line. The lines are
printed immediately (visible with -s or on failure) and repeated in the
terminal summary, which pytest never captures.
"""

import pytest

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def criterion():
    def _record(line: str) -> None:
        ACCEPTANCE_LINES.append(line)
        print(line)
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
