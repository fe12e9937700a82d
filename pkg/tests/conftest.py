"""Shared pytest hooks.

The acceptance tests append one verdict line per criterion to a session list;
echoing them in the terminal summary keeps the verdicts visible without -s.
"""

import pytest

_criterion_lines = []


@pytest.fixture(scope="session")
def criterion_log():
    return _criterion_lines


def pytest_terminal_summary(terminalreporter):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in _criterion_lines:
            terminalreporter.write_line(line)
