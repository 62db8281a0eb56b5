from collections import OrderedDict

import pytest

from gaussmax import maxstats

# lines recorded by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list = []


@pytest.fixture
def private_cache(monkeypatch):
    """Run a test against an empty simulation cache without evicting the shared one."""
    monkeypatch.setattr(maxstats, "_CACHE", OrderedDict())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
