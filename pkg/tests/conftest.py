import pytest

from privacy_frontier.histogram import QueryWorkload

# One line per acceptance criterion, printed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
        terminalreporter.write_line(line)


@pytest.fixture
def three_query_workload():
    """Both cells plus their total: the running example with sensitivity 2."""
    return QueryWorkload([[1, 0], [0, 1], [1, 1]])
