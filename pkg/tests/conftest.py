import pytest

_LINES_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance_lines(request):
    """Collects one status line per acceptance criterion for the summary."""
    return request.config.stash.setdefault(_LINES_KEY, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
