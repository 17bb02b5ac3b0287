import pytest

_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def criterion(request):
    """``criterion(n, ok, detail)`` records one acceptance line and returns ``ok``."""
    lines = request.config.stash[_LINES]

    def record(n, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
        lines.append((n, line))
        print(line, flush=True)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash[_LINES]
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines, key=lambda item: item[0]):
            terminalreporter.write_line(line)
