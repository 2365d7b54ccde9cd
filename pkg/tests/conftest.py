import contextlib
import time

import pytest

_RESULTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS] = []


@pytest.fixture
def criterion(request):
    """Context manager that records a PASS/FAIL line for an acceptance criterion."""
    results = request.config.stash[_RESULTS]

    @contextlib.contextmanager
    def record(number: int, title: str):
        start = time.perf_counter()
        try:
            yield
        except BaseException as exc:
            line = f"criterion {number} FAIL  {title}: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
            results.append(line)
            print(line)
            raise
        line = f"criterion {number} PASS  {title} ({time.perf_counter() - start:.2f} s)"
        results.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS, [])
    if results:
        terminalreporter.section("acceptance criteria")
        for line in sorted(results, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
