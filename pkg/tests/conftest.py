import numpy as np
import pytest

from causalscore import RngStream, make_dataset


@pytest.fixture
def rng():
    return RngStream(20240611)


def toy_dataset(t, y, x=None, surrogate=None):
    t = np.asarray(t)
    if x is None:
        x = np.arange(t.shape[0], dtype=float)
    return make_dataset(x, t, y, surrogate)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def record(request):
    """Log one acceptance line; the lines are repeated in the terminal summary."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def _record(number, status, detail):
        line = f"criterion {number:>2}: {status} {detail}"
        lines.append(line)
        print(line)
    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
