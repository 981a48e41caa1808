import numpy as np
import pytest

from bridged.numerics import make_rng


@pytest.fixture
def rng():
    return make_rng(12345)


def random_spd(rng, n, jitter=0.5):
    A = rng.standard_normal((n, n))
    return A @ A.T + jitter * np.eye(n)


def random_psd(rng, n, rank=None):
    A = rng.standard_normal((n, rank or n))
    return A @ A.T


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL/SKIP line per acceptance criterion."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def report(number, passed, detail):
        status = passed if isinstance(passed, str) else ("PASS" if passed else "FAIL")
        line = f"{status} criterion {number}: {detail}"
        lines.append(line)
        print(line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
