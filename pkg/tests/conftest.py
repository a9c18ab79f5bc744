import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ktnspec import synthetic

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per criterion; shown in the terminal summary."""
    sink = request.config.stash[ACCEPTANCE_KEY]

    def report(name: str, ok: bool, detail: str = ""):
        line = f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip()
        sink.append(line)
        print(line)
        return ok

    return report


@pytest.fixture
def chain3():
    """V = (0, 0.5, 0.1), V_12 = 1.0, V_23 = 0.7, unit prefactors."""
    return synthetic.chain([0.0, 0.5, 0.1], [1.0, 0.7])


@pytest.fixture
def two_state():
    """Symmetric double well: equal minima at 0, saddle at 1, unit prefactors."""
    return synthetic.chain([0.0, 0.0], [1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
