import time

import pytest

from conebvp.params import ProblemSpec

SESSION_START = time.perf_counter()


def pytest_configure(config):
    config.addinivalue_line("markers", "runs_last: run after every other collected test")


def pytest_collection_modifyitems(config, items):
    last = [it for it in items if it.get_closest_marker("runs_last")]
    rest = [it for it in items if not it.get_closest_marker("runs_last")]
    items[:] = rest + last


# Parameter sets of the bundled fixtures; the power family shares one set.
POWER_PARAMS = dict(T=2.0, eta=1.5, alpha=1.0, beta=0.5)
LOG_PARAMS = dict(T=0.75, eta=0.25, alpha=20.0, beta=0.1)
SINGULAR_PARAMS = dict(T=1.0, eta=1.0 / 3.0, alpha=2.0, beta=1.0)


@pytest.fixture
def power_square():
    return ProblemSpec(**POWER_PARAMS, a_expr="t", f_expr="u^2")


@pytest.fixture
def power_sqrt():
    return ProblemSpec(**POWER_PARAMS, a_expr="t", f_expr="u^0.5")


@pytest.fixture
def log_superlinear():
    return ProblemSpec(**LOG_PARAMS, a_expr="t^2", f_expr="u^2*ln(1+u)")


@pytest.fixture
def singular_sublinear():
    return ProblemSpec(**SINGULAR_PARAMS, a_expr="exp(t)", f_expr="(sin(u)+ln(1+u))/u^2")
