import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ddelastic.assembly import SolverConfig
from ddelastic.experiments import benchmark_dataset
from ddelastic.structure import BenchmarkSpec

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def bench0():
    return BenchmarkSpec(alpha=0)


@pytest.fixture
def bench1():
    return BenchmarkSpec(alpha=1)


@pytest.fixture
def bar_case(bench1):
    """8-element manufactured bar with the 65-point dataset, nonlinear strains."""
    st = bench1.structure(8)
    ds = benchmark_dataset(bench1, 65)
    return st, ds, SolverConfig(alpha=1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
