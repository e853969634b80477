import numpy as np
import pytest

from mmsb.experiments import default_bbar
from mmsb.model import CommunityMatrix, ProbabilityOperator, make_membership, sample_graph


def standard_operator(n, rho=1.0, seed=0, K=3, pure_fraction=0.09, bbar=None):
    """Benchmark instance: Dirichlet(1,...,1) mixed rows and the default connection matrix."""
    theta = make_membership(n, K, pure_fraction, [1.0] * K, seed)
    B = CommunityMatrix(default_bbar(K) if bbar is None else bbar, rho)
    return ProbabilityOperator(theta, B)


@pytest.fixture(scope="session")
def op300():
    return standard_operator(300, seed=11)


@pytest.fixture(scope="session")
def graph300(op300):
    return sample_graph(op300, 12)


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[number])
