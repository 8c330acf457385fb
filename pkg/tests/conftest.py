import numpy as np
import pytest

from optsurvey import DiscreteCostDistribution


def random_regular(rng, size, zero_first=False, scale=10.0):
    """Random prior whose virtual costs are strictly increasing by construction.

    Each cost is drawn above the smallest value that keeps the virtual cost
    sequence increasing.
    """
    pmf = rng.dirichlet(np.full(size, 2.0))
    pmf = pmf / pmf.sum()
    cdf = np.cumsum(pmf)
    costs = np.empty(size)
    costs[0] = 0.0 if zero_first and size > 1 else rng.uniform(0.1, 1.0) * scale
    phi = costs[0]
    for t in range(1, size):
        ratio = cdf[t - 1] / pmf[t]
        floor = max(costs[t - 1], (phi + costs[t - 1] * ratio) / (1 + ratio))
        costs[t] = floor + rng.uniform(0.05, 1.0) * scale
        phi = costs[t] + (costs[t] - costs[t - 1]) * ratio
    return DiscreteCostDistribution(costs, pmf)


@pytest.fixture
def intro():
    return DiscreteCostDistribution([0.0, 4.0, 8.0], [0.5, 0.25, 0.25])


@pytest.fixture
def intro_virtual():
    return DiscreteCostDistribution([0.0, 12.0, 20.0], [0.5, 0.25, 0.25])


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[number])
