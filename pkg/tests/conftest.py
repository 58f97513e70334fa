import numpy as np
import pytest

from d2dcache import (ClusterInstance, LinkProbabilityMatrix, PreferenceMatrix,
                      UtilityTriple, link_prob_case1)


def random_link_matrix(rng, k, low=0.2, high=1.0):
    l = rng.uniform(low, high, (k, k))
    l = (l + l.T) / 2.0
    np.fill_diagonal(l, 1.0)
    return LinkProbabilityMatrix(l)


def random_instance(rng, num_active, num_inactive, library_size, cache_size,
                    utility=UtilityTriple(1.0, 3.0, 5.0), case1=False,
                    weights=None):
    k = num_active + num_inactive
    prefs = PreferenceMatrix(rng.dirichlet(np.ones(library_size), size=k))
    link = link_prob_case1(k) if case1 else random_link_matrix(rng, k)
    if weights is None:
        weights = np.ones(num_active)
    return ClusterInstance(
        prefs=prefs,
        active_set=np.arange(num_active, dtype=np.intp),
        inactive_set=np.arange(num_active, k, dtype=np.intp),
        weights=weights,
        cache_size=cache_size,
        link_probs=link,
        utility=utility,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import INFO
    except ImportError:
        return
    if INFO:
        terminalreporter.section("acceptance statistics")
        for line in INFO:
            terminalreporter.write_line(line)
