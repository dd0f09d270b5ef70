import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from coalition.graph import Graph, load_edge_list
from coalition.stability import CommunityStructure

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_graph(n, density, rng, connected=True):
    """Erdos-Renyi style graph; with ``connected`` a random spanning tree is added."""
    edges = {(i, j) for i, j in itertools.combinations(range(n), 2) if rng.random() < density}
    if connected:
        order = rng.permutation(n)
        for t in range(1, n):
            a, b = int(order[t]), int(order[rng.integers(0, t)])
            edges.add((min(a, b), max(a, b)))
    return Graph(n, sorted(edges))


def random_symmetric(n, rng, lo=-2.0, hi=3.0):
    W = rng.uniform(lo, hi, size=(n, n))
    W = np.triu(W, 1)
    return W + W.T


def random_cover(n, n_c, p, rng):
    """Random cover with at most ``p`` memberships per node and no nested communities."""
    while True:
        M = np.zeros((n, n_c), dtype=bool)
        for i in range(n):
            ks = rng.choice(n_c, size=int(rng.integers(1, p + 1)), replace=False)
            M[i, ks] = True
        comms = [set(np.flatnonzero(M[:, k]).tolist()) for k in range(n_c)]
        comms = [c for c in comms if c]
        nested = any(a <= b for a, b in itertools.permutations(comms, 2))
        if not nested:
            return CommunityStructure(comms, n, n_c, p)


@pytest.fixture
def path3():
    return load_edge_list("0 1\n1 2\n")


@pytest.fixture
def triangle():
    return load_edge_list("0 1\n1 2\n0 2\n")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
