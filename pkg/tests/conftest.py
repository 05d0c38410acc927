import numpy as np
import pytest

from linkresolve.data import graph_from_pairs


@pytest.fixture
def tiny_graph():
    # 5 nodes, path plus a triangle: 0-1, 1-2, 2-3, 3-4, 2-4
    return graph_from_pairs([(0, 1), (1, 2), (2, 3), (3, 4), (2, 4)], 5)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))


def random_graph(rng: np.random.Generator, n: int, edge_prob: float = 0.3):
    pairs = [
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < edge_prob
    ]
    return graph_from_pairs(pairs, n)
