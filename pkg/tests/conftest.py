import numpy as np
import pytest

from esopt import InteractionMatrix, PBVector


def naive_impact(h, g):
    """Reference O(n^2) double loop over all ordered pairs."""
    h = list(map(float, h))
    g = [list(map(float, row)) for row in g]
    total = 0.0
    for hi in h:
        total += hi
    for i in range(len(h)):
        for j in range(len(h)):
            total += g[i][j] * h[i] * h[j]
    return total


def random_coupling(rng, n, offdiag=0.1):
    """Diagonally dominant symmetric coupling (well away from degenerate)."""
    a = rng.uniform(-offdiag, offdiag, size=(n, n))
    a = 0.5 * (a + a.T)
    np.fill_diagonal(a, rng.uniform(0.5, 1.5, size=n))
    return a


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pb(*values):
    return PBVector(values)


def nine(**entries):
    v = np.zeros(9)
    for k, val in entries.items():
        v[int(k[1:]) - 1] = val
    return PBVector(v)


def coupling_2(g11, g12, g22):
    return InteractionMatrix([[g11, g12], [g12, g22]])
