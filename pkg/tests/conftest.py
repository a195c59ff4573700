import pytest

from ecocip.codebook import generate_exhaustive
from ecocip.conflict import build_graph, classify_pairs, edge_clique_cover
from ecocip.ecoc import make_gaussian_toy, train_test_split


@pytest.fixture(scope="session")
def exhaustive10():
    return generate_exhaustive(10)


@pytest.fixture(scope="session")
def graph10(exhaustive10):
    return build_graph(classify_pairs(exhaustive10, 3))


@pytest.fixture(scope="session")
def cover10(graph10):
    return edge_clique_cover(graph10, seed=0)


@pytest.fixture(scope="session")
def toy_split():
    ds = make_gaussian_toy(10, 200, seed=0)
    return train_test_split(ds, 0.25, seed=1)


@pytest.fixture(scope="session")
def toy_small():
    """A 4-class toy problem small enough for per-point loops."""
    ds = make_gaussian_toy(4, 40, seed=3)
    return ds
