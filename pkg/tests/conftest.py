import numpy as np
import pytest

from src.graph import from_edges


@pytest.fixture
def triangle():
    return from_edges(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def star():
    """Hub 0 joined to leaves 1..4."""
    return from_edges(5, [(0, k) for k in range(1, 5)])


@pytest.fixture
def k4():
    return from_edges(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])


@pytest.fixture
def path4():
    return from_edges(4, [(0, 1), (1, 2), (2, 3)])


@pytest.fixture
def gnp():
    """Factory for seeded G(n, p) graphs."""
    def _make(n: int, p: float, seed: int):
        rng = np.random.default_rng(seed)
        iu, ju = np.triu_indices(n, k=1)
        keep = rng.random(len(iu)) < p
        return from_edges(n, np.column_stack((iu[keep], ju[keep])))
    return _make


@pytest.fixture
def random_graph(gnp):
    return gnp(30, 0.2, 7)


@pytest.fixture
def write_text(tmp_path):
    def _write(name: str, content: str) -> str:
        path = tmp_path / name
        path.write_text(content, encoding="utf-8")
        return str(path)
    return _write
