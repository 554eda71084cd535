import numpy as np
import pytest

from parsa.graph import BipartiteGraph


def random_graph(rng: np.random.Generator, max_u: int = 200, max_edges: int = 2000,
                 max_v: int | None = None) -> BipartiteGraph:
    num_u = int(rng.integers(0, max_u + 1))
    num_v = int(rng.integers(1, (max_v or max_u) + 1))
    m = int(rng.integers(0, max_edges + 1)) if num_u else 0
    edges = np.stack([rng.integers(0, max(num_u, 1), m), rng.integers(0, num_v, m)], axis=1)
    return BipartiteGraph.from_edges(edges.tolist(), num_u=num_u, num_v=num_v)


@pytest.fixture
def running_example() -> BipartiteGraph:
    # u0-{v0,v1}, u1-{v0}, u2-{v1,v2}, u3-{v2}
    return BipartiteGraph.from_adjacency([[0, 1], [0], [1, 2], [2]])


@pytest.fixture
def running_libsvm(tmp_path):
    path = tmp_path / "example.svm"
    path.write_text("1 0:1 1:1\n1 0:1\n1 1:1 2:1\n1 2:1\n")
    return path


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
