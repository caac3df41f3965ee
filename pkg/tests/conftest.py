import numpy as np
import pytest

from mimocast.netgraph import Topology, build_icg, build_routing_tree


def tree_from_positions(points, side=None, source=0):
    pts = np.asarray(points, dtype=float)
    side = side if side is not None else float(pts.max()) + 1.0
    topo = Topology(pts, side, source)
    tree = build_routing_tree(topo)
    return topo, tree, build_icg(tree)


@pytest.fixture
def chain4():
    """Four collinear nodes a-b-c-d, source at a."""
    return tree_from_positions([[0, 0], [1, 0], [2, 0], [3, 0]], side=5.0)


def random_unitary_rows(rng, K, M):
    T = rng.normal(size=(K, M)) + 1j * rng.normal(size=(K, M))
    return T / np.linalg.norm(T, axis=1)[:, None]


# one summary line per acceptance criterion, printed after the test session
ACCEPTANCE_LINES = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: end-to-end acceptance criteria (slow)")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
