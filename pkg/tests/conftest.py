import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rcising.lattice import Graph, cycle_graph, load_corpus, path_graph

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def corpus():
    return load_corpus("small")


@pytest.fixture
def k2():
    return Graph(2, [(0, 1)], name="K2")


@pytest.fixture
def c4():
    return cycle_graph(4)


@pytest.fixture
def p3():
    return path_graph(3)


def states_of(G, S=()):
    """Every parity state with sources S, by brute force over 3**m strings."""
    from itertools import product

    from rcising.currents import ParityState

    out = []
    for s in product(range(3), repeat=G.n_edges):
        p = ParityState(G, np.array(s))
        if p.sources() == frozenset(S):
            out.append(p)
    return out


# one line per acceptance criterion, printed at the end of the session
VERDICTS: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(VERDICTS):
        terminalreporter.write_line(VERDICTS[k])
