import math
from itertools import product

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from rcising.currents import (BondConfig, Current, ParityState, class_weights, explore_backbone, fs_event,
                              log_weight)
from rcising.events import FS, Always, Connected, Disjoint, EdgesOdd, EdgesOpen, as_event
from rcising.lattice import Geometry, build_lattice, cycle_graph, load_corpus

from conftest import states_of

CORPUS = load_corpus("small")


@st.composite
def graph_and_current(draw, max_n=3):
    G = draw(st.sampled_from(CORPUS[1:]))
    n = draw(st.lists(st.integers(0, max_n), min_size=G.n_edges, max_size=G.n_edges))
    return G, Current(G, n)


@given(graph_and_current())
def test_sources_are_even(gc):
    G, n = gc
    S = n.sources()
    assert len(S) % 2 == 0
    assert n.parity().sources() == S
    deg = np.zeros(G.n_vertices, dtype=int)
    for (a, b), k in zip(G.edges, n.n):
        deg[a] += k
        deg[b] += k
    assert S == {v for v in range(G.n_vertices) if deg[v] % 2}


@given(graph_and_current(), graph_and_current())
def test_sources_of_sum(a, b):
    G, n1 = a
    n2 = Current(G, (b[1].n[: G.n_edges].tolist() + [0] * G.n_edges)[: G.n_edges])
    assert (n1 + n2).sources() == n1.sources() ^ n2.sources()


@given(graph_and_current())
def test_weight(gc):
    G, n = gc
    beta = 0.7
    want = sum(k * math.log(beta) - math.lgamma(k + 1) for k in n.n.tolist())
    assert log_weight(n, beta) == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_class_weights_sum_to_exp():
    z, e, o = class_weights(1.3)
    assert z + e + o == pytest.approx(math.exp(1.3))


def test_parity_string_roundtrip(c4):
    p = ParityState.from_string(c4, "oe0o")
    assert p.to_string() == "oe0o"
    assert p.trace().open.tolist() == [True, True, False, True]
    with pytest.raises(ValueError):
        ParityState.from_string(c4, "ox00")


def test_parity_weight_closed_form(k2):
    p = ParityState.from_string(k2, "e")
    assert p.weight(1.0) == pytest.approx(math.cosh(1) - 1)


def _nx_components(G, open_):
    H = nx.Graph()
    H.add_nodes_from(range(G.n_vertices))
    H.add_edges_from(e for e, o in zip(G.edges, open_) if o)
    return {frozenset(c) for c in nx.connected_components(H)}


@given(st.sampled_from(CORPUS), st.data())
def test_clusters_match_networkx(G, data):
    open_ = data.draw(st.lists(st.booleans(), min_size=G.n_edges, max_size=G.n_edges))
    c = BondConfig(G, open_)
    assert set(c.clusters()) == _nx_components(G, open_)


@given(st.sampled_from(CORPUS[1:]), st.data())
def test_fs_event_iff_subcurrent(G, data):
    """F_S holds exactly when some edge subset of the open edges has odd-degree set S."""
    open_ = data.draw(st.lists(st.booleans(), min_size=G.n_edges, max_size=G.n_edges))
    V = G.n_vertices
    a, b = data.draw(st.lists(st.integers(0, V - 1), min_size=2, max_size=2, unique=True))
    S = {a, b}
    idx = [i for i, o in enumerate(open_) if o]
    exists = False
    for bits in product((0, 1), repeat=len(idx)):
        n = np.zeros(G.n_edges, dtype=int)
        n[idx] = bits
        if Current(G, n).sources() == S:
            exists = True
            break
    assert fs_event(BondConfig(G, open_), S) == exists
    assert FS(frozenset(S)).test(G, np.zeros(G.n_edges, bool), np.array(open_)) == exists


def test_fs_odd_set_rejected(k2):
    with pytest.raises(ValueError):
        FS(frozenset({0}))


def test_event_tables_agree_with_tests(c4):
    m = c4.n_edges
    evs = [Always(), EdgesOpen((0, 2)), EdgesOdd(), EdgesOdd((1,)), Connected(0, 2), Disjoint(1, 3),
           FS(frozenset({0, 1})), ~Connected(0, 1), Connected(0, 1) & EdgesOpen((3,)),
           as_event(lambda st_, bonds: bonds.connected(0, 3))]
    odd_masks = np.arange(1 << m)
    for ev in evs:
        for o in range(1 << m):
            odd = ((o >> np.arange(m)) & 1).astype(bool)
            for t in range(1 << m):
                tr = ((t >> np.arange(m)) & 1).astype(bool)
                if np.any(odd & ~tr):
                    continue
                want = ev.test(c4, odd, tr)
                got = bool(np.asarray(ev.masks(c4, np.int64(o), np.int64(t))))
                assert got == want, (ev, o, t)
    assert odd_masks.size == 16


def test_backbone_on_path(p3):
    p = ParityState.from_string(p3, "oo")
    bb = explore_backbone(p, 0, 2)
    assert bb.vertices == (0, 1, 2)
    assert bb.passes_through(1, 1) and bb.passes_through(1, 2) and not bb.passes_through(2, 1)


@given(st.sampled_from([c for c in CORPUS if c.n_edges <= 6 and c.n_vertices >= 3]), st.data())
def test_backbone_is_odd_self_avoiding_path(G, data):
    x, y = data.draw(st.lists(st.integers(0, G.n_vertices - 1), min_size=2, max_size=2, unique=True))
    states = states_of(G, (x, y))
    p = data.draw(st.sampled_from(states))
    bb = explore_backbone(p, x, y)
    assert bb.vertices[0] == x and bb.vertices[-1] == y
    assert len(set(bb.edges)) == len(bb.edges)
    assert all(p.odd[e] for e in bb.edges)
    assert set(bb.edges) <= bb.explored
    for (a, b), e in zip(bb.steps, bb.edges):
        assert G.edge_index(a, b) == e
    # remaining odd edges have no sources left
    rest = p.restrict_complement(bb.edges)
    assert rest.sources() == frozenset()


def test_backbone_wrong_sources(c4):
    with pytest.raises(ValueError):
        explore_backbone(ParityState.from_string(c4, "0000"), 0, 2)


def test_label_clusters_backends_agree():
    from rcising import kernels

    G = build_lattice(2, 5, Geometry.TORUS)
    rng = np.random.default_rng(5)
    open_ = (rng.random(G.n_edges) < 0.5).astype(np.uint8)
    out = {}
    for name in kernels.BACKENDS:
        kernels.use_backend(name)
        lab = np.empty(G.n_vertices, dtype=np.int64)
        kernels.label_clusters(G.n_vertices, G.edge_u, G.edge_v, open_, lab)
        out[name] = lab
    kernels.use_backend("cython" if "cython" in kernels.BACKENDS else "python")
    comps = _nx_components(G, open_.astype(bool))
    for lab in out.values():
        assert {frozenset(np.flatnonzero(lab == l).tolist()) for l in np.unique(lab)} == comps
