"""Events measurable with respect to the parity state and the trace.

Every event answers two kinds of query:

* ``test(G, odd, open_)`` on one configuration given as boolean edge arrays
  (used by the samplers, works on graphs of any size);
* ``masks(G, odd, trace)`` on integer edge bitmasks, vectorized (used by the
  exact enumerations, needs ``2**|E|`` memory for trace-only events).

Calling an event with ``(ParityState, BondConfig)`` dispatches to ``test``.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import kernels
from .lattice import Graph

MAX_TABLE_EDGES = 22

_label_tables: "weakref.WeakKeyDictionary[Graph, np.ndarray]" = weakref.WeakKeyDictionary()
_vector_cache: "weakref.WeakKeyDictionary[Graph, dict]" = weakref.WeakKeyDictionary()


def all_masks(m: int) -> np.ndarray:
    return np.arange(1 << m, dtype=np.int64)


def mask_of(edges: Iterable[int]) -> int:
    out = 0
    for e in edges:
        out |= 1 << int(e)
    return out


def bits_to_bool(masks: np.ndarray, m: int) -> np.ndarray:
    """``(N,)`` bitmasks to an ``(N, m)`` boolean array."""
    return ((masks[:, None] >> np.arange(m, dtype=np.int64)) & 1).astype(bool)


def label_table(G: Graph) -> np.ndarray:
    """Cluster labels (smallest vertex of the cluster) for every edge subset of ``G``.

    Row ``mask`` holds the labels of the bond configuration whose open edges
    are the set bits of ``mask``.
    """
    cached = _label_tables.get(G)
    if cached is not None:
        return cached
    m, V = G.n_edges, G.n_vertices
    if m > MAX_TABLE_EDGES:
        raise ValueError(f"label table needs 2**{m} rows; limit is {MAX_TABLE_EDGES} edges")
    dtype = np.int8 if V < 128 else np.int16
    masks = all_masks(m)
    labels = np.tile(np.arange(V, dtype=dtype), (1 << m, 1))
    open_ = [((masks >> i) & 1).astype(bool) for i in range(m)]
    # min-label propagation; stops once every open edge joins equal labels
    while True:
        changed = False
        for i, (a, b) in enumerate(G.edges):
            o = open_[i]
            la, lb = labels[:, a], labels[:, b]
            lo = np.minimum(la, lb)
            upd = o & (la != lb)
            if upd.any():
                changed = True
                labels[upd, a] = lo[upd]
                labels[upd, b] = lo[upd]
        if not changed:
            break
    _label_tables[G] = labels
    return labels


def _edge_bools(G: Graph, edges: Iterable[int] | None) -> np.ndarray | None:
    if edges is None:
        return None
    sel = np.zeros(G.n_edges, dtype=bool)
    sel[list(edges)] = True
    return sel


def _labels_of(G: Graph, open_: np.ndarray) -> np.ndarray:
    lab = np.empty(G.n_vertices, dtype=np.int64)
    kernels.label_clusters(G.n_vertices, G.edge_u, G.edge_v, np.ascontiguousarray(open_, dtype=np.uint8), lab)
    return lab


class Event:
    """Base class; subclasses define ``test`` and either ``trace_table`` or ``masks``."""

    trace_only = True
    edges: tuple[int, ...] | None = None

    def test(self, G: Graph, odd: np.ndarray, open_: np.ndarray) -> bool:
        raise NotImplementedError

    def trace_table(self, G: Graph) -> np.ndarray:
        """Truth value for every trace bitmask (trace-only events)."""
        raise NotImplementedError

    def trace_vector(self, G: Graph) -> np.ndarray:
        per_graph = _vector_cache.setdefault(G, {})
        vec = per_graph.get(self)
        if vec is None:
            vec = np.asarray(self.trace_table(G), dtype=bool)
            per_graph[self] = vec
        return vec

    def masks(self, G: Graph, odd: np.ndarray, trace: np.ndarray) -> np.ndarray:
        return self.trace_vector(G)[trace]

    def __call__(self, state, bonds=None) -> bool:
        if bonds is None:
            bonds = state.trace()
        return bool(self.test(state.graph, state.odd, bonds.open))

    def support(self, G: Graph) -> np.ndarray | None:
        """Edges the event depends on, or None when it may depend on all of them."""
        return None if self.edges is None else np.asarray(self.edges, dtype=np.int64)

    def __invert__(self) -> "Event":
        return Not(self)

    def __and__(self, other: "Event") -> "Event":
        return And((self, other))


@dataclass(frozen=True, eq=True)
class Always(Event):
    def test(self, G, odd, open_):
        return True

    def trace_table(self, G):
        return np.ones(1 << G.n_edges, dtype=bool)

    def masks(self, G, odd, trace):
        return np.ones(np.shape(trace), dtype=bool)

    def support(self, G):
        return np.zeros(0, dtype=np.int64)


@dataclass(frozen=True, eq=True)
class EdgesOpen(Event):
    """Every listed edge is open in the trace."""

    edges: tuple[int, ...]

    def test(self, G, odd, open_):
        return bool(np.all(open_[list(self.edges)]))

    def trace_table(self, G):
        m = mask_of(self.edges)
        return (all_masks(G.n_edges) & m) == m

    def masks(self, G, odd, trace):
        m = mask_of(self.edges)
        return (trace & m) == m


@dataclass(frozen=True, eq=True)
class EdgesOdd(Event):
    """Every listed edge (all edges when ``edges`` is None) has odd parity."""

    edges: tuple[int, ...] | None = None
    trace_only = False

    def test(self, G, odd, open_):
        sel = odd if self.edges is None else odd[list(self.edges)]
        return bool(np.all(sel))

    def masks(self, G, odd, trace):
        m = (1 << G.n_edges) - 1 if self.edges is None else mask_of(self.edges)
        return (odd & m) == m


@dataclass(frozen=True, eq=True)
class Connected(Event):
    """``x`` and ``y`` lie in one cluster of the trace restricted to ``edges``."""

    x: int
    y: int
    edges: tuple[int, ...] | None = None

    def test(self, G, odd, open_):
        if self.x == self.y:
            return True
        sel = _edge_bools(G, self.edges)
        lab = _labels_of(G, open_ if sel is None else open_ & sel)
        return bool(lab[self.x] == lab[self.y])

    def trace_table(self, G):
        lt = label_table(G)
        masks = all_masks(G.n_edges)
        if self.edges is not None:
            lt = lt[masks & mask_of(self.edges)]
        return lt[:, self.x] == lt[:, self.y]


@dataclass(frozen=True, eq=True)
class Disjoint(Event):
    """Clusters of ``x`` and ``y`` in the trace restricted to ``edges`` do not meet."""

    x: int
    y: int
    edges: tuple[int, ...] | None = None

    def test(self, G, odd, open_):
        return not Connected(self.x, self.y, self.edges).test(G, odd, open_)

    def trace_table(self, G):
        return ~Connected(self.x, self.y, self.edges).trace_vector(G)


@dataclass(frozen=True, eq=True)
class FS(Event):
    """Every cluster of the trace meets ``S`` an even number of times."""

    S: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "S", frozenset(int(s) for s in self.S))
        if len(self.S) % 2:
            raise ValueError(f"F_S needs an even set, got {sorted(self.S)}")

    def test(self, G, odd, open_):
        if not self.S:
            return True
        lab = _labels_of(G, open_)
        acc: dict[int, int] = {}
        for s in self.S:
            acc[int(lab[s])] = acc.get(int(lab[s]), 0) ^ 1
        return not any(acc.values())

    def trace_table(self, G):
        if not self.S:
            return np.ones(1 << G.n_edges, dtype=bool)
        lt = label_table(G).astype(np.int64)
        acc = np.zeros(len(lt), dtype=object if G.n_vertices > 62 else np.int64)
        for s in self.S:
            acc ^= np.left_shift(1, lt[:, s])
        return acc == 0


@dataclass(frozen=True, eq=True)
class Not(Event):
    inner: Event

    def __post_init__(self):
        object.__setattr__(self, "trace_only", self.inner.trace_only)

    def test(self, G, odd, open_):
        return not self.inner.test(G, odd, open_)

    def trace_table(self, G):
        return ~self.inner.trace_vector(G)

    def masks(self, G, odd, trace):
        return ~self.inner.masks(G, odd, trace)

    def support(self, G):
        return self.inner.support(G)


@dataclass(frozen=True, eq=True)
class And(Event):
    parts: tuple[Event, ...]

    def __post_init__(self):
        object.__setattr__(self, "trace_only", all(p.trace_only for p in self.parts))

    def test(self, G, odd, open_):
        return all(p.test(G, odd, open_) for p in self.parts)

    def trace_table(self, G):
        out = np.ones(1 << G.n_edges, dtype=bool)
        for p in self.parts:
            out &= p.trace_vector(G)
        return out

    def masks(self, G, odd, trace):
        out = np.ones(np.shape(trace), dtype=bool)
        for p in self.parts:
            out &= p.masks(G, odd, trace)
        return out

    def support(self, G):
        sups = [p.support(G) for p in self.parts]
        if any(s is None for s in sups):
            return None
        return np.unique(np.concatenate(sups)) if sups else np.zeros(0, dtype=np.int64)


class Predicate(Event):
    """Wrap a plain callable ``f(ParityState, BondConfig) -> bool``."""

    trace_only = False

    def __init__(self, fn):
        self.fn = fn

    def test(self, G, odd, open_):
        from .currents import BondConfig, ParityState

        state = ParityState.from_odd(G, odd, open_ & ~odd)
        return bool(self.fn(state, BondConfig(G, open_)))

    def masks(self, G, odd, trace):
        m = G.n_edges
        ob, tb = bits_to_bool(np.atleast_1d(odd), m), bits_to_bool(np.atleast_1d(trace), m)
        return np.array([self.test(G, o, t) for o, t in zip(ob, tb)], dtype=bool)


def as_event(obj) -> Event:
    if isinstance(obj, Event):
        return obj
    if callable(obj):
        return Predicate(obj)
    raise TypeError(f"cannot interpret {obj!r} as an event")
