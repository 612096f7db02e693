"""Exact enumeration of currents through their parity states.

Three engines, from most to least explicit:

* ``ParityTable``: every parity state with prescribed sources (``3**|E|``
  states at most), each with its exact class weight;
* ``pair_sum``: the same for two independent currents, evaluated on the
  parity state of their sum;
* ``trace_law_prob``: probabilities of trace events of ``n_1 + ... + n_k``,
  summing over odd sets only. Given its odd set, the even edges of a current
  are independently nonzero with probability ``(cosh b - 1) / cosh b``, so the
  remaining randomness is a product measure that is integrated out with a
  subset transform over ``2**|E|`` traces.
"""
from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from ..events import Event, all_masks, as_event, mask_of
from ..lattice import Graph
from .spins import OracleSizeError

MAX_PARITY_EDGES = 12
MAX_PAIR_EDGES = 8
MAX_TRACE_EDGES = 22
_CHUNK = 1 << 22


class ZeroPartitionError(ValueError):
    """No current has the requested sources, so ``Z^S = 0`` and the measure is undefined."""


def source_set(*points: int) -> frozenset[int]:
    """Sources ``{a} xor {b} xor ...``; repeated points cancel."""
    out: set[int] = set()
    for p in points:
        out ^= {int(p)}
    return frozenset(out)


def _check_even(S: Iterable[int]) -> frozenset[int]:
    S = frozenset(int(s) for s in S)
    if len(S) % 2:
        raise ValueError(f"source set must have even size, got {sorted(S)}")
    return S


def popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a).astype(np.int64)


def submasks(mask: int) -> np.ndarray:
    """All submasks of ``mask`` as an int64 array (increasing)."""
    bits = [i for i in range(mask.bit_length()) if (mask >> i) & 1]
    idx = np.arange(1 << len(bits), dtype=np.int64)
    out = np.zeros_like(idx)
    for j, b in enumerate(bits):
        out |= ((idx >> j) & 1) << b
    return out


def odd_sets(G: Graph, S: Iterable[int]) -> np.ndarray:
    """Bitmasks of all edge sets whose odd-degree vertices are exactly ``S``.

    A spanning forest gives one solution; the rest differ from it by elements
    of the cycle space, spanned by the fundamental cycles of the forest.
    Returns an empty array when no such set exists.
    """
    S = _check_even(S)
    if G.n_edges > MAX_TRACE_EDGES:
        raise OracleSizeError(f"odd-set enumeration over up to 2**{G.n_edges} sets; limit is {MAX_TRACE_EDGES} edges")
    V = G.n_vertices
    parent = [-1] * V
    parent_edge = [-1] * V
    comp = [-1] * V
    order: list[int] = []
    tree_edges: set[int] = set()
    for root in range(V):
        if comp[root] >= 0:
            continue
        comp[root] = root
        stack = [root]
        while stack:
            v = stack.pop()
            order.append(v)
            for e, w in G.incident[v]:
                if comp[w] < 0:
                    comp[w] = root
                    parent[w] = v
                    parent_edge[w] = e
                    tree_edges.add(e)
                    stack.append(w)
    # each component must hold an even number of sources
    per_comp: dict[int, int] = {}
    for s in S:
        per_comp[comp[s]] = per_comp.get(comp[s], 0) ^ 1
    if any(per_comp.values()):
        return np.zeros(0, dtype=np.int64)
    # particular solution: tree edge above v is odd iff v's subtree holds an odd number of sources
    odd_below = {v: (1 if v in S else 0) for v in range(V)}
    base = 0
    for v in reversed(order):
        if parent[v] >= 0 and odd_below[v]:
            base |= 1 << parent_edge[v]
            odd_below[parent[v]] ^= 1
    # fundamental cycles
    cycles = []
    for e, (a, b) in enumerate(G.edges):
        if e in tree_edges:
            continue
        cyc = 1 << e
        pa, pb = _root_path(a, parent, parent_edge), _root_path(b, parent, parent_edge)
        cyc ^= pa ^ pb
        cycles.append(cyc)
    combos = np.array([base], dtype=np.int64)
    for c in cycles:
        combos = np.concatenate([combos, combos ^ c])
    return np.sort(combos)


def _root_path(v: int, parent: list[int], parent_edge: list[int]) -> int:
    m = 0
    while parent[v] >= 0:
        m ^= 1 << parent_edge[v]
        v = parent[v]
    return m


class ParityTable:
    """All parity states with sources ``S`` and their weights.

    ``odd`` and ``pos`` are bitmasks of the Odd and EvenPositive edges;
    ``weight`` is ``sinh(b)**|odd| * (cosh(b) - 1)**|pos|``, the exact total
    weight of the currents reducing to that state.
    """

    def __init__(self, G: Graph, beta: float, S: Iterable[int], max_edges: int = MAX_PARITY_EDGES):
        m = G.n_edges
        if m > max_edges:
            raise OracleSizeError(f"parity enumeration over up to 3**{m} states; limit is {max_edges} edges")
        self.graph = G
        self.beta = float(beta)
        self.S = _check_even(S)
        full = (1 << m) - 1
        odd_parts, pos_parts = [], []
        for o in odd_sets(G, self.S).tolist():
            subs = submasks(full & ~o)
            odd_parts.append(np.full(len(subs), o, dtype=np.int64))
            pos_parts.append(subs)
        if odd_parts:
            self.odd = np.concatenate(odd_parts)
            self.pos = np.concatenate(pos_parts)
        else:
            self.odd = np.zeros(0, dtype=np.int64)
            self.pos = np.zeros(0, dtype=np.int64)
        s, c1 = math.sinh(beta), math.cosh(beta) - 1.0
        self.weight = s ** popcount(self.odd) * c1 ** popcount(self.pos)

    @property
    def trace(self) -> np.ndarray:
        return self.odd | self.pos

    def __len__(self) -> int:
        return len(self.odd)

    @property
    def Z(self) -> float:
        return math.fsum(self.weight.tolist())

    def expect(self, event) -> float:
        if len(self) == 0:
            raise ZeroPartitionError(f"no current on {self.graph.name} has sources {sorted(self.S)}")
        ev = as_event(event).masks(self.graph, self.odd, self.trace)
        return math.fsum(self.weight[ev].tolist()) / self.Z


def partition_function(G: Graph, beta: float, S: Iterable[int]) -> float:
    """``Z^S``: total weight of currents with sources ``S`` (from odd sets only)."""
    O = odd_sets(G, S)
    t = math.tanh(beta)
    return math.cosh(beta) ** G.n_edges * math.fsum((t ** popcount(O)).tolist())


def current_event_prob(G: Graph, beta: float, S: Iterable[int], event) -> float:
    """``P^S[event]`` by enumerating parity states."""
    return ParityTable(G, beta, S).expect(event)


def correlation_via_currents(G: Graph, beta: float, S: Iterable[int]) -> float:
    """``Z^S / Z^0`` from the parity enumeration."""
    S = source_set(*S)
    if not S:
        return 1.0
    return ParityTable(G, beta, S).Z / ParityTable(G, beta, ()).Z


# sum of two parity classes (0 = Zero, 1 = EvenPositive, 2 = Odd), for reference
SUM_CLASS = np.array([[0, 1, 2], [1, 1, 2], [2, 2, 1]], dtype=np.int8)


def pair_sum(G: Graph, beta: float, S1: Iterable[int], S2: Iterable[int], event,
             condition: Event | None = None) -> float:
    """``sum w(n1) w(n2) F(n1 + n2)`` over ``dn1 = S1``, ``dn2 = S2``.

    ``F`` is ``event`` (times ``condition`` when given) evaluated on the
    parity state of the sum: odd part ``odd1 ^ odd2`` and trace
    ``trace1 | trace2``. Exact for every parity/trace-measurable ``F``.
    """
    if G.n_edges > MAX_PAIR_EDGES:
        raise OracleSizeError(f"joint enumeration over up to 9**{G.n_edges} pairs; limit is {MAX_PAIR_EDGES} edges")
    ev = as_event(event)
    t1, t2 = ParityTable(G, beta, S1), ParityTable(G, beta, S2)
    if len(t1) == 0 or len(t2) == 0:
        return 0.0
    tr1, tr2 = t1.trace, t2.trace
    rows = max(1, _CHUNK // len(t2))
    partial = []
    for i in range(0, len(t1), rows):
        sl = slice(i, i + rows)
        odd = t1.odd[sl, None] ^ t2.odd[None, :]
        tr = tr1[sl, None] | tr2[None, :]
        w = t1.weight[sl, None] * t2.weight[None, :]
        f = ev.masks(G, odd, tr)
        if condition is not None:
            f = f & condition.masks(G, odd, tr)
        partial.append(math.fsum(w[f].tolist()))
    return math.fsum(partial)


def pair_law(G: Graph, beta: float, S1: Iterable[int], S2: Iterable[int]) -> np.ndarray:
    """Unnormalized joint weight of (odd part, trace) of ``n1 + n2``, indexed ``[odd, trace]``."""
    m = G.n_edges
    if m > MAX_PAIR_EDGES:
        raise OracleSizeError(f"joint enumeration over up to 9**{m} pairs; limit is {MAX_PAIR_EDGES} edges")
    t1, t2 = ParityTable(G, beta, S1), ParityTable(G, beta, S2)
    acc = np.zeros(1 << (2 * m))
    if len(t1) and len(t2):
        rows = max(1, _CHUNK // len(t2))
        for i in range(0, len(t1), rows):
            sl = slice(i, i + rows)
            code = ((t1.odd[sl, None] ^ t2.odd[None, :]) << m) | (t1.trace[sl, None] | t2.trace[None, :])
            w = t1.weight[sl, None] * t2.weight[None, :]
            acc += np.bincount(code.ravel(), weights=w.ravel(), minlength=len(acc))
    return acc.reshape(1 << m, 1 << m)


def event_grid(G: Graph, event) -> np.ndarray:
    """Truth table of an event over every (odd mask, trace mask) pair."""
    ev = as_event(event)
    if G.n_edges > MAX_PAIR_EDGES:
        raise OracleSizeError(f"event grid over 4**{G.n_edges} cells; limit is {MAX_PAIR_EDGES} edges")
    masks = all_masks(G.n_edges)
    grid = ev.masks(G, masks[:, None], masks[None, :])
    return np.broadcast_to(np.asarray(grid, dtype=bool), (len(masks), len(masks)))


def pair_event_prob(G: Graph, beta: float, S1: Iterable[int], S2: Iterable[int], event) -> float:
    """``P^{S1,S2}[event(n1 + n2)]`` by joint parity enumeration."""
    z1, z2 = ParityTable(G, beta, S1).Z, ParityTable(G, beta, S2).Z
    if z1 == 0 or z2 == 0:
        raise ZeroPartitionError(f"sources {sorted(S1)} / {sorted(S2)} carry no current on {G.name}")
    return pair_sum(G, beta, S1, S2, event) / (z1 * z2)


def _smooth(vec: np.ndarray, m: int, q: float) -> np.ndarray:
    """``g(A) = E[vec(A | R)]`` where ``R`` opens each edge outside ``A`` with probability ``q``."""
    g = vec.astype(np.float64)
    for i in range(m):
        view = g.reshape(-1, 2, 1 << i)
        view[:, 0, :] = (1.0 - q) * view[:, 0, :] + q * view[:, 1, :]
    return g


def union_distribution(G: Graph, beta: float, sources: Sequence[Iterable[int]]) -> np.ndarray:
    """Normalized law of the union of the odd sets of independent currents."""
    m = G.n_edges
    t = math.tanh(beta)
    support = np.zeros(1, dtype=np.int64)
    mass = np.ones(1)
    for S in sources:
        O = odd_sets(G, S)
        if len(O) == 0:
            raise ZeroPartitionError(f"no current on {G.name} has sources {sorted(S)}")
        w = t ** popcount(O)
        w = w / math.fsum(w.tolist())
        rows = max(1, _CHUNK // len(O))
        acc = np.zeros(1 << m)
        for i in range(0, len(support), rows):
            sl = slice(i, i + rows)
            u = (support[sl, None] | O[None, :]).ravel()
            acc += np.bincount(u, weights=(mass[sl, None] * w[None, :]).ravel(), minlength=1 << m)
        support = np.flatnonzero(acc)
        mass = acc[support]
    dist = np.zeros(1 << m)
    dist[support] = mass
    return dist


def trace_law_prob(G: Graph, beta: float, sources: Sequence[Iterable[int]], event: Event) -> float:
    """``P^{S_1,...,S_k}[event]`` for a trace event of ``n_1 + ... + n_k``."""
    m = G.n_edges
    if m > MAX_TRACE_EDGES:
        raise OracleSizeError(f"trace enumeration over 2**{m} configurations; limit is {MAX_TRACE_EDGES} edges")
    if not event.trace_only:
        raise ValueError("trace_law_prob needs an event of the trace only")
    k = len(sources)
    c = math.cosh(beta)
    q = 1.0 - c ** (-k)
    dist = union_distribution(G, beta, sources)
    g = _smooth(event.trace_vector(G), m, q)
    return float(math.fsum((dist * g).tolist()))


def trace_law(G: Graph, beta: float, sources: Sequence[Iterable[int]]) -> np.ndarray:
    """Full law of the trace of ``n_1 + ... + n_k`` over all ``2**|E|`` bond sets."""
    m = G.n_edges
    if m > MAX_TRACE_EDGES:
        raise OracleSizeError(f"trace law over 2**{m} configurations; limit is {MAX_TRACE_EDGES} edges")
    q = 1.0 - math.cosh(beta) ** (-len(sources))
    return _spread(union_distribution(G, beta, sources), m, q)


def _spread(dist: np.ndarray, m: int, q: float) -> np.ndarray:
    """Push a law on base sets forward through ``A -> A | R``."""
    p = dist.astype(np.float64).copy()
    for i in range(m):
        view = p.reshape(-1, 2, 1 << i)
        moved = q * view[:, 0, :]
        view[:, 1, :] += moved
        view[:, 0, :] -= moved
    return p


def edge_mask(G: Graph, pairs: Iterable[tuple[int, int]]) -> int:
    return mask_of(G.edge_index(a, b) for a, b in pairs)
