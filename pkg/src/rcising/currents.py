"""Currents, their parity reduction, traces and backbones."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .lattice import Graph


class ParityClass(enum.IntEnum):
    ZERO = 0
    EVEN = 1  # even and positive
    ODD = 2


_CHARS = "0eo"
_FROM_CHAR = {c: i for i, c in enumerate(_CHARS)}


def class_weights(beta: float) -> tuple[float, float, float]:
    """Sums of beta^k/k! over k = 0, over even k > 0 and over odd k."""
    return 1.0, math.cosh(beta) - 1.0, math.sinh(beta)


def class_log_weights(beta: float) -> tuple[float, float, float]:
    # log(cosh b - 1) = log(2) + 2 log(sinh(b/2)) stays accurate for small b
    if beta <= 0:
        return 0.0, -math.inf, -math.inf
    return 0.0, math.log(2.0) + 2.0 * math.log(math.sinh(beta / 2)), math.log(math.sinh(beta))


def _as_vertex_set(S: Iterable[int]) -> frozenset[int]:
    return frozenset(int(s) for s in S)


def _odd_degree_vertices(G: Graph, odd_mask: np.ndarray) -> frozenset[int]:
    count = np.zeros(G.n_vertices, dtype=np.int64)
    np.add.at(count, G.edge_u[odd_mask], 1)
    np.add.at(count, G.edge_v[odd_mask], 1)
    return frozenset(int(v) for v in np.flatnonzero(count & 1))


class Current:
    """Edge multiplicities ``n_e >= 0`` on a graph."""

    def __init__(self, G: Graph, multiplicity: Sequence[int]):
        n = np.asarray(multiplicity, dtype=np.int64)
        if n.shape != (G.n_edges,):
            raise ValueError(f"need {G.n_edges} multiplicities, got shape {n.shape}")
        if np.any(n < 0):
            raise ValueError("multiplicities must be nonnegative")
        self.graph = G
        self.n = n

    def sources(self) -> frozenset[int]:
        return _odd_degree_vertices(self.graph, (self.n & 1).astype(bool))

    def log_weight(self, beta: float) -> float:
        return log_weight(self, beta)

    def parity(self) -> "ParityState":
        cls = np.where(self.n == 0, ParityClass.ZERO, np.where(self.n & 1, ParityClass.ODD, ParityClass.EVEN))
        return ParityState(self.graph, cls)

    def trace(self) -> "BondConfig":
        return BondConfig(self.graph, self.n > 0)

    def __add__(self, other: "Current") -> "Current":
        if other.graph is not self.graph:
            raise ValueError("currents live on different graphs")
        return Current(self.graph, self.n + other.n)

    def __repr__(self) -> str:
        return f"Current({self.n.tolist()})"


class ParityState:
    """Per-edge class in {Zero, EvenPositive, Odd}."""

    def __init__(self, G: Graph, state: Sequence[int] | np.ndarray):
        s = np.asarray(state, dtype=np.int8)
        if s.shape != (G.n_edges,):
            raise ValueError(f"need {G.n_edges} edge states, got shape {s.shape}")
        if s.size and (s.min() < 0 or s.max() > 2):
            raise ValueError("edge states must be 0, 1 or 2")
        self.graph = G
        self.state = s

    @classmethod
    def from_string(cls, G: Graph, text: str) -> "ParityState":
        try:
            return cls(G, [_FROM_CHAR[c] for c in text.strip()])
        except KeyError as exc:
            raise ValueError(f"bad parity character {exc.args[0]!r}") from None

    @classmethod
    def from_odd(cls, G: Graph, odd: np.ndarray, positive_even: np.ndarray | None = None) -> "ParityState":
        s = np.where(np.asarray(odd, dtype=bool), ParityClass.ODD, ParityClass.ZERO).astype(np.int8)
        if positive_even is not None:
            s[np.asarray(positive_even, dtype=bool) & (s == 0)] = ParityClass.EVEN
        return cls(G, s)

    def to_string(self) -> str:
        return "".join(_CHARS[c] for c in self.state)

    __str__ = to_string

    @property
    def odd(self) -> np.ndarray:
        return self.state == ParityClass.ODD

    def sources(self) -> frozenset[int]:
        return _odd_degree_vertices(self.graph, self.odd)

    def log_weight(self, beta: float) -> float:
        lw = class_log_weights(beta)
        counts = np.bincount(self.state, minlength=3)
        return float(sum(c * w for c, w in zip(counts, lw) if c))

    def weight(self, beta: float) -> float:
        return math.exp(self.log_weight(beta))

    def trace(self) -> "BondConfig":
        return BondConfig(self.graph, self.state != ParityClass.ZERO)

    def restrict_complement(self, edges: Iterable[int]) -> "ParityState":
        s = self.state.copy()
        s[list(edges)] = ParityClass.ZERO
        return ParityState(self.graph, s)

    def __eq__(self, other) -> bool:
        return isinstance(other, ParityState) and other.graph is self.graph and np.array_equal(self.state, other.state)

    def __hash__(self) -> int:
        return hash(self.state.tobytes())

    def __repr__(self) -> str:
        return f"ParityState('{self.to_string()}')"


class BondConfig:
    """Open/closed edges and their clusters."""

    def __init__(self, G: Graph, open_: Sequence[bool] | np.ndarray):
        o = np.asarray(open_, dtype=bool)
        if o.shape != (G.n_edges,):
            raise ValueError(f"need {G.n_edges} edge flags, got shape {o.shape}")
        self.graph = G
        self.open = np.ascontiguousarray(o)

    @cached_property
    def labels(self) -> np.ndarray:
        """Cluster label per vertex: the smallest vertex index of its cluster."""
        G = self.graph
        lab = np.empty(G.n_vertices, dtype=np.int64)
        kernels.label_clusters(G.n_vertices, G.edge_u, G.edge_v, self.open.view(np.uint8), lab)
        return lab

    def clusters(self) -> list[frozenset[int]]:
        groups: dict[int, list[int]] = {}
        for v, r in enumerate(self.labels.tolist()):
            groups.setdefault(r, []).append(v)
        return [frozenset(groups[r]) for r in sorted(groups)]

    def connected(self, x: int, y: int) -> bool:
        return bool(self.labels[x] == self.labels[y])

    def cluster_of(self, x: int) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.labels == self.labels[x]).tolist())

    def __repr__(self) -> str:
        return f"BondConfig({''.join('1' if b else '0' for b in self.open)})"


def sources(n: Current | ParityState) -> frozenset[int]:
    return n.sources()


def log_weight(n: Current, beta: float) -> float:
    """Sum over edges of ``n_e log(beta) - log(n_e!)``."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    m = n.n
    return float(np.sum(m) * math.log(beta) - sum(math.lgamma(k + 1) for k in m.tolist()))


def trace(n: Current | ParityState) -> BondConfig:
    return n.trace()


def clusters(c: BondConfig) -> list[frozenset[int]]:
    return c.clusters()


def connected(c: BondConfig, x: int, y: int) -> bool:
    return c.connected(x, y)


def fs_event(c: BondConfig, S: Iterable[int]) -> bool:
    """True iff every cluster of ``c`` contains an even number of points of ``S``."""
    S = _as_vertex_set(S)
    if len(S) % 2:
        raise ValueError(f"source set must have even size, got {sorted(S)}")
    if not S:
        return True
    lab = c.labels
    hits: dict[int, int] = {}
    for s in S:
        r = int(lab[s])
        hits[r] = hits.get(r, 0) ^ 1
    return not any(hits.values())


@dataclass(frozen=True)
class Backbone:
    """Oriented path of odd edges plus every edge looked at while finding it.

    ``steps`` lists ``(tail, head)`` pairs, ``edges`` the matching edge
    indices and ``explored`` contains ``edges`` and the even edges passed over.
    """

    steps: tuple[tuple[int, int], ...]
    edges: tuple[int, ...]
    explored: frozenset[int]

    @property
    def vertices(self) -> tuple[int, ...]:
        return (self.steps[0][0],) + tuple(b for _, b in self.steps)

    def passes_through(self, u: int, v: int) -> bool:
        """True when the path visits ``u`` and visits ``v`` at the same time or later."""
        seq = self.vertices
        try:
            first_u = seq.index(u)
        except ValueError:
            return False
        return v in seq[first_u:]


def explore_backbone(p: ParityState, x: int, y: int, order: Sequence[int] | None = None) -> Backbone:
    """Backbone of a state with sources ``{x, y}``.

    From the current endpoint, walk along the earliest (in ``order``) incident
    unexplored odd edge; the unexplored edges passed over on the way are even
    and become explored. Stops on the first visit to ``y``. ``order[i]`` is the
    rank of edge ``i``; the default is the canonical order.
    """
    G = p.graph
    if x == y:
        raise ValueError("backbone endpoints must differ")
    src = p.sources()
    if src != {x, y}:
        raise ValueError(f"sources are {sorted(src)}, expected {{{x}, {y}}}")
    odd = p.odd
    if order is None:
        incident = G.incident
    else:
        incident = tuple(tuple(sorted(inc, key=lambda ew: order[ew[0]])) for inc in G.incident)
    explored: set[int] = set()
    steps, path = [], []
    v = x
    while v != y:
        for e, w in incident[v]:
            if e in explored:
                continue
            explored.add(e)
            if odd[e]:
                steps.append((v, w))
                path.append(e)
                v = w
                break
        else:  # unreachable: parity guarantees an unexplored odd edge
            raise RuntimeError("backbone exploration got stuck")
    return Backbone(tuple(steps), tuple(path), frozenset(explored))
