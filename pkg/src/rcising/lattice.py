"""Finite graphs: free boxes and tori of Z^d, plus tiny explicit graphs.

Vertices are integers ``0..V-1``. For lattices the indexing is row-major over
coordinates, so index order coincides with coordinate-lexicographic order and
the canonical edge order (lexicographic on the sorted endpoint pair) is just
the order of ``(a, b)`` index pairs with ``a < b``.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class Geometry(str, enum.Enum):
    FREE_BOX = "box"
    TORUS = "torus"
    EXPLICIT = "explicit"


class Graph:
    """Simple undirected graph with a fixed, canonical edge order.

    Edge ``i`` has rank ``i``. ``edges`` holds ``(a, b)`` with ``a < b``,
    sorted lexicographically.
    """

    geometry = Geometry.EXPLICIT

    def __init__(self, n_vertices: int, edges: Iterable[tuple[int, int]], name: str = ""):
        n_vertices = int(n_vertices)
        if n_vertices < 1:
            raise ValueError("a graph needs at least one vertex")
        normalized = set()
        for a, b in edges:
            a, b = int(a), int(b)
            if a == b:
                raise ValueError(f"self-loop at vertex {a}")
            if not (0 <= a < n_vertices and 0 <= b < n_vertices):
                raise ValueError(f"edge ({a}, {b}) out of range")
            normalized.add((min(a, b), max(a, b)))
        self.n_vertices = n_vertices
        self.edges: tuple[tuple[int, int], ...] = tuple(sorted(normalized))
        self.name = name or f"graph(V={n_vertices},E={len(self.edges)})"
        self._edge_index = {e: i for i, e in enumerate(self.edges)}
        self.edge_u = np.array([e[0] for e in self.edges], dtype=np.int64)
        self.edge_v = np.array([e[1] for e in self.edges], dtype=np.int64)
        self._build_adjacency()

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int]], n_vertices: int | None = None, name: str = "") -> "Graph":
        edges = list(edges)
        if n_vertices is None:
            n_vertices = 1 + max((max(e) for e in edges), default=0)
        return cls(n_vertices, edges, name=name)

    def _build_adjacency(self) -> None:
        V = self.n_vertices
        incident: list[list[tuple[int, int]]] = [[] for _ in range(V)]
        for i, (a, b) in enumerate(self.edges):
            incident[a].append((i, b))
            incident[b].append((i, a))
        for lst in incident:
            lst.sort()
        deg = np.array([len(lst) for lst in incident], dtype=np.int64)
        offsets = np.zeros(V + 1, dtype=np.int64)
        np.cumsum(deg, out=offsets[1:])
        self.degrees = deg
        self.offsets = offsets
        self.nbr_e = np.array([i for lst in incident for i, _ in lst], dtype=np.int64)
        self.nbr_v = np.array([w for lst in incident for _, w in lst], dtype=np.int64)
        # incident edges of each vertex in increasing rank, as (edge, other endpoint)
        self.incident = tuple(tuple(lst) for lst in incident)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_index(self, a: int, b: int) -> int:
        try:
            return self._edge_index[(min(a, b), max(a, b))]
        except KeyError:
            raise KeyError(f"no edge between {a} and {b}") from None

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self._edge_index

    def neighbours(self, v: int) -> list[int]:
        return [w for _, w in self.incident[v]]

    @cached_property
    def is_connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for _, w in self.incident[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n_vertices

    @cached_property
    def diameter(self) -> int:
        best = 0
        for s in range(self.n_vertices):
            dist = {s: 0}
            frontier = [s]
            while frontier:
                nxt = []
                for v in frontier:
                    for _, w in self.incident[v]:
                        if w not in dist:
                            dist[w] = dist[v] + 1
                            nxt.append(w)
                frontier = nxt
            best = max(best, max(dist.values()))
            if self.n_vertices > 2000:
                break  # lower bound from a single BFS is enough for heuristics
        return best

    def descriptor(self) -> dict:
        return {"geometry": self.geometry.value, "name": self.name,
                "n_vertices": self.n_vertices, "edges": [list(e) for e in self.edges]}

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


class LatticeGraph(Graph):
    """Free box ``[-n, n]^d`` or torus ``(Z/LZ)^d`` with nearest-neighbour edges."""

    def __init__(self, d: int, size: int, geometry: Geometry | str):
        geometry = Geometry(geometry)
        if d < 1:
            raise ValueError("dimension must be >= 1")
        if geometry is Geometry.FREE_BOX:
            if size < 0:
                raise ValueError("box radius must be >= 0")
            side, low = 2 * size + 1, -size
        elif geometry is Geometry.TORUS:
            if size < 3:
                raise ValueError(f"torus side must be >= 3 (got {size}); smaller sides create self-loops or multi-edges")
            side, low = size, 0
        else:
            raise ValueError("lattices are boxes or tori")
        self.d = int(d)
        self.size = int(size)
        self.side = side
        self.geometry = geometry
        self.coords = np.array(list(itertools.product(range(low, low + side), repeat=d)), dtype=np.int64)
        strides = side ** np.arange(d - 1, -1, -1, dtype=np.int64)
        self._strides = strides
        self._low = low
        edges = []
        for v in range(len(self.coords)):
            c = self.coords[v]
            for i in range(d):
                ci = c[i] - low + 1
                if geometry is Geometry.TORUS:
                    ci %= side
                elif ci >= side:
                    continue
                w = v + (ci - (c[i] - low)) * strides[i]
                edges.append((v, int(w)))
        name = f"{geometry.value}(d={d},{'n' if geometry is Geometry.FREE_BOX else 'L'}={size})"
        super().__init__(len(self.coords), edges, name=name)

    def index(self, coord: Sequence[int]) -> int:
        c = np.asarray(coord, dtype=np.int64)
        if c.shape != (self.d,):
            raise ValueError(f"expected {self.d} coordinates")
        c = c - self._low
        if self.geometry is Geometry.TORUS:
            c = c % self.side
        elif np.any(c < 0) or np.any(c >= self.side):
            raise KeyError(f"{tuple(coord)} lies outside the box")
        return int(c @ self._strides)

    def coord(self, v: int) -> tuple[int, ...]:
        return tuple(int(x) for x in self.coords[v])

    @property
    def origin(self) -> int:
        return self.index([0] * self.d)

    def unit(self, i: int = 0, sign: int = 1) -> int:
        c = [0] * self.d
        c[i] = sign
        return self.index(c)

    @cached_property
    def displacements(self) -> np.ndarray:
        """Displacement of every vertex from the origin (minimal image on a torus)."""
        disp = self.coords.copy()
        if self.geometry is Geometry.TORUS:
            disp = np.where(disp > self.side // 2, disp - self.side, disp)
        return disp

    @cached_property
    def sup_norms(self) -> np.ndarray:
        return np.abs(self.displacements).max(axis=1)

    @cached_property
    def diameter(self) -> int:
        if self.geometry is Geometry.FREE_BOX:
            return 2 * self.d * self.size
        return self.d * (self.side // 2)

    @property
    def max_region_radius(self) -> int:
        return self.size if self.geometry is Geometry.FREE_BOX else (self.side - 1) // 2

    def descriptor(self) -> dict:
        return {"geometry": self.geometry.value, "d": self.d, "size": self.size}


def build_lattice(d: int, size: int, geometry: Geometry | str = Geometry.FREE_BOX) -> LatticeGraph:
    return LatticeGraph(d, size, geometry)


def canonical_edge_order(G: Graph) -> dict[tuple[int, int], int]:
    """Rank map ``edge -> int``; edges are stored in this order already."""
    return {e: i for i, e in enumerate(G.edges)}


@dataclass(frozen=True)
class Region:
    """``box`` is Λ_m, ``annulus`` is Λ_M \\ Λ_m, ``boundary`` is ∂Λ_m."""

    kind: str
    m: int
    M: int | None = None

    def __post_init__(self):
        if self.kind not in ("box", "annulus", "boundary"):
            raise ValueError(f"unknown region kind {self.kind!r}")
        if self.m < 0:
            raise ValueError("region radius must be >= 0")
        if self.kind == "annulus" and (self.M is None or self.M <= self.m):
            raise ValueError("annulus needs m < M")

    @classmethod
    def box(cls, m: int) -> "Region":
        return cls("box", m)

    @classmethod
    def annulus(cls, m: int, M: int) -> "Region":
        return cls("annulus", m, M)

    @classmethod
    def boundary(cls, m: int) -> "Region":
        return cls("boundary", m)


def region_vertices(G: LatticeGraph, r: Region) -> np.ndarray:
    """Sorted vertex indices of the region, measured in sup-norm from the origin."""
    outer = r.M if r.kind == "annulus" else r.m
    if outer > G.max_region_radius:
        raise ValueError(f"region radius {outer} exceeds the graph (max {G.max_region_radius})")
    norms = G.sup_norms
    if r.kind == "box":
        mask = norms <= r.m
    elif r.kind == "annulus":
        mask = (norms > r.m) & (norms <= r.M)
    else:
        # x in Λ_m with a Z^d-neighbour outside Λ_m
        mask = norms == r.m
    return np.flatnonzero(mask)


def region_edges(G: LatticeGraph, vertices: np.ndarray) -> np.ndarray:
    """Indices of edges with both endpoints in ``vertices``."""
    inside = np.zeros(G.n_vertices, dtype=bool)
    inside[vertices] = True
    return np.flatnonzero(inside[G.edge_u] & inside[G.edge_v])


def load_corpus(name: str = "small") -> list[Graph]:
    """Connected graphs shipped as fixtures (``data/corpus_<name>.txt``)."""
    from importlib import resources

    text = resources.files("rcising").joinpath(f"data/corpus_{name}.txt").read_text()
    graphs = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        label, n, *tokens = line.split()
        edges = [tuple(int(x) for x in tok.split("-")) for tok in tokens]
        graphs.append(Graph(int(n), edges, name=label))
    return graphs


def path_graph(n: int) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(n - 1)], name=f"P{n}")


def cycle_graph(n: int) -> Graph:
    return Graph(n, [(i, (i + 1) % n) for i in range(n)], name=f"C{n}")
