"""FK-Ising (q = 2 random-cluster) measure by subset enumeration, and the
exact law of the sprinkled current trace."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ..events import FS, Event, all_masks, as_event, label_table
from ..lattice import Geometry, Graph, LatticeGraph
from .enumerate import MAX_TRACE_EDGES, ParityTable, ZeroPartitionError, _spread, popcount
from .spins import OracleSizeError


@dataclass(frozen=True)
class FkSpec:
    """Boundary condition, inverse temperature and conditioning set.

    ``wired`` identifies all boundary vertices through the exterior. The
    boundary defaults to the sup-norm sphere of a free box and to every vertex
    of an explicit graph; tori have none.
    """

    beta: float
    boundary: str = "free"
    S: frozenset[int] = field(default_factory=frozenset)
    boundary_vertices: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "S", frozenset(int(s) for s in self.S))
        if self.boundary not in ("free", "wired"):
            raise ValueError(f"boundary must be 'free' or 'wired', got {self.boundary!r}")
        if len(self.S) % 2:
            raise ValueError(f"conditioning set must have even size, got {sorted(self.S)}")


def _boundary(G: Graph, spec: FkSpec) -> tuple[int, ...]:
    if spec.boundary_vertices is not None:
        return tuple(spec.boundary_vertices)
    if isinstance(G, LatticeGraph):
        if G.geometry is Geometry.TORUS:
            raise ValueError("a torus has no boundary to wire")
        return tuple(np.flatnonzero(G.sup_norms == G.size).tolist())
    return tuple(range(G.n_vertices))


def cluster_counts(G: Graph, wired_to: tuple[int, ...] = ()) -> np.ndarray:
    """Number of clusters of every edge subset, with ``wired_to`` merged into one."""
    lt = label_table(G)
    V = G.n_vertices
    k = (lt == np.arange(V, dtype=lt.dtype)).sum(axis=1).astype(np.int64)
    if wired_to:
        seen = np.zeros(len(lt), dtype=np.int64)
        for b in wired_to:
            seen |= np.left_shift(np.int64(1), lt[:, b].astype(np.int64))
        k = k - popcount(seen) + 1
    return k


def fk_law(G: Graph, spec: FkSpec) -> np.ndarray:
    """``phi^xi[omega | F_S]`` for every edge subset ``omega``."""
    m = G.n_edges
    if m > MAX_TRACE_EDGES:
        raise OracleSizeError(f"FK enumeration over 2**{m} subsets; limit is {MAX_TRACE_EDGES} edges")
    wired = _boundary(G, spec) if spec.boundary == "wired" else ()
    k = cluster_counts(G, wired)
    n_open = popcount(all_masks(m))
    if spec.beta == 0:
        logw = np.where(n_open == 0, 0.0, -np.inf)
    else:
        logw = k * math.log(2.0) + n_open * math.log(math.expm1(2 * spec.beta))
    logw = logw - logw.max()
    w = np.exp(logw)
    if spec.S:
        w = w * FS(spec.S).trace_vector(G)
    z = math.fsum(w.tolist())
    if z == 0:
        raise ZeroPartitionError(f"F_S has zero FK mass for S={sorted(spec.S)}")
    return w / z


def fk_exact(G: Graph, spec: FkSpec, event) -> float:
    """``phi^xi_{G,beta}[event | F_S]``."""
    law = fk_law(G, spec)
    ev = _bond_event(event)
    return float(math.fsum(law[ev.trace_vector(G)].tolist()))


def _bond_event(event) -> Event:
    if isinstance(event, Event):
        if not event.trace_only:
            raise ValueError("FK events must depend on the bond configuration only")
        return event
    # plain callables receive the BondConfig
    return as_event(lambda state, bonds: event(bonds))


def coupling_law(G: Graph, beta: float, S: Iterable[int]) -> np.ndarray:
    """Law of ``eta = max(trace(n), omega)`` with ``dn = S``, ``omega`` iid Bernoulli(1 - e^-beta).

    The trace law comes from the explicit parity-state enumeration.
    """
    m = G.n_edges
    table = ParityTable(G, beta, S)
    if len(table) == 0:
        raise ZeroPartitionError(f"no current on {G.name} has sources {sorted(set(S))}")
    trace_law = np.bincount(table.trace, weights=table.weight, minlength=1 << m) / table.Z
    return _spread(trace_law, m, -math.expm1(-beta))


def coupling_exact_check(G: Graph, beta: float, S: Iterable[int], event) -> tuple[float, float]:
    """(``P[eta in event]``, ``phi^0[event | F_S]``)."""
    S = frozenset(S)
    ev = _bond_event(event)
    vec = ev.trace_vector(G)
    lhs = float(math.fsum(coupling_law(G, beta, S)[vec].tolist()))
    rhs = fk_exact(G, FkSpec(beta, "free", S), ev)
    return lhs, rhs


def coupling_tv(G: Graph, beta: float, S: Iterable[int]) -> float:
    """Total-variation distance between the law of ``eta`` and ``phi^0[. | F_S]`` on all edges jointly."""
    S = frozenset(S)
    diff = coupling_law(G, beta, S) - fk_law(G, FkSpec(beta, "free", S))
    return 0.5 * float(math.fsum(np.abs(diff).tolist()))
