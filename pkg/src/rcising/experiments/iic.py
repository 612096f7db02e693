"""Stabilization of local events under currents with one far source."""
from __future__ import annotations

import math
from functools import partial
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

from ..events import Always, as_event
from ..lattice import Graph, LatticeGraph
from ..samplers import CurrentSampler, EstimateResult, FkCouplingSampler, SamplerConfig, estimate


@dataclass(frozen=True)
class IicRow:
    x: int
    prob: float
    se: float
    n_samples: int
    result: EstimateResult


@dataclass(frozen=True)
class IicDelta:
    x: int
    x2: int
    delta: float
    se: float


@dataclass
class IicScan:
    rows: list[IicRow]
    deltas: list[IicDelta]
    mode: str

    def delta(self, x: int, x2: int) -> IicDelta:
        for dl in self.deltas:
            if {dl.x, dl.x2} == {x, x2}:
                return dl
        raise KeyError((x, x2))


def _support_vertices(G: Graph, event) -> set[int] | None:
    sup = event.support(G)
    if sup is None:
        return None
    return {int(v) for e in sup.tolist() for v in G.edges[e]}


def _iic_row(G, beta, ev, cfg, mode, origin, item) -> IicRow:
    i, x = item
    S = (origin, x)
    sampler = CurrentSampler(G, beta, S, replica=i) if mode == "current" else FkCouplingSampler(G, beta, S, replica=i)
    r = estimate(ev, sampler, cfg)
    return IicRow(x, r.mean, r.std_error, r.n_samples, r)


def iic_stabilization_scan(G: Graph, beta: float, event, xs: Sequence[int], cfg: SamplerConfig,
                           mode: str = "current", origin: int | None = None, map_fn=map) -> IicScan:
    """``P^{0x}[event]`` for each ``x`` (``mode='current'``) or ``phi[event | F_{0x}]``
    (``mode='fk'``), one independent chain per ``x``, plus all pairwise deltas."""
    ev = as_event(event)
    if mode not in ("current", "fk"):
        raise ValueError(f"mode must be 'current' or 'fk', got {mode!r}")
    if origin is None:
        origin = G.origin if isinstance(G, LatticeGraph) else 0
    verts = _support_vertices(G, ev)
    if verts is None and not isinstance(ev, Always):
        raise ValueError("the event must declare a finite edge support")
    for x in xs:
        if x == origin:
            raise ValueError("the far source must differ from the origin")
        if verts and x in verts:
            raise ValueError(f"source {x} lies inside the event support")
    job = partial(_iic_row, G, beta, ev, cfg, mode, origin)
    rows = list(map_fn(job, list(enumerate(int(x) for x in xs))))
    deltas = [IicDelta(a.x, b.x, abs(a.prob - b.prob), math.hypot(a.se, b.se)) for a, b in combinations(rows, 2)]
    return IicScan(rows, deltas, mode)
