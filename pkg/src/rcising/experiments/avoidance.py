"""Avoidance of the clusters of the origin and its neighbour under two currents."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence


from ..events import Disjoint
from ..lattice import Geometry, Graph, LatticeGraph, Region, region_edges, region_vertices
from ..samplers import (AveragedPairSampler, EstimateResult, MultiCurrentSampler, SamplerConfig, estimate,
                        estimate_many)


@dataclass
class AvoidanceResult:
    """``P[A_k]`` per ``k`` and the whole-graph avoidance, same draws."""

    ks: tuple[int, ...]
    local: tuple[EstimateResult, ...]
    full: EstimateResult
    sources: tuple[tuple[int, int], tuple[int, int]]
    notes: list[str] = field(default_factory=list)

    def gaps(self) -> list[tuple[int, float, float]]:
        """(k, P[A_k] - P[full], se); the two come from the same draws so the se is conservative."""
        return [(k, r.mean - self.full.mean, math.hypot(r.std_error, self.full.std_error))
                for k, r in zip(self.ks, self.local)]

    def rows(self) -> list[tuple]:
        out = [(k, r.mean, r.std_error, r.n_samples) for k, r in zip(self.ks, self.local)]
        out.append((-1, self.full.mean, self.full.std_error, self.full.n_samples))
        return out


def _anchors(G: Graph, o: int | None, e: int | None) -> tuple[int, int]:
    if isinstance(G, LatticeGraph):
        return (G.origin if o is None else o), (G.unit(0) if e is None else e)
    return (0 if o is None else o), (1 if e is None else e)


def avoidance_estimate(G: Graph, beta: float, x: int, y: int, ks: Sequence[int] | int | None, cfg: SamplerConfig,
                       o: int | None = None, e: int | None = None) -> AvoidanceResult:
    """Two independent currents with sources ``{o, x}`` and ``{e, y}``; events
    ``A_k`` (clusters of ``o`` and ``e`` disjoint in the trace restricted to
    the edges of ``Lambda_k``) and disjointness in the whole graph.

    ``o`` and ``e`` default to the origin and ``e_1`` on lattices and to
    vertices 0 and 1 otherwise; ``ks`` needs a free box.
    """
    o, e = _anchors(G, o, e)
    if x == e or x == o:
        raise ValueError("x must differ from the two anchors (degenerate sources)")
    if y in (o, x) or y == e:
        raise ValueError("y must differ from 0, x and e1 (degenerate sources)")
    if not G.has_edge(o, e):
        raise ValueError("the anchors must be neighbours")
    if isinstance(ks, int):
        ks = [ks]
    ks = tuple(ks or ())
    if ks:
        if not (isinstance(G, LatticeGraph) and G.geometry is Geometry.FREE_BOX):
            raise ValueError("the local events A_k need a free box")
        for k in ks:
            if not 0 <= 2 * k <= G.size:
                raise ValueError(f"k = {k} exceeds half the box radius {G.size}")
    events = [Disjoint(o, e, tuple(region_edges(G, region_vertices(G, Region.box(k))).tolist())) for k in ks]
    events.append(Disjoint(o, e))
    sampler = MultiCurrentSampler(G, beta, [(o, x), (e, y)])
    res = estimate_many(events, sampler, cfg)
    notes = []
    for a, b, k in zip(res[:-1], res[1:-1], ks[1:]):
        if b.mean > a.mean + 3 * math.hypot(a.std_error, b.std_error):
            notes.append(f"P[A_{k}] exceeds the previous k beyond 3 se")
    return AvoidanceResult(ks, tuple(res[:-1]), res[-1], ((o, x), (e, y)), notes)


def averaged_avoidance(G: LatticeGraph, beta: float, cfg: SamplerConfig) -> EstimateResult:
    """Avoidance under the two-current measure averaged over both far sources
    with weights ``<0x><e1 y> / chi^2``.

    On a torus this equals ``-(d chi^-1 / d beta) / (2d)`` exactly, the
    finite-volume counterpart of ``P^{0 inf, e1 inf}``.
    """
    if not (isinstance(G, LatticeGraph) and G.geometry is Geometry.TORUS):
        raise ValueError("the averaged avoidance needs a torus")
    o, e = G.origin, G.unit(0)
    return estimate(Disjoint(o, e), AveragedPairSampler(G, beta, o, e), cfg)
