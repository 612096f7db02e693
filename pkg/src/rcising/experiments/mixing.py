"""Empirical probe of decorrelation between a local and a far event under currents.

Events are evaluated on the summed current (parities add mod 2, traces take
the union). A source pair ``(x, x)`` stands for a sourceless current.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..events import as_event
from ..lattice import LatticeGraph, Region, region_vertices
from ..samplers import MultiCurrentSampler, SamplerConfig, batch_means


@dataclass(frozen=True)
class MixingDeltas:
    n: int
    N: int
    cov: float
    cov_se: float
    swap_far: float
    swap_far_se: float
    swap_near: float
    swap_near_se: float
    p_E: float
    p_F: float
    n_samples: int

    def rows(self) -> list[tuple[str, float, float]]:
        return [("covariance", self.cov, self.cov_se), ("swap_far", self.swap_far, self.swap_far_se),
                ("swap_near", self.swap_near, self.swap_near_se)]


def _source_sets(pairs, s: int) -> list[tuple[int, ...]]:
    out = [(() if a == b else (int(a), int(b))) for a, b in pairs]
    if len(out) > s:
        raise ValueError("more source pairs than currents")
    return out + [()] * (s - len(out))


def _support_vertices(G, ev) -> set[int]:
    sup = ev.support(G)
    if sup is None:
        raise ValueError("mixing events must declare their edge support")
    return {int(v) for e in sup.tolist() for v in G.edges[e]}


def _run(G, beta, sets, events, cfg, offset):
    sampler = MultiCurrentSampler(G, beta, sets, replica_offset=offset)
    support = np.unique(np.concatenate([ev.support(G) for ev in events]))
    vals = [[ev.test(G, odd, open_) for ev in events] for odd, open_ in sampler.draws(cfg, support)]
    return np.asarray(vals, dtype=np.float64).reshape(-1, len(events))


def _diff(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    ma, sa, _, _ = batch_means(a)
    mb, sb, _, _ = batch_means(b)
    return abs(ma - mb), math.hypot(sa, sb)


def mixing_probe(G: LatticeGraph, beta: float, E, F, n: int, N: int, xs: Sequence[int], ys: Sequence[int],
                 ys_alt: Sequence[int], xs_alt: Sequence[int] | None = None, s: int | None = None,
                 cfg: SamplerConfig | None = None) -> MixingDeltas:
    """Three deltas for currents with sources ``x_i y_i`` (then empty up to ``s``):

    * ``|P[E and F] - P[E] P[F]|``;
    * ``|P^{xy}[E] - P^{xy'}[E]|`` (far endpoints moved);
    * ``|P^{xy}[F] - P^{x'y}[F]|`` (near endpoints moved).

    ``E`` must live on edges inside ``Lambda_n`` and ``F`` on edges outside
    ``Lambda_N``; ``x_i`` in ``Lambda_n`` and ``y_i`` outside ``Lambda_N``.
    """
    if cfg is None:
        raise ValueError("a sampler config is required")
    if not 0 <= n < N:
        raise ValueError("need 0 <= n < N")
    E, F = as_event(E), as_event(F)
    inner = set(region_vertices(G, Region.box(n)).tolist())
    big = set(region_vertices(G, Region.box(N)).tolist())
    vE, vF = _support_vertices(G, E), _support_vertices(G, F)
    if vE & vF:
        raise ValueError("the supports of E and F overlap")
    if not vE <= inner:
        raise ValueError("E must depend only on edges inside Lambda_n")
    if vF & big:
        raise ValueError("F must depend only on edges outside Lambda_N")
    xs_alt = list(xs) if xs_alt is None else list(xs_alt)
    if not (len(xs) == len(ys) == len(ys_alt) == len(xs_alt)):
        raise ValueError("source lists must have equal lengths")
    s = max(1, len(xs)) if s is None else s
    pairs = list(zip(xs, ys))
    for a, b in pairs + list(zip(xs, ys_alt)) + list(zip(xs_alt, ys)):
        if a == b:
            continue
        if a not in inner or b in big:
            raise ValueError(f"sources ({a}, {b}) must have x in Lambda_n and y outside Lambda_N")
    if beta == 0 and any(a != b for a, b in pairs):
        raise ValueError("at beta = 0 only sourceless currents exist")
    base = _run(G, beta, _source_sets(pairs, s), [E, F], cfg, 0)
    pE, pF = float(base[:, 0].mean()), float(base[:, 1].mean())
    cov_series = (base[:, 0] - pE) * (base[:, 1] - pF)
    cov, cov_se, _, _ = batch_means(cov_series)
    far = _run(G, beta, _source_sets(list(zip(xs, ys_alt)), s), [E], cfg, s)
    near = _run(G, beta, _source_sets(list(zip(xs_alt, ys)), s), [F], cfg, 2 * s)
    d2, d2_se = _diff(base[:, 0], far[:, 0])
    d3, d3_se = _diff(base[:, 1], near[:, 0])
    return MixingDeltas(n, N, abs(cov), cov_se, d2, d2_se, d3, d3_se, pE, pF, len(base))
