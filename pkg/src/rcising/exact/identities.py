"""Exact checks of the random-current identities on small graphs."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ..currents import ParityState, explore_backbone
from ..events import Always, Connected, Disjoint, Event, FS, as_event
from ..lattice import Geometry, Graph, LatticeGraph
from .enumerate import (MAX_PAIR_EDGES, ZeroPartitionError, _smooth, event_grid, odd_sets, pair_event_prob,
                        pair_law, pair_sum, popcount, source_set, trace_law_prob, union_distribution)
from .spins import SpinEnsemble, spin_expectation


@dataclass(frozen=True)
class SwitchingReport:
    lhs: float
    rhs: float
    abs_diff: float
    graph: str
    S1: tuple[int, ...]
    S2: tuple[int, ...]
    event: str
    beta: float

    def ok(self, tol: float = 1e-10) -> bool:
        return self.abs_diff <= tol * max(1.0, abs(self.lhs))


def verify_switching(G: Graph, beta: float, S1: Iterable[int], S2: Iterable[int], F=None) -> SwitchingReport:
    """Both sides of the switching lemma for a parity/trace-measurable ``F``.

    lhs sums ``F(n1 + n2) w(n1) w(n2)`` over ``dn1 = S1, dn2 = S2``; rhs sums
    the same over ``dn1 = S1 ^ S2, dn2 = {}`` restricted to ``n1 + n2`` in
    ``F_{S2}``.
    """
    S1, S2 = frozenset(S1), frozenset(S2)
    for S in (S1, S2):
        if len(S) % 2:
            raise ValueError(f"source set must have even size, got {sorted(S)}")
    ev = Always() if F is None else as_event(F)
    lhs = pair_sum(G, beta, S1, S2, ev)
    rhs = pair_sum(G, beta, S1 ^ S2, (), ev, condition=FS(S2))
    return SwitchingReport(lhs, rhs, abs(lhs - rhs), G.name, tuple(sorted(S1)), tuple(sorted(S2)),
                           repr(ev), float(beta))


def switching_events(G: Graph) -> list[Event]:
    """The constant event, every pair connectivity and every ``F_{xy}``."""
    pairs = [(a, b) for a in range(G.n_vertices) for b in range(a + 1, G.n_vertices)]
    return [Always()] + [Connected(a, b) for a, b in pairs] + [FS(frozenset(p)) for p in pairs]


def switching_suite(G: Graph, beta: float, events: Iterable[Event] | None = None) -> list[SwitchingReport]:
    """Switching lemma for all source sets of size 0 or 2 and all ``events``.

    Each side is a sum over one joint (odd, trace) law, computed once per pair
    of source sets.
    """
    evs = switching_events(G) if events is None else [as_event(e) for e in events]
    grids = [event_grid(G, e) for e in evs]
    V = G.n_vertices
    sets = [frozenset()] + [frozenset((a, b)) for a in range(V) for b in range(a + 1, V)]
    fs = {S: event_grid(G, FS(S)) for S in sets}
    laws: dict[tuple[frozenset, frozenset], np.ndarray] = {}

    def law(a, b):
        key = (a, b)
        if key not in laws:
            laws[key] = pair_law(G, beta, a, b)
        return laws[key]

    out = []
    for S1 in sets:
        for S2 in sets:
            left, right = law(S1, S2), law(S1 ^ S2, frozenset())
            for ev, g in zip(evs, grids):
                lhs = math.fsum(left[g].tolist())
                rhs = math.fsum(right[g & fs[S2]].tolist())
                out.append(SwitchingReport(lhs, rhs, abs(lhs - rhs), G.name, tuple(sorted(S1)), tuple(sorted(S2)),
                                           repr(ev), float(beta)))
    return out


def two_replica_prob(G: Graph, beta: float, S1: Iterable[int], S2: Iterable[int], event: Event) -> float:
    """``P^{S1,S2}[event]``; joint parity enumeration when small, trace law otherwise."""
    if G.n_edges <= MAX_PAIR_EDGES:
        return pair_event_prob(G, beta, S1, S2, event)
    return trace_law_prob(G, beta, [S1, S2], event)


def ursell4(G: Graph, beta: float, x1: int, x2: int, x3: int, x4: int) -> float:
    return SpinEnsemble(G, beta).ursell4(x1, x2, x3, x4)


def ursell_representation_check(G: Graph, beta: float, o: int, y: int, u: int, v: int) -> tuple[float, float]:
    """``U4(o, y, u, v)`` from spin sums and ``-2 <o u><v y> P^{ou,vy}[u <-> v]``."""
    ens = SpinEnsemble(G, beta)
    lhs = ens.ursell4(o, y, u, v)
    g_ou, g_vy = ens.expectation((o, u)), ens.expectation((v, y))
    if g_ou == 0.0 or g_vy == 0.0:
        return lhs, 0.0
    p = two_replica_prob(G, beta, source_set(o, u), source_set(v, y), Connected(u, v))
    return lhs, -2.0 * g_ou * g_vy * p


def backbone_weights(G: Graph, beta: float, x: int, y: int) -> dict[tuple[tuple[int, int], ...], float]:
    """``rho(gamma) = <sigma_x sigma_y> P^{xy}[backbone = gamma]`` for every realized path.

    The backbone only reads parities, and the parity states sharing an odd
    set ``O`` carry total weight ``sinh^|O| cosh^(|E|-|O|)``; so
    ``rho(gamma)`` is the sum of ``tanh^|O|`` over odd sets with backbone
    ``gamma``, divided by the same sum over sourceless odd sets.
    """
    if x == y:
        raise ValueError("backbone endpoints must differ")
    t = math.tanh(beta)
    z0 = math.fsum((t ** popcount(odd_sets(G, ()))).tolist())
    m = G.n_edges
    shifts = np.arange(m, dtype=np.int64)
    acc: dict[tuple[tuple[int, int], ...], list[float]] = {}
    for o in odd_sets(G, (x, y)).tolist():
        odd = ((o >> shifts) & 1).astype(bool)
        bb = explore_backbone(ParityState.from_odd(G, odd), x, y)
        acc.setdefault(bb.steps, []).append(t ** int(odd.sum()))
    return {path: math.fsum(ws) / z0 for path, ws in sorted(acc.items())}


def decomposition_check(G: Graph, beta: float, x: int, y: int) -> tuple[float, float]:
    """(sum of backbone weights, two-point function from spin sums)."""
    rho = backbone_weights(G, beta, x, y)
    return math.fsum(rho.values()), spin_expectation(G, beta, (x, y))


def _passes(path: tuple[tuple[int, int], ...], u: int, v: int) -> bool:
    seq = (path[0][0],) + tuple(b for _, b in path)
    if u not in seq:
        return False
    return v in seq[seq.index(u):]


def chain_rule_probe(G: Graph, beta: float, x: int, y: int, u: int, v: int) -> tuple[float, float]:
    """(P^{xy}[backbone visits u, then v], <xu><uv><vy>/<xy>)."""
    ens = SpinEnsemble(G, beta)
    gxy = ens.expectation((x, y))
    rho = backbone_weights(G, beta, x, y)
    lhs = math.fsum(r for p, r in rho.items() if _passes(p, u, v)) / gxy
    bound = ens.expectation((x, u)) * ens.expectation((u, v)) * ens.expectation((v, y)) / gxy
    return lhs, bound


def chain_rule_excess(G: Graph, beta: float, x: int, y: int) -> float:
    """max over ordered ``u != v`` of ``P^{xy}[u then v] - <xu><uv><vy>/<xy>``; never positive when the bound holds."""
    ens = SpinEnsemble(G, beta)
    V = G.n_vertices
    g = np.array([[ens.expectation((a, b)) if a != b else 1.0 for b in range(V)] for a in range(V)])
    rho = backbone_weights(G, beta, x, y)
    worst = -math.inf
    for u in range(V):
        for v in range(V):
            if u == v:
                continue
            lhs = math.fsum(r for p, r in rho.items() if _passes(p, u, v)) / g[x, y]
            worst = max(worst, lhs - g[x, u] * g[u, v] * g[v, y] / g[x, y])
    return worst


@dataclass
class DerivativeReport:
    beta: float
    h: float
    chi: float
    fd: float
    fd_half: float
    richardson: float
    form1: float
    form3: float | None
    notes: list[str] = field(default_factory=list)

    @property
    def exact_rhs(self) -> float:
        return self.form1


def _inv_chi(G: Graph, beta: float, origin: int) -> float:
    return 1.0 / float(SpinEnsemble(G, beta).two_point(origin).sum())


def derivative_form1(G: Graph, beta: float, origin: int = 0) -> tuple[float, float]:
    """(chi, chi^-2 sum_y sum_edges <s_0 s_y; s_u s_v>) from spin sums."""
    ens = SpinEnsemble(G, beta)
    c = ens.configs
    spin = [1 - 2 * ((c >> v) & 1) for v in range(G.n_vertices)]
    m0 = spin[origin] * np.sum(spin, axis=0)
    energy = np.zeros_like(c)
    for a, b in G.edges:
        energy += spin[a] * spin[b]
    w = ens.w / ens.Z_scaled
    mean_m0 = math.fsum((w * m0).tolist())
    mean_h = math.fsum((w * energy).tolist())
    cov = math.fsum((w * (m0 - mean_m0) * (energy - mean_h)).tolist())
    return mean_m0, cov / mean_m0 ** 2


def derivative_form3(G: LatticeGraph, beta: float) -> float:
    """``2d/chi^2 sum_{x,y} <0x><e1 y> P^{0x,e1 y}[C(0) and C(e1) disjoint]``."""
    if not (isinstance(G, LatticeGraph) and G.geometry is Geometry.TORUS):
        raise ValueError("the two-current form of the derivative needs a torus")
    o, e1 = G.origin, G.unit(0)
    ens = SpinEnsemble(G, beta)
    g0 = ens.two_point(o)
    g1 = ens.two_point(e1)
    chi = float(g0.sum())
    ev = Disjoint(o, e1)
    V = G.n_vertices
    terms = []
    if G.n_edges <= MAX_PAIR_EDGES:
        for x in range(V):
            for y in range(V):
                p = pair_event_prob(G, beta, source_set(o, x), source_set(e1, y), ev)
                terms.append(g0[x] * g1[y] * p)
    else:
        q = 1.0 - math.cosh(beta) ** -2
        g = _smooth(ev.trace_vector(G), G.n_edges, q)
        for x in range(V):
            for y in range(V):
                dist = union_distribution(G, beta, [source_set(o, x), source_set(e1, y)])
                terms.append(g0[x] * g1[y] * math.fsum((dist * g).tolist()))
    return 2 * G.d * math.fsum(terms) / chi ** 2


def derivative_identity_probe(G: Graph, beta: float, h: float = 1e-4, origin: int | None = None,
                              with_form3: bool = True) -> DerivativeReport:
    """Central difference of ``-d(1/chi)/d beta`` against the exact forms."""
    is_torus = isinstance(G, LatticeGraph) and G.geometry is Geometry.TORUS
    if origin is None:
        origin = G.origin if isinstance(G, LatticeGraph) else 0
    fd = -(_inv_chi(G, beta + h, origin) - _inv_chi(G, beta - h, origin)) / (2 * h)
    h2 = h / 2
    fd2 = -(_inv_chi(G, beta + h2, origin) - _inv_chi(G, beta - h2, origin)) / (2 * h2)
    chi, f1 = derivative_form1(G, beta, origin)
    notes = []
    f3 = None
    if with_form3:
        if is_torus:
            f3 = derivative_form3(G, beta)
        else:
            notes.append("two-current form skipped: needs a torus")
    return DerivativeReport(float(beta), h, chi, fd, fd2, (4 * fd2 - fd) / 3, f1, f3, notes)


__all__ = [
    "SwitchingReport", "verify_switching", "switching_events", "switching_suite", "two_replica_prob", "ursell4", "ursell_representation_check",
    "backbone_weights", "decomposition_check", "chain_rule_probe", "chain_rule_excess", "DerivativeReport",
    "derivative_form1", "derivative_form3", "derivative_identity_probe", "ZeroPartitionError",
]
