"""Command-line entry points.

Every subcommand reads a ``RunConfig`` (``--config`` file, then flag
overrides), computes in worker processes when ``--threads`` allows, and
writes from the main process only: one or more CSV files, ``summary.txt``
and ``manifest.json`` in ``--out``.

Exit codes: 0 success (sampler diagnostics are flagged in the outputs),
1 unexpected failure, 2 invalid configuration, 3 problem too large for an
exact oracle.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .config import COMMANDS, ConfigError, RunConfig
from .events import FS, Always, Connected, Disjoint, EdgesOdd, EdgesOpen
from .exact import (FkSpec, OracleSizeError, ZeroPartitionError, chain_rule_excess, coupling_tv, decomposition_check,
                    current_event_prob, derivative_identity_probe, fk_exact, switching_suite)
from .experiments import (TwoPointTable, averaged_avoidance, avoidance_estimate, bubble_sums, chi_scan_and_fit,
                          constant_relation_report, iic_stabilization_scan, mixing_probe, regular_scale_detect)
from .lattice import Geometry, Graph, LatticeGraph, build_lattice, cycle_graph, load_corpus, path_graph
from .samplers import FkCouplingSampler, SamplerConfig, SwSampler, CurrentSampler, batch_means, estimate

COMMAND_HELP = {
    "verify-switching": ("Exact check of the switching lemma (moving a source pair between two currents) over "
                         "every source choice and connectivity / F_S event on a graph corpus.",
                         "graph,beta,n_checks,max_abs_diff,max_rel_diff"),
    "verify-coupling": ("Exact check that the sprinkled trace of a sourced current has the conditioned "
                        "FK-Ising law; total-variation distance per graph and source set.",
                        "graph,beta,sources,tv"),
    "verify-backbone": ("Exact backbone decomposition of the two-point function and the chain-rule bound for "
                        "backbones visiting two given vertices in order.",
                        "graph,beta,x,y,rho_sum,two_point,abs_diff,chain_max_excess"),
    "verify-derivative": ("Derivative of the inverse susceptibility: central difference against the covariance "
                          "form and the two-current disjointness form (torus).",
                          "beta,h,chi,fd,fd_half,richardson,form1,form3"),
    "sample-current": ("Worm + sprinkling estimate of an event under a sourced current; exact value when the "
                       "graph is small enough.", "event,estimate,se,n_samples,n_batches,exact"),
    "sample-fk": ("Edge marginals of the conditioned FK-Ising measure from the sprinkling coupling and, "
                  "without sources, from Swendsen-Wang.", "edge,u,v,coupling,coupling_se,sw,sw_se,exact"),
    "iic-scan": ("Local-event probabilities under currents from the origin to far points, with pairwise "
                 "deltas (incipient-infinite-cluster stabilization).", "x,prob,se,n_samples"),
    "chi-scan": ("Susceptibility on a torus below the configured critical point and the amplitude fit of "
                 "chi ~ A / (1 - beta/beta_c), with the Aizenman lower bound.", "beta,chi,chi_se,scaled"),
    "avoidance": ("Avoidance of the clusters of 0 and e1 under two currents, localized to boxes of radius k "
                  "and in the whole graph; on a torus without x, y the source-averaged version.",
                  "k,prob,se,n_samples"),
    "bubbles": ("Bubble and open-bubble partial sums from a two-point table.",
                "radius,B_partial,B_open_partial"),
    "mixing-probe": ("Decorrelation of an event near the origin from an event beyond Lambda_N under currents, "
                     "plus the source-swap deltas.", "n,N,quantity,delta,se"),
    "regular-scales": ("Detector for (c, C)-regular dyadic scales (annulus comparability, Lipschitz bound, "
                       "growth of partial susceptibilities, decay beyond Lambda_Cn).",
                       "k,n,checked,P1,P2,P3,P4,regular,reasons"),
    "report-constant": ("Consistency report between 1/A and 2 d beta_c times the avoidance probability, and "
                        "the open-bubble lower bound; report only.", "quantity,value,se"),
}

EVENT_HELP = ("events: always | origin-edge | all-odd | edge-open:P/Q | edge-odd:P/Q | connected:P/Q | "
              "disjoint:P/Q | fs:P/Q ; points are comma-separated coordinates on lattices and vertex "
              "indices on explicit graphs")


@dataclass
class Outcome:
    tables: list[tuple[str, list[str], list[tuple]]] = field(default_factory=list)
    summary: list[str] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)
    results: dict = field(default_factory=dict)


# ---------------------------------------------------------------- plumbing

def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".16e")
    return str(v)


def render_csv(header: list[str], rows: list[tuple]) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue().encode("utf-8")


@contextmanager
def _mapper(threads: int):
    if threads == 1:
        yield map
        return
    workers = (os.cpu_count() or 1) if threads == 0 else threads
    with ProcessPoolExecutor(max_workers=workers) as ex:
        yield ex.map


def _graph(cfg: RunConfig) -> Graph:
    if cfg.graph in ("box", "torus"):
        return build_lattice(cfg.d, cfg.size, Geometry.FREE_BOX if cfg.graph == "box" else Geometry.TORUS)
    if cfg.graph == "path":
        return path_graph(cfg.size)
    if cfg.graph == "cycle":
        return cycle_graph(cfg.size)
    graphs = _corpus(cfg)
    if len(graphs) != 1:
        raise ConfigError("label: name exactly one corpus graph")
    return graphs[0]


def _corpus(cfg: RunConfig) -> list[Graph]:
    graphs = load_corpus(cfg.corpus)
    if cfg.label is not None:
        graphs = [g for g in graphs if g.name == cfg.label]
        if not graphs:
            raise ConfigError(f"label: no corpus graph named {cfg.label!r}")
    if cfg.max_edges is not None:
        graphs = [g for g in graphs if g.n_edges <= cfg.max_edges]
    return graphs


def _graphs(cfg: RunConfig) -> list[Graph]:
    return _corpus(cfg) if cfg.graph == "corpus" else [_graph(cfg)]


def _point(G: Graph, p) -> int:
    p = tuple(int(c) for c in p)
    if isinstance(G, LatticeGraph):
        try:
            return G.index(p)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"point {p}: {exc.args[0] if exc.args else exc}") from None
    if len(p) != 1 or not 0 <= p[0] < G.n_vertices:
        raise ConfigError(f"point {p}: explicit graphs take one vertex index in [0, {G.n_vertices})")
    return p[0]


def _label(G: Graph, v: int) -> str:
    return " ".join(str(c) for c in G.coord(v)) if isinstance(G, LatticeGraph) else str(v)


def _anchor_edge(G: Graph) -> int:
    if isinstance(G, LatticeGraph):
        return G.edge_index(G.origin, G.unit(0))
    return G.edge_index(0, 1)


def parse_event(G: Graph, spec: str):
    spec = spec.strip()
    if spec == "always":
        return Always()
    if spec == "origin-edge":
        return EdgesOpen((_anchor_edge(G),))
    if spec == "all-odd":
        return EdgesOdd()
    kind, _, arg = spec.partition(":")
    pts = [_point(G, [int(c) for c in p.split(",")]) for p in arg.split("/") if p]
    try:
        if kind in ("edge-open", "edge-odd"):
            if len(pts) != 2 or not G.has_edge(*pts):
                raise ConfigError(f"event {spec!r}: needs the two endpoints of an edge")
            e = G.edge_index(*pts)
            return EdgesOpen((e,)) if kind == "edge-open" else EdgesOdd((e,))
        if kind in ("connected", "disjoint"):
            if len(pts) != 2:
                raise ConfigError(f"event {spec!r}: needs two points")
            return Connected(*pts) if kind == "connected" else Disjoint(*pts)
        if kind == "fs":
            return FS(frozenset(pts))
    except ValueError as exc:
        raise ConfigError(f"event {spec!r}: {exc}") from None
    raise ConfigError(f"event: unknown event {spec!r} ({EVENT_HELP})")


def _sampler_cfg(cfg: RunConfig, beta: float) -> SamplerConfig:
    return SamplerConfig(beta, sweeps=cfg.sweeps, burn_in=cfg.burn_in, thinning=cfg.thinning, seed=cfg.seed)


def _betas(cfg: RunConfig, default=()) -> list[float]:
    if cfg.betas:
        return list(cfg.betas)
    if cfg.beta_ratios:
        if cfg.beta_c is None:
            raise ConfigError("beta_c: required to use beta_ratios")
        return [r * cfg.beta_c for r in cfg.beta_ratios]
    if cfg.beta is not None:
        return [cfg.beta]
    return list(default)


def _flag(res, what: str, out: Outcome) -> None:
    for f in getattr(res, "flags", ()):
        out.diagnostics.append(f"{what}: {f}")


# ---------------------------------------------------------------- commands

def _switching_job(G: Graph, beta: float):
    reports = switching_suite(G, beta)
    worst_abs = max(r.abs_diff for r in reports)
    worst_rel = max(r.abs_diff / max(1.0, abs(r.lhs)) for r in reports)
    return (G.name, beta, len(reports), worst_abs, worst_rel)


def cmd_verify_switching(cfg, mapper) -> Outcome:
    jobs = [(G, b) for G in _graphs(cfg) for b in _betas(cfg, (0.25, 0.5, 1.0))]
    rows = list(mapper(_star_switching, jobs))
    out = Outcome()
    out.tables.append(("switching.csv", COMMAND_HELP["verify-switching"][1].split(","), rows))
    worst = max(r[4] for r in rows)
    out.summary.append(f"{sum(r[2] for r in rows)} checks on {len({r[0] for r in rows})} graphs; "
                       f"max |lhs - rhs| / max(1, |lhs|) = {worst:.3e}")
    out.results = {"max_rel_diff": worst, "n_checks": sum(r[2] for r in rows)}
    return out


def _star_switching(job):
    return _switching_job(*job)


def _coupling_job(job):
    G, beta = job
    rows = []
    V = G.n_vertices
    for S in [()] + [(a, b) for a in range(V) for b in range(a + 1, V)]:
        rows.append((G.name, beta, " ".join(map(str, S)), coupling_tv(G, beta, S)))
    return rows


def cmd_verify_coupling(cfg, mapper) -> Outcome:
    if cfg.max_edges is None and cfg.graph == "corpus":
        cfg.max_edges = 4
    jobs = [(G, b) for G in _graphs(cfg) for b in _betas(cfg, (0.25, 0.5, 1.0))]
    rows = [r for chunk in mapper(_coupling_job, jobs) for r in chunk]
    out = Outcome()
    out.tables.append(("coupling.csv", COMMAND_HELP["verify-coupling"][1].split(","), rows))
    worst = max(r[3] for r in rows)
    out.summary.append(f"{len(rows)} (graph, beta, S) cases; max total variation = {worst:.3e}")
    k2 = Graph(2, [(0, 1)], name="K2")
    spots = [(b, fk_exact(k2, FkSpec(b), EdgesOpen((0,))), math.tanh(b)) for b in _betas(cfg, (0.25, 0.5, 1.0))]
    for b, p, t in spots:
        out.summary.append(f"K2 at beta={b:g}: phi[edge open] = {p:.15f}, tanh(beta) = {t:.15f}")
    out.results = {"max_tv": worst, "k2_max_diff": max(abs(p - t) for _, p, t in spots)}
    return out


def _backbone_job(job):
    G, beta = job
    rows = []
    for x, y in combinations(range(G.n_vertices), 2):
        total, g = decomposition_check(G, beta, x, y)
        rows.append((G.name, beta, x, y, total, g, abs(total - g), chain_rule_excess(G, beta, x, y)))
    return rows


def cmd_verify_backbone(cfg, mapper) -> Outcome:
    if cfg.max_edges is None and cfg.graph == "corpus":
        cfg.max_edges = 6
    jobs = [(G, b) for G in _graphs(cfg) for b in _betas(cfg, (0.25, 0.5, 1.0))]
    rows = [r for chunk in mapper(_backbone_job, jobs) for r in chunk]
    out = Outcome()
    out.tables.append(("backbone.csv", COMMAND_HELP["verify-backbone"][1].split(","), rows))
    worst = max(r[6] for r in rows)
    excess = max(r[7] for r in rows)
    out.summary.append(f"{len(rows)} (graph, beta, x, y) cases; max |sum rho - <xy>| = {worst:.3e}; "
                       f"max chain-rule excess = {excess:.3e}")
    out.results = {"max_abs_diff": worst, "max_chain_excess": excess}
    return out


def cmd_verify_derivative(cfg, mapper) -> Outcome:
    G = _graph(cfg)
    r = derivative_identity_probe(G, cfg.beta, h=cfg.h)
    out = Outcome()
    out.tables.append(("derivative.csv", COMMAND_HELP["verify-derivative"][1].split(","),
                       [(r.beta, r.h, r.chi, r.fd, r.fd_half, r.richardson, r.form1, r.form3)]))
    out.summary.append(f"chi = {r.chi:.12g}; -d(1/chi)/dbeta: central difference {r.fd:.12g}, "
                       f"covariance form {r.form1:.12g}, two-current form "
                       f"{'n/a' if r.form3 is None else format(r.form3, '.12g')}")
    out.summary.extend(r.notes)
    out.results = {"fd_minus_form1": r.fd - r.form1,
                   "form1_minus_form3": None if r.form3 is None else r.form1 - r.form3}
    return out


def _sources(cfg: RunConfig, G: Graph) -> tuple[int, ...]:
    S = tuple(_point(G, p) for p in cfg.sources)
    if len(S) not in (0, 2):
        raise ConfigError("sources: give zero or two points")
    if len(S) == 2 and S[0] == S[1]:
        S = ()
    return S


def cmd_sample_current(cfg, mapper) -> Outcome:
    G = _graph(cfg)
    S = _sources(cfg, G)
    ev = parse_event(G, cfg.event)
    res = estimate(ev, CurrentSampler(G, cfg.beta, S), _sampler_cfg(cfg, cfg.beta))
    exact = None
    if G.n_edges <= 12:
        exact = current_event_prob(G, cfg.beta, S, ev)
    out = Outcome()
    out.tables.append(("sample_current.csv", COMMAND_HELP["sample-current"][1].split(","),
                       [(cfg.event, res.mean, res.std_error, res.n_samples, res.n_batches, exact)]))
    out.summary.append(f"P[{cfg.event}] = {res.mean:.6f} +- {res.std_error:.6f} ({res.n_samples} samples)"
                       + ("" if exact is None else f"; exact {exact:.6f}"))
    _flag(res, "sample-current", out)
    return out


def _marginals(sampler, scfg: SamplerConfig):
    rows = [o.copy() for _, o in sampler.draws(scfg)]
    arr = np.asarray(rows, dtype=np.float64)
    stats = [batch_means(arr[:, j]) for j in range(arr.shape[1])]
    return stats, len(rows)


def cmd_sample_fk(cfg, mapper) -> Outcome:
    G = _graph(cfg)
    S = _sources(cfg, G)
    scfg = _sampler_cfg(cfg, cfg.beta)
    coupling, n = _marginals(FkCouplingSampler(G, cfg.beta, S), scfg)
    sw = _marginals(SwSampler(G, cfg.beta), scfg)[0] if not S else [None] * G.n_edges
    exact = [None] * G.n_edges
    if G.n_edges <= 16:
        exact = [fk_exact(G, FkSpec(cfg.beta, S=frozenset(S)), EdgesOpen((e,))) for e in range(G.n_edges)]
    rows = []
    worst = 0.0
    for e, (a, b) in enumerate(G.edges):
        c, s = coupling[e], sw[e]
        rows.append((e, _label(G, a), _label(G, b), c[0], c[1], None if s is None else s[0],
                     None if s is None else s[1], exact[e]))
        if s is not None:
            worst = max(worst, abs(c[0] - s[0]) / math.hypot(c[1], s[1]) if math.hypot(c[1], s[1]) > 0 else 0.0)
    out = Outcome()
    out.tables.append(("sample_fk.csv", COMMAND_HELP["sample-fk"][1].split(","), rows))
    out.summary.append(f"{G.n_edges} edge marginals from {n} coupling draws"
                       + ("" if S else f"; max |coupling - SW| / se = {worst:.2f}"))
    if coupling and coupling[0][2] < 30:
        out.diagnostics.append(f"sample-fk: {coupling[0][2]} batches < 30")
    out.results = {"max_z_coupling_vs_sw": None if S else worst}
    return out


def cmd_iic_scan(cfg, mapper) -> Outcome:
    G = _graph(cfg)
    ev = parse_event(G, cfg.event)
    xs = [_point(G, p) for p in cfg.xs or cfg.sources]
    if not xs:
        raise ConfigError("xs: give the far sources")
    scan = iic_stabilization_scan(G, cfg.beta, ev, xs, _sampler_cfg(cfg, cfg.beta), mode=cfg.mode, map_fn=mapper)
    out = Outcome()
    out.tables.append(("iic.csv", ["x", "prob", "se", "n_samples"],
                       [(_label(G, r.x), r.prob, r.se, r.n_samples) for r in scan.rows]))
    out.tables.append(("iic_deltas.csv", ["x", "x2", "delta", "se"],
                       [(_label(G, d.x), _label(G, d.x2), d.delta, d.se) for d in scan.deltas]))
    for r in scan.rows:
        _flag(r.result, f"x={_label(G, r.x)}", out)
    for d in scan.deltas:
        out.summary.append(f"|P^(0,{_label(G, d.x)}) - P^(0,{_label(G, d.x2)})| = {d.delta:.5f} +- {d.se:.5f}")
    return out


def cmd_chi_scan(cfg, mapper) -> Outcome:
    if cfg.graph != "torus":
        raise ConfigError("graph: chi-scan runs on a torus")
    grid = _betas(cfg)
    res = chi_scan_and_fit(cfg.d, cfg.size, grid, cfg.beta_c, _sampler_cfg(cfg, grid[0]), source=cfg.chi_source,
                           map_fn=mapper)
    out = Outcome()
    out.tables.append(("chi_scan.csv", ["beta", "chi", "chi_se", "scaled"],
                       [(r.beta, r.chi, r.chi_se, r.scaled) for r in res.rows]))
    out.tables.append(("chi_fit.csv", ["A", "A_se", "A_lo", "A_hi", "aizenman_lower", "scaled_spread"],
                       [(res.A, res.A_se, res.A_ci[0], res.A_ci[1], res.aizenman_lower, res.scaled_spread)]))
    for r in res.rows:
        out.diagnostics.extend(f"beta={r.beta:.6g}: {w}" for w in r.warnings)
        if not r.aizenman_ok:
            out.summary.append(f"beta={r.beta:.6g}: scaled chi below the Aizenman lower bound beyond 3 se")
    out.diagnostics.extend(res.warnings)
    out.summary.append(f"A = {res.A:.6g} +- {res.A_se:.2g}; scaled spread {100 * res.scaled_spread:.2f}%; "
                       f"lower bound (2 d beta_c)^-1 = {res.aizenman_lower:.6g}")
    out.results = {"A": res.A, "A_se": res.A_se, "scaled_spread": res.scaled_spread,
                   "aizenman_ok": all(r.aizenman_ok for r in res.rows)}
    return out


def cmd_avoidance(cfg, mapper) -> Outcome:
    G = _graph(cfg)
    out = Outcome()
    if cfg.x is None and cfg.y is None:
        r = averaged_avoidance(G, cfg.beta, _sampler_cfg(cfg, cfg.beta))
        out.tables.append(("avoidance.csv", ["k", "prob", "se", "n_samples"],
                           [("averaged", r.mean, r.std_error, r.n_samples)]))
        out.summary.append(f"source-averaged avoidance = {r.mean:.5f} +- {r.std_error:.5f}")
        _flag(r, "avoidance", out)
        return out
    if cfg.x is None or cfg.y is None:
        raise ConfigError("x, y: give both far sources (or neither on a torus)")
    res = avoidance_estimate(G, cfg.beta, _point(G, cfg.x), _point(G, cfg.y), list(cfg.ks),
                             _sampler_cfg(cfg, cfg.beta))
    rows = [(k, r.mean, r.std_error, r.n_samples) for k, r in zip(res.ks, res.local)]
    rows.append(("full", res.full.mean, res.full.std_error, res.full.n_samples))
    out.tables.append(("avoidance.csv", ["k", "prob", "se", "n_samples"], rows))
    for k, gap, se in res.gaps():
        out.summary.append(f"P[A_{k}] - P[full] = {gap:.5f} +- {se:.5f}")
    out.summary.extend(res.notes)
    _flag(res.full, "avoidance", out)
    return out


def _table(cfg: RunConfig) -> TwoPointTable:
    src = cfg.table
    if src in ("worm", "exact"):
        G = _graph(cfg)
        if not isinstance(G, LatticeGraph):
            raise ConfigError("graph: two-point tables need a box or torus")
        if src == "exact":
            return TwoPointTable.from_exact(G, cfg.beta)
        return TwoPointTable.from_worm(G, cfg.beta, _sampler_cfg(cfg, cfg.beta))
    if src.startswith("power:") or src.startswith("const:"):
        kind, _, arg = src.partition(":")
        val = float(arg)
        if cfg.radius is None:
            raise ConfigError("radius: required by synthetic tables")
        f = (lambda x: max(x) ** -val) if kind == "power" else (lambda x: val)
        return TwoPointTable.from_function(f, cfg.d, cfg.radius)
    return read_table(src, cfg.d)


def read_table(path: str, d: int) -> TwoPointTable:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"table: {exc}") from None
    vals, ses = {}, {}
    for r in rows:
        k = tuple(int(c) for c in r["displacement"].split())
        vals[k] = float(r["value"])
        ses[k] = float(r["se"] or 0.0)
    return TwoPointTable(d, vals, ses)


def _table_rows(t: TwoPointTable) -> list[tuple]:
    return [(" ".join(map(str, k)), v, s) for k, v, s in t.rows()]


def cmd_bubbles(cfg, mapper) -> Outcome:
    t = _table(cfg)
    prof = bubble_sums(t)
    out = Outcome()
    out.tables.append(("bubbles.csv", ["radius", "B_partial", "B_open_partial"], prof.rows()))
    out.tables.append(("twopoint.csv", ["displacement", "value", "se"], _table_rows(t)))
    out.summary.append(f"B = {prof.total:.6g}, B_open = {prof.total_open:.6g} over Lambda_{prof.radii[-1]}")
    if not t.reliable:
        out.diagnostics.append(f"two-point table: {t.n_batches} batches < 30")
    out.results = {"B": prof.total, "B_open": prof.total_open, "radius": prof.radii[-1]}
    return out


def cmd_mixing_probe(cfg, mapper) -> Outcome:
    G = _graph(cfg)
    if cfg.far_event is None:
        raise ConfigError("far_event: required by mixing-probe")
    E, F = parse_event(G, cfg.event), parse_event(G, cfg.far_event)
    pts = lambda key: [_point(G, p) for p in getattr(cfg, key)]
    res = mixing_probe(G, cfg.beta, E, F, cfg.n, cfg.N, pts("xs"), pts("ys"), pts("ys_alt"),
                       pts("xs_alt") or None, cfg.currents, _sampler_cfg(cfg, cfg.beta))
    out = Outcome()
    out.tables.append(("mixing.csv", ["n", "N", "quantity", "delta", "se"],
                       [(res.n, res.N, q, v, s) for q, v, s in res.rows()]))
    out.summary.extend(f"{q}: {v:.5f} +- {s:.5f}" for q, v, s in res.rows())
    out.summary.append("trend probe only; no pass threshold")
    return out


def cmd_regular_scales(cfg, mapper) -> Outcome:
    t = _table(cfg)
    res = regular_scale_detect(t, None, cfg.c, cfg.C, list(cfg.ks) or None)
    out = Outcome()
    out.tables.append(("regular.csv", ["k", "n", "checked", "P1", "P2", "P3", "P4", "regular", "reasons"],
                       res.rows()))
    out.summary.append(f"regular scales k: {res.regular_ks or 'none'} (c={cfg.c:g}, C={cfg.C:g})")
    out.results = {"regular_ks": res.regular_ks}
    return out


def cmd_report_constant(cfg, mapper) -> Outcome:
    out = Outcome()
    B = chi = None
    if cfg.A is not None and cfg.P is not None and cfg.B_open is not None:
        A, A_se, P, P_se, Bo, Bo_se = cfg.A, cfg.A_se, cfg.P, cfg.P_se, cfg.B_open, cfg.B_open_se
        d = cfg.d
    else:
        if cfg.graph != "torus":
            raise ConfigError("graph: the report pipeline runs on a torus (or give A, P and B_open)")
        grid = _betas(cfg)
        if not grid:
            raise ConfigError("betas: the report pipeline needs betas or beta_ratios")
        scan = chi_scan_and_fit(cfg.d, cfg.size, grid, cfg.beta_c, _sampler_cfg(cfg, grid[0]), map_fn=mapper)
        A, A_se = scan.A, scan.A_se
        top = max(grid)
        G = _graph(cfg)
        # fresh replica ids so these chains do not reuse the scan's streams
        base = _sampler_cfg(cfg, top)
        pr = averaged_avoidance(G, top, base.with_(seed=(cfg.seed + 1) % 2 ** 64))
        t = TwoPointTable.from_worm(G, top, base.with_(seed=(cfg.seed + 2) % 2 ** 64))
        prof = bubble_sums(t)
        P, P_se = pr.mean, pr.std_error
        Bo, Bo_se = prof.total_open, prof.B_open_se[-1]
        B, chi = prof.total, t.chi
        d = cfg.d
        _flag(pr, "avoidance", out)
        for r in scan.rows:
            out.diagnostics.extend(f"beta={r.beta:.6g}: {w}" for w in r.warnings)
        out.summary.append(f"pipeline: A from the scan {grid}; P and bubbles at beta = {top:.8g}")
    rep = constant_relation_report(A, A_se, P, P_se, cfg.beta_c, d, Bo, Bo_se, B, chi)
    rows = rep.rows()
    if rep.finite_volume_bound is not None:
        rows.append(("finite_volume_bound", rep.finite_volume_bound, None))
    out.tables.append(("constant.csv", ["quantity", "value", "se"], rows))
    out.summary.append(f"1/A = {rep.inv_A:.5f} +- {rep.inv_A_se:.5f} vs 2 d beta_c P = {rep.rhs:.5f} +- "
                       f"{rep.rhs_se:.5f} (z = {rep.relation_z:.2f})")
    out.summary.append(f"P = {rep.P:.5f} +- {rep.P_se:.5f} vs open-bubble bound {rep.lower_bound:.5f}: "
                       f"{'VIOLATED beyond 3 sigma' if rep.bound_violated else 'not violated'}")
    out.summary.extend(rep.notes)
    out.results = {"bound_violated": rep.bound_violated, "relation_z": rep.relation_z, "bound_z": rep.bound_z}
    return out


COMMAND_FUNCS = {
    "verify-switching": cmd_verify_switching,
    "verify-coupling": cmd_verify_coupling,
    "verify-backbone": cmd_verify_backbone,
    "verify-derivative": cmd_verify_derivative,
    "sample-current": cmd_sample_current,
    "sample-fk": cmd_sample_fk,
    "iic-scan": cmd_iic_scan,
    "chi-scan": cmd_chi_scan,
    "avoidance": cmd_avoidance,
    "bubbles": cmd_bubbles,
    "mixing-probe": cmd_mixing_probe,
    "regular-scales": cmd_regular_scales,
    "report-constant": cmd_report_constant,
}


# ---------------------------------------------------------------- driver

def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def run(cfg: RunConfig, out_dir: str | os.PathLike) -> int:
    """Execute one configured command and write its artifacts; returns the exit status."""
    t0 = time.perf_counter()
    cfg.validate()
    with _mapper(cfg.threads) as mapper:
        outcome = COMMAND_FUNCS[cfg.command](cfg, mapper)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    hashes = {}
    for name, header, rows in outcome.tables:
        data = render_csv(header, rows)
        (out / name).write_bytes(data)
        hashes[name] = hashlib.sha256(data).hexdigest()
    lines = [f"{cfg.command} (seed {cfg.seed})"] + outcome.summary
    if outcome.diagnostics:
        lines.append("diagnostics:")
        lines.extend(f"  {d}" for d in outcome.diagnostics)
    (out / "summary.txt").write_bytes(("\n".join(lines) + "\n").encode("utf-8"))
    manifest = {
        "command": cfg.command,
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "versions": {"rcising": __version__, "numpy": np.__version__, "python": platform.python_version(),
                     "kernel_backend": kernels.backend_name()},
        "outputs": hashes,
        "results": _jsonable(outcome.results),
        "diagnostics": outcome.diagnostics,
        "wall_time_s": round(time.perf_counter() - t0, 3),
    }
    (out / "manifest.json").write_bytes((json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode("utf-8"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rcising", description="Random-current and FK-Ising verification tools.")
    p.add_argument("--version", action="version", version=f"rcising {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in COMMANDS:
        what, schema = COMMAND_HELP[name]
        sp = sub.add_parser(name, help=what.split(". ")[0].rstrip("."), description=what,
                            epilog=f"CSV columns: {schema}. {EVENT_HELP}.",
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        sp.add_argument("--config", metavar="PATH", help="key = value file or a manifest.json")
        sp.add_argument("--seed", metavar="U64", help="random seed")
        sp.add_argument("--out", metavar="DIR", default="out", help="output directory (default: out)")
        sp.add_argument("--threads", metavar="N", help="worker processes, 0 = all cores")
        for key in RunConfig.keys():
            if key in ("command", "seed", "threads"):
                continue
            f = RunConfig.__dataclass_fields__[key]
            sp.add_argument(f"--{key.replace('_', '-')}", dest=f"set_{key}", metavar=f.metadata["kind"].upper(),
                            help=f.metadata["help"])
    return p


_CORPUS_DEFAULT = ("verify-switching", "verify-coupling", "verify-backbone")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if cfg.command is not None and cfg.command != args.command:
        raise ConfigError(f"command: config is for {cfg.command!r}, not {args.command!r}")
    cfg.command = args.command
    explicit_graph = args.set_graph is not None or (args.config and cfg.graph != "box")
    if not explicit_graph and (args.set_corpus is not None or args.command in _CORPUS_DEFAULT):
        cfg.graph = "corpus"
    elif not explicit_graph and args.command == "chi-scan":
        cfg.graph = "torus"
    for key in RunConfig.keys():
        v = getattr(args, f"set_{key}", None)
        if v is not None:
            cfg.set(key, v)
    if args.seed is not None:
        cfg.set("seed", args.seed)
    if args.threads is not None:
        cfg.set("threads", args.threads)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        return run(cfg, args.out)
    except OracleSizeError as exc:
        print(f"rcising: oracle size limit: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ZeroPartitionError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"rcising: invalid configuration: {msg}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"rcising: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
