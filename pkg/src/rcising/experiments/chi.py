"""Susceptibility scans below a configured critical point and the amplitude fit."""
from __future__ import annotations

import math
from functools import partial
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..exact.spins import SpinEnsemble
from ..lattice import Geometry, LatticeGraph, build_lattice
from ..samplers import MIN_BATCHES, PURPOSE_SW, SamplerConfig, batch_means, make_stream
from .. import kernels
from .twopoint import TwoPointTable

# literature estimates for the nearest-neighbour model; external, unverified here
BETA_C_EXTERNAL = {3: 0.221654626, 5: 0.11391498}


@dataclass
class ScanRow:
    beta: float
    chi: float
    chi_se: float
    scaled: float
    scaled_se: float
    n_batches: int | None = None
    converged: bool = True
    xi: float | None = None
    aizenman_ok: bool = True
    warnings: list[str] = field(default_factory=list)


@dataclass
class ScanResult:
    rows: list[ScanRow]
    beta_c: float
    d: int
    L: int | None
    A: float
    A_se: float
    A_ci: tuple[float, float]
    residuals: list[float]
    aizenman_lower: float
    warnings: list[str] = field(default_factory=list)

    @property
    def scaled_spread(self) -> float:
        """max/min - 1 of the scaled values over converged rows."""
        s = [r.scaled for r in self.rows if r.converged]
        return max(s) / min(s) - 1 if s else math.nan

    def to_dict(self) -> dict:
        return asdict(self)


def fit_amplitude(betas: Sequence[float], chis: Sequence[float], beta_c: float,
                  ses: Sequence[float] | None = None) -> tuple[float, float, list[float]]:
    """Fit ``1/chi = s (1 - beta/beta_c)`` through the origin; ``A = 1/s``.

    Weighted by the propagated variance of ``1/chi`` when every row has a
    positive error, unweighted otherwise. Returns (A, se of A, residuals).
    """
    x = 1.0 - np.asarray(betas, dtype=np.float64) / beta_c
    y = 1.0 / np.asarray(chis, dtype=np.float64)
    n = len(x)
    if n == 0:
        raise ValueError("nothing to fit")
    if ses is not None and all(s > 0 for s in ses):
        sy = np.asarray(ses, dtype=np.float64) * y ** 2
        w = 1.0 / sy ** 2
    else:
        w = np.ones(n)
    sxx = float(np.sum(w * x * x))
    s = float(np.sum(w * x * y)) / sxx
    resid = y - s * x
    if ses is not None and all(v > 0 for v in ses):
        s_se = math.sqrt(1.0 / sxx)
    elif n > 1:
        s_se = math.sqrt(float(np.sum(w * resid ** 2)) / (n - 1) / sxx)
    else:
        s_se = 0.0
    return 1.0 / s, s_se / s ** 2, resid.tolist()


def _sw_chi(G: LatticeGraph, beta: float, cfg: SamplerConfig, replica: int) -> tuple[float, float, int]:
    """Mean cluster size of the origin under Swendsen-Wang, i.e. ``sum_x phi[0 <-> x]``."""
    stream = make_stream(cfg.seed, replica, PURPOSE_SW)
    spins = np.ones(G.n_vertices, dtype=np.int8)
    open_ = np.zeros(G.n_edges, dtype=np.uint8)
    labels = np.empty(G.n_vertices, dtype=np.int64)
    p = -math.expm1(-2 * beta)
    o = G.origin
    burn = cfg.resolved_burn_in(G)
    sizes = []
    for k in range(cfg.sweeps):
        kernels.sw_sweep(spins, G.edge_u, G.edge_v, p, stream, open_, labels)
        if k >= burn and (k - burn + 1) % cfg.thinning == 0:
            sizes.append(int(np.count_nonzero(labels == labels[o])))
    mean, se, nb, _ = batch_means(sizes)
    return mean, se, nb


def _scan_row(d, L, beta_c, cfg, source, item) -> ScanRow:
    i, b = item
    warn = []
    nb, xi = None, None
    if callable(source):
        chi, se = source(b)
    else:
        G = build_lattice(d, L, Geometry.TORUS)
        if source == "exact":
            chi, se = float(SpinEnsemble(G, b).two_point(G.origin).sum()), 0.0
        elif source == "sw":
            chi, se, nb = _sw_chi(G, b, cfg, i)
        else:
            t = TwoPointTable.from_worm(G, b, cfg, replica=i)
            chi, se, nb = t.chi, t.chi_se, t.n_batches
            xi = t.second_moment_length()
            if xi > L / 4:
                warn.append(f"finite-size: second-moment correlation length {xi:.3g} > L/4")
    converged = nb is None or nb >= MIN_BATCHES
    if not converged:
        warn.append(f"unreliable: {nb} batches < {MIN_BATCHES}")
    f = 1.0 - b / beta_c
    return ScanRow(b, float(chi), float(se), f * chi, f * se, nb, converged, xi, True, warn)


def chi_scan_and_fit(d: int, L: int, beta_grid: Sequence[float], beta_c: float, cfg: SamplerConfig | None = None,
                     source: str | Callable[[float], tuple[float, float]] = "worm", map_fn=map) -> ScanResult:
    """Estimate ``chi(beta)`` on the ``d``-dimensional torus of side ``L`` for each
    grid point and fit the amplitude.

    ``source`` is ``'worm'`` (pinned worm), ``'sw'`` (Swendsen-Wang cluster of
    the origin), ``'exact'`` (spin enumeration) or a callable
    ``beta -> (chi, se)`` for synthetic data. Grid points are independent
    jobs (replica ``i`` for the ``i``-th point) dispatched through ``map_fn``.
    """
    if not beta_c > 0:
        raise ValueError("beta_c must be positive")
    grid = [float(b) for b in beta_grid]
    if not grid:
        raise ValueError("empty beta grid")
    for b in grid:
        if not 0 <= b < beta_c:
            raise ValueError(f"grid point {b} is not strictly below beta_c = {beta_c}")
    if not callable(source) and source not in ("worm", "sw", "exact"):
        raise ValueError(f"unknown susceptibility source {source!r}")
    if source in ("worm", "sw") and cfg is None:
        raise ValueError("Monte Carlo sources need a sampler config")
    job = partial(_scan_row, d, L, beta_c, cfg, source)
    rows = list(map_fn(job, list(enumerate(grid))))
    lower = 1.0 / (2 * d * beta_c)
    for r in rows:
        r.aizenman_ok = lower <= r.scaled + 3 * r.scaled_se
    use = [r for r in rows if r.converged]
    warnings = []
    if use:
        A, A_se, resid = fit_amplitude([r.beta for r in use], [r.chi for r in use], beta_c,
                                       [r.chi_se for r in use])
    else:
        A, A_se, resid = math.nan, math.nan, []
        warnings.append("no converged rows; amplitude not fitted")
    ci = (A - 1.959963984540054 * A_se, A + 1.959963984540054 * A_se)
    return ScanResult(rows, beta_c, d, L, A, A_se, ci, resid, lower, warnings)
