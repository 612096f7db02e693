"""Tables of the two-point function indexed by displacement.

Values are stored per symmetry class of displacements (sorted absolute
coordinates), so a lookup of any ``x`` goes through ``canonical(x)``. On a
torus the table is periodic and lookups wrap around.
"""
from __future__ import annotations

import math
from itertools import combinations_with_replacement
from typing import Callable, Iterator

import numpy as np

from ..exact.spins import SpinEnsemble
from ..lattice import Geometry, LatticeGraph
from ..samplers import SamplerConfig, ratio_batch_means, worm_two_point_batches, MIN_BATCHES


def canonical(x, periodic: int | None = None) -> tuple[int, ...]:
    a = np.asarray(x, dtype=np.int64)
    if periodic:
        a = np.mod(a, periodic)
        a = np.minimum(a, periodic - a)
    else:
        a = np.abs(a)
    return tuple(int(v) for v in sorted(a.tolist(), reverse=True))


def _canonical_rows(pts: np.ndarray, periodic: int | None) -> np.ndarray:
    if periodic:
        a = np.mod(pts, periodic)
        a = np.minimum(a, periodic - a)
    else:
        a = np.abs(pts)
    return -np.sort(-a, axis=1)


class TwoPointTable:
    """``x -> <sigma_0 sigma_x>`` with standard errors, stored by symmetry class.

    ``radius`` is the largest ``r`` such that every class inside ``Lambda_r``
    is present. ``chi`` and ``chi_se`` hold the full-volume susceptibility
    when the table was measured on a graph.
    """

    def __init__(self, d: int, values: dict, ses: dict | None = None, beta: float = math.nan,
                 lattice: dict | None = None, periodic: int | None = None):
        self.d = int(d)
        self.beta = float(beta)
        self.lattice = dict(lattice or {})
        self.periodic = periodic
        self.values: dict[tuple[int, ...], float] = {}
        self.ses: dict[tuple[int, ...], float] = {}
        for k, v in values.items():
            key = canonical(k, periodic)
            if len(key) != self.d:
                raise ValueError(f"displacement {k} is not {self.d}-dimensional")
            self.values[key] = float(v)
            self.ses[key] = float((ses or {}).get(k, 0.0))
        self.chi: float | None = None
        self.chi_se: float | None = None
        self.n_batches: int | None = None
        keys = sorted(self.values)
        self._base = (max((k[0] for k in keys), default=0) + 2)
        self._codes = np.array([self._code(k) for k in keys], dtype=np.int64)
        order = np.argsort(self._codes)
        self._codes = self._codes[order]
        self._vals = np.array([self.values[k] for k in keys], dtype=np.float64)[order]
        self._ses = np.array([self.ses[k] for k in keys], dtype=np.float64)[order]
        self.radius = self._coverage()

    def _code(self, key) -> int:
        c = 0
        for a in key:
            c = c * self._base + int(a)
        return c

    def _coverage(self) -> int:
        cap = self.periodic // 2 if self.periodic else None
        r = -1
        while cap is None or r < cap:
            need = math.comb(r + 1 + self.d, self.d)
            have = sum(1 for k in self.values if k[0] <= r + 1)
            if have < need:
                break
            r += 1
        return r

    def __contains__(self, x) -> bool:
        return canonical(x, self.periodic) in self.values

    def get(self, x) -> float:
        key = canonical(x, self.periodic)
        try:
            return self.values[key]
        except KeyError:
            raise KeyError(f"no entry for displacement {tuple(x)}") from None

    def se(self, x) -> float:
        return self.ses[canonical(x, self.periodic)]

    def lookup(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized ``get`` over rows of ``pts``; raises KeyError when any is missing."""
        return self._vals[self._positions(pts)]

    def lookup_se(self, pts: np.ndarray) -> np.ndarray:
        return self._ses[self._positions(pts)]

    def _positions(self, pts: np.ndarray) -> np.ndarray:
        a = _canonical_rows(np.asarray(pts, dtype=np.int64), self.periodic)
        if a.size and a.max() >= self._base:
            raise KeyError("displacement outside the table")
        codes = np.zeros(len(a), dtype=np.int64)
        for j in range(self.d):
            codes = codes * self._base + a[:, j]
        pos = np.searchsorted(self._codes, codes)
        pos = np.minimum(pos, len(self._codes) - 1)
        if len(self._codes) == 0 or np.any(self._codes[pos] != codes):
            raise KeyError("displacement outside the table")
        return pos

    def points(self, r: int) -> Iterator[np.ndarray]:
        """Displacements in ``Lambda_r`` in chunks; each torus vertex appears once."""
        if self.periodic:
            L = self.periodic
            lo, hi = max(-r, -((L - 1) // 2)), min(r, L // 2)
        else:
            lo, hi = -r, r
        axis = np.arange(lo, hi + 1, dtype=np.int64)
        if self.d == 1:
            yield axis[:, None]
            return
        rest = np.stack(np.meshgrid(*([axis] * (self.d - 1)), indexing="ij"), axis=-1).reshape(-1, self.d - 1)
        for first in axis:
            yield np.column_stack([np.full(len(rest), first), rest])

    def chi_partial(self, r: int) -> float:
        """``sum_{x in Lambda_r} <sigma_0 sigma_x>``."""
        self._check_radius(r)
        return math.fsum(float(self.lookup(p).sum()) for p in self.points(r))

    def chi_partials(self, radii=None) -> dict[int, float]:
        radii = range(self.radius + 1) if radii is None else radii
        return {int(r): self.chi_partial(r) for r in radii}

    def _check_radius(self, r: int) -> None:
        if r > self.radius:
            raise ValueError(f"table covers Lambda_{self.radius}, not Lambda_{r}")

    def rows(self) -> list[tuple[tuple[int, ...], float, float]]:
        return [(k, self.values[k], self.ses[k]) for k in sorted(self.values)]

    @classmethod
    def from_function(cls, f: Callable[[tuple[int, ...]], float], d: int, R: int, beta: float = math.nan,
                      periodic: int | None = None) -> "TwoPointTable":
        """Synthetic table ``x -> f(x)`` over ``Lambda_R`` with the origin forced to 1."""
        vals = {}
        for comb in combinations_with_replacement(range(R, -1, -1), d):
            key = tuple(comb)
            vals[key] = 1.0 if not any(key) else float(f(key))
        return cls(d, vals, beta=beta, lattice={"synthetic": True, "R": R}, periodic=periodic)

    @classmethod
    def from_vertex_values(cls, G: LatticeGraph, values: np.ndarray, ses: np.ndarray | None = None,
                           beta: float = math.nan) -> "TwoPointTable":
        """Orbit-average per-vertex values measured from the lattice origin."""
        periodic = G.side if G.geometry is Geometry.TORUS else None
        disp = G.displacements
        keys = _canonical_rows(disp, periodic)
        groups: dict[tuple[int, ...], list[int]] = {}
        for v, k in enumerate(map(tuple, keys.tolist())):
            groups.setdefault(k, []).append(v)
        vals, errs = {}, {}
        for k, idx in groups.items():
            vals[k] = float(np.mean(values[idx]))
            errs[k] = float(np.mean(ses[idx])) if ses is not None else 0.0
        if G.geometry is Geometry.FREE_BOX:
            vals = {k: v for k, v in vals.items() if k[0] <= G.size}
        return cls(G.d, vals, errs, beta=beta, lattice=G.descriptor(), periodic=periodic)

    @classmethod
    def from_worm(cls, G: LatticeGraph, beta: float, cfg: SamplerConfig, replica: int = 0) -> "TwoPointTable":
        """Head histogram of a worm pinned at the origin, normalized by its visits to the origin."""
        o = G.origin
        hist, acc = worm_two_point_batches(G, beta, o, cfg, replica)
        den = hist[:, o].astype(np.float64)
        if den.sum() == 0:
            raise RuntimeError("the worm never closed; increase sweeps")
        g, g_se = ratio_batch_means(hist, den)
        chi, chi_se = ratio_batch_means(hist.sum(axis=1), den)
        t = cls.from_vertex_values(G, g, g_se, beta)
        t.chi, t.chi_se = float(chi), float(np.atleast_1d(chi_se)[0])
        t.n_batches = len(den)
        t.acceptance_rate = acc
        return t

    @classmethod
    def from_exact(cls, G: LatticeGraph, beta: float) -> "TwoPointTable":
        g = SpinEnsemble(G, beta).two_point(G.origin)
        t = cls.from_vertex_values(G, g, None, beta)
        t.chi, t.chi_se = float(g.sum()), 0.0
        return t

    @property
    def reliable(self) -> bool:
        return self.n_batches is None or self.n_batches >= MIN_BATCHES

    def second_moment_length(self) -> float:
        """``sqrt(sum |x|^2 G(x) / (2d chi))`` over the covered region."""
        r = self.radius
        m2 = tot = 0.0
        for p in self.points(r):
            g = self.lookup(p)
            m2 += float((g * (p * p).sum(axis=1)).sum())
            tot += float(g.sum())
        return math.sqrt(m2 / (2 * self.d * tot)) if tot > 0 else 0.0
