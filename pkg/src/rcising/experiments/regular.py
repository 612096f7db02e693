"""Detector for (c, C)-regular dyadic scales of a two-point table.

Scale ``k`` means ``n = 2**k``. Norms are sup-norms throughout; the annulus
``Ann(n/2, 8n)`` is ``{x : n/2 < |x| <= 8n}``. For a candidate ``n``:

* P1  ``G(y) <= C G(x)`` for all ``x, y`` in the annulus;
* P2  ``|G(x) - G(y)| <= C |x - y| / |x| * G(x)`` for all ``x, y`` in the annulus;
* P3  ``chi_{2n} - chi_n >= c chi_n``;
* P4  ``G(y) <= G(x) / 2`` for ``x`` in ``Lambda_n`` and ``y`` outside ``Lambda_{Cn}``.

P4 only sees the ``y`` the table holds; when none lie beyond ``Lambda_{Cn}``
it holds vacuously, which keeps the detector monotone in ``C``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from .twopoint import TwoPointTable

@dataclass
class ScaleVerdict:
    k: int
    n: int
    checked: bool
    P1: bool | None = None
    P2: bool | None = None
    P3: bool | None = None
    P4: bool | None = None
    reasons: list[str] = field(default_factory=list)

    @property
    def regular(self) -> bool:
        return self.checked and all((self.P1, self.P2, self.P3, self.P4))


@dataclass
class RegularScales:
    verdicts: list[ScaleVerdict]
    c: float
    C: float

    @property
    def regular_ks(self) -> list[int]:
        return [v.k for v in self.verdicts if v.regular]

    def rows(self) -> list[tuple]:
        return [(v.k, v.n, v.checked, v.P1, v.P2, v.P3, v.P4, v.regular, "; ".join(v.reasons))
                for v in self.verdicts]


def _classes(t: TwoPointTable):
    keys = np.array(sorted(t.values), dtype=np.int64).reshape(-1, t.d)
    vals = np.array([t.values[tuple(k)] for k in keys.tolist()], dtype=np.float64)
    norms = keys[:, 0] if len(keys) else np.zeros(0, dtype=np.int64)
    return keys, vals, norms


def _p2(keys: np.ndarray, vals: np.ndarray, norms: np.ndarray, C: float) -> bool:
    # for canonical (sorted, nonnegative) keys the closest pair of orbit
    # representatives sits at sup-distance |a - b|_inf. A pair further apart
    # than span * |a| / (C G(a)) cannot fail, and the first coordinate bounds
    # that distance from below, so only a window of the sorted keys is scanned.
    if len(keys) < 2:
        return True
    order = np.lexsort(keys.T[::-1])
    keys, vals, norms = (np.ascontiguousarray(keys[order]), np.ascontiguousarray(vals[order], dtype=np.float64),
                         np.ascontiguousarray(norms[order]))
    span = float(vals.max() - vals.min())
    first = keys[:, 0]
    with np.errstate(divide="ignore"):
        reach = np.where(vals > 0, span * norms / (C * vals), np.inf)
    reach = np.minimum(reach, first.max() - first.min() + 1)
    lo = np.searchsorted(first, np.floor(first - reach), side="left").astype(np.int64)
    hi = np.searchsorted(first, np.ceil(first + reach), side="right").astype(np.int64)
    return bool(kernels.lipschitz_ok(keys, vals, norms.astype(np.int64), float(C), lo, hi))


def regular_scale_detect(t: TwoPointTable, chi_partials: dict[int, float] | None = None, c: float = 0.5,
                         C: float = 4.0, ks=None) -> RegularScales:
    """Evaluate P1-P4 at each candidate scale; candidates the table cannot
    decide are reported with ``checked=False`` and a reason."""
    keys, vals, norms = _classes(t)
    R = t.radius
    if ks is None:
        ks = range(0, max(0, int(math.log2(max(R, 1)))) + 1)
    chi = dict(chi_partials or {})

    def chi_at(r: int) -> float:
        if r not in chi:
            chi[r] = t.chi_partial(r)
        return chi[r]

    verdicts = []
    for k in ks:
        n = 2 ** k
        v = ScaleVerdict(k, n, False)
        verdicts.append(v)
        if 8 * n > R:
            v.reasons.append(f"table radius {R} < 8n = {8 * n}")
            continue
        if 2 * n > R and not (2 * n in chi and n in chi):
            v.reasons.append(f"no partial sum for chi_{2 * n}")
            continue
        v.checked = True
        ann = (norms > n / 2) & (norms <= 8 * n)
        ga = vals[ann]
        v.P1 = bool(ga.max() <= C * ga.min() * (1 + 1e-12))
        v.P2 = _p2(keys[ann], ga, norms[ann], C)
        cn, c2n = chi_at(n), chi_at(2 * n)
        v.P3 = bool(c2n - cn >= c * cn * (1 - 1e-12))
        inner = vals[norms <= n].min()
        outer = vals[norms > C * n]
        v.P4 = bool(len(outer) == 0 or outer.max() <= 0.5 * inner)
        for name in ("P1", "P2", "P3", "P4"):
            if not getattr(v, name):
                v.reasons.append(f"({name}) fails")
    return RegularScales(verdicts, c, C)
