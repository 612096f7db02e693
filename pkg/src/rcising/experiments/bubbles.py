"""Bubble diagrams as radius profiles of partial sums, and the consistency report
relating the susceptibility amplitude to the avoidance probability."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .twopoint import TwoPointTable


@dataclass(frozen=True)
class BubbleProfile:
    radii: tuple[int, ...]
    B: tuple[float, ...]
    B_open: tuple[float, ...]
    B_se: tuple[float, ...] = ()
    B_open_se: tuple[float, ...] = ()

    @property
    def total(self) -> float:
        return self.B[-1]

    @property
    def total_open(self) -> float:
        return self.B_open[-1]

    def rows(self) -> list[tuple[int, float, float]]:
        return list(zip(self.radii, self.B, self.B_open))


def bubble_sums(t: TwoPointTable, max_radius: int | None = None) -> BubbleProfile:
    """Partial sums of ``G(x)^2`` and ``G(x) G(x - e1)`` over ``Lambda_r``.

    Rows run up to the last radius where every needed entry exists. Errors
    treat the entries as independent, which overstates nothing important
    for the use made of them here (an order of magnitude).
    """
    e1 = np.zeros(t.d, dtype=np.int64)
    e1[0] = 1
    if tuple(e1) not in t:
        raise KeyError("the open bubble needs the nearest-neighbour entry G(e1)")
    radii, B, Bo, Bse, Bose = [], [], [], [], []
    r = 0
    cap = t.periodic // 2 if t.periodic else None
    while max_radius is None or r <= max_radius:
        try:
            b = bo = vb = vbo = 0.0
            for p in t.points(r):
                g = t.lookup(p)
                g1 = t.lookup(p - e1)
                s = t.lookup_se(p)
                s1 = t.lookup_se(p - e1)
                b += float((g * g).sum())
                bo += float((g * g1).sum())
                vb += float(((2 * g * s) ** 2).sum())
                vbo += float(((g1 * s) ** 2 + (g * s1) ** 2).sum())
        except KeyError:
            break
        radii.append(r)
        B.append(b)
        Bo.append(bo)
        Bse.append(math.sqrt(vb))
        Bose.append(math.sqrt(vbo))
        if cap is not None and r >= cap:
            break
        r += 1
    if not radii:
        raise KeyError("the table does not cover Lambda_0 together with G(e1)")
    return BubbleProfile(tuple(radii), tuple(B), tuple(Bo), tuple(Bse), tuple(Bose))


@dataclass
class ConstantReport:
    """``1/A`` against ``2 d beta_c P`` and the open-bubble lower bound on ``P``."""

    A: float
    A_se: float
    P: float
    P_se: float
    beta_c: float
    d: int
    B_open: float
    B_open_se: float
    inv_A: float
    inv_A_se: float
    rhs: float
    rhs_se: float
    relation_z: float
    lower_bound: float
    lower_bound_se: float
    bound_margin: float
    bound_z: float
    bound_violated: bool
    finite_volume_bound: float | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def rows(self) -> list[tuple[str, float, float]]:
        return [("inv_A", self.inv_A, self.inv_A_se), ("2d_beta_c_P", self.rhs, self.rhs_se),
                ("P", self.P, self.P_se), ("lower_bound", self.lower_bound, self.lower_bound_se),
                ("B_open", self.B_open, self.B_open_se)]


def constant_relation_report(A: float, A_se: float, P: float, P_se: float, beta_c: float, d: int,
                             B_open: float, B_open_se: float = 0.0, B: float | None = None,
                             chi: float | None = None, sigmas: float = 3.0) -> ConstantReport:
    """Report only. The bound is flagged when ``P`` falls below it by more than
    ``sigmas`` combined standard errors. With ``B`` and ``chi`` it also lists the
    finite-volume form ``(1 - B/chi) / (1 + 2d beta_c B_open)``."""
    k = 2 * d * beta_c
    inv_A = 1.0 / A
    inv_A_se = A_se / A ** 2
    rhs, rhs_se = k * P, k * P_se
    comb = math.hypot(inv_A_se, rhs_se)
    z = (inv_A - rhs) / comb if comb > 0 else (0.0 if inv_A == rhs else math.copysign(math.inf, inv_A - rhs))
    den = 1.0 + k * B_open
    lb = 1.0 / den
    lb_se = k * B_open_se / den ** 2
    margin = P - lb
    comb_b = math.hypot(P_se, lb_se)
    bz = margin / comb_b if comb_b > 0 else (0.0 if margin >= 0 else -math.inf)
    violated = margin < -sigmas * comb_b if comb_b > 0 else margin < 0
    notes = []
    fv = None
    if B is not None and chi:
        fv = (1.0 - B / chi) * lb
    if violated:
        notes.append(f"lower bound violated by {-margin:.3g} (> {sigmas:g} sigma)")
    return ConstantReport(A, A_se, P, P_se, beta_c, d, B_open, B_open_se, inv_A, inv_A_se, rhs, rhs_se, z,
                          lb, lb_se, margin, bz, violated, fv, notes)
