"""Brute-force spin sums over ``{-1, +1}^V`` with free boundary."""
from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from ..lattice import Graph

MAX_SPIN_VERTICES = 22


class OracleSizeError(ValueError):
    """The requested exact computation exceeds the enumeration limit."""


class SpinEnsemble:
    """Boltzmann weights of every spin configuration of a small graph.

    Configuration ``c`` sets ``sigma_v = -1`` exactly when bit ``v`` of ``c``
    is set. Weights are shifted by the maximal energy so the largest is 1.
    """

    def __init__(self, G: Graph, beta: float):
        V = G.n_vertices
        if V > MAX_SPIN_VERTICES:
            raise OracleSizeError(
                f"spin sum over 2**{V} configurations; limit is {MAX_SPIN_VERTICES} vertices "
                "(use the current enumeration or a sampler)")
        self.graph = G
        self.beta = float(beta)
        configs = np.arange(1 << V, dtype=np.int64)
        # number of disagreeing edges per configuration
        bad = np.zeros(len(configs), dtype=np.int64)
        for a, b in G.edges:
            bad += ((configs >> a) ^ (configs >> b)) & 1
        # energy sum_e sigma_a sigma_b = |E| - 2 * bad
        self.log_w = -2.0 * self.beta * bad
        self.w = np.exp(self.log_w)
        self.Z_scaled = float(math.fsum(self.w))
        self.configs = configs

    @property
    def log_Z(self) -> float:
        return math.log(self.Z_scaled) + self.beta * self.graph.n_edges

    def expectation(self, S: Iterable[int]) -> float:
        mask = 0
        for s in S:
            mask ^= 1 << int(s)
        if mask == 0:
            return 1.0
        sign = 1 - 2 * (np.bitwise_count(self.configs & mask) & 1).astype(np.int64)
        return float(math.fsum(sign * self.w)) / self.Z_scaled

    def two_point(self, x: int) -> np.ndarray:
        """``<sigma_x sigma_v>`` for every vertex ``v``."""
        sx = 1 - 2 * ((self.configs >> x) & 1)
        out = np.empty(self.graph.n_vertices)
        for v in range(self.graph.n_vertices):
            sv = 1 - 2 * ((self.configs >> v) & 1)
            out[v] = float(math.fsum(sx * sv * self.w)) / self.Z_scaled
        return out

    def ursell4(self, x1: int, x2: int, x3: int, x4: int) -> float:
        e = self.expectation
        return (e((x1, x2, x3, x4)) - e((x1, x2)) * e((x3, x4))
                - e((x1, x3)) * e((x2, x4)) - e((x1, x4)) * e((x2, x3)))


def spin_expectation(G: Graph, beta: float, S: Iterable[int]) -> float:
    """``<sigma_S>`` at inverse temperature ``beta`` by direct summation."""
    S = list(S)
    mask = 0
    for s in S:
        mask ^= 1 << int(s)
    if bin(mask).count("1") % 2:
        raise ValueError(f"odd source set {sorted(S)}: the expectation vanishes by symmetry")
    return SpinEnsemble(G, beta).expectation(S)


def susceptibility(G: Graph, beta: float, origin: int = 0) -> float:
    return float(SpinEnsemble(G, beta).two_point(origin).sum())
