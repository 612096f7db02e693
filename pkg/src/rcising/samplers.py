"""Monte Carlo samplers for currents and FK-Ising configurations.

The worm chain lives on pairs ``(X, head)`` where ``X`` is the set of odd
edges and ``dX = {tail, head}`` (empty when they coincide); its stationary
weight is ``tanh(beta)**|X|``. Restricted to the configurations with
``dX = S`` this is exactly the parity law of a current with sources ``S``.
The chain observed only at those times is again a Markov chain with the
restricted law as stationary measure, so every sector visit is a valid
(correlated) sample. Even edges of a worm sample are left unresolved; the
sprinkling step turns them into a trace.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import kernels
from .currents import BondConfig, ParityState
from .events import Event, as_event
from .exact.enumerate import ZeroPartitionError
from .lattice import Graph

PURPOSE_WORM = 0
PURPOSE_SPRINKLE = 1
PURPOSE_FK = 2
PURPOSE_SW = 3

MIN_BATCHES = 30

_EMPTY_I64 = np.zeros(0, dtype=np.int64)


def make_stream(seed: int, replica: int = 0, purpose: int = PURPOSE_WORM):
    """Independent uniform stream keyed by ``(seed, replica, purpose)``."""
    bg = np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(replica), int(purpose))))
    return kernels.make_stream(bg)


@dataclass(frozen=True)
class SamplerConfig:
    """Run lengths in sweeps of ``|V|`` elementary moves.

    ``burn_in`` sweeps are discarded; the remaining ``sweeps - burn_in``
    sweeps produce samples, of which every ``thinning``-th is kept. For worm
    samplers a sample is a visit to the source sector, so the sample count is
    itself random. ``burn_in=None`` means ten times the graph diameter.
    """

    beta: float
    sources: tuple[frozenset[int], ...] = (frozenset(),)
    sweeps: int = 10_000
    burn_in: int | None = None
    thinning: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(frozenset(int(v) for v in S) for S in self.sources))
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.burn_in is not None and not (0 <= self.burn_in < self.sweeps):
            raise ValueError(f"need sweeps > burn_in >= 0 (sweeps={self.sweeps}, burn_in={self.burn_in})")
        if self.sweeps < 1:
            raise ValueError("sweeps must be positive")
        for S in self.sources:
            if len(S) % 2:
                raise ValueError(f"source set must have even size, got {sorted(S)}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def resolved_burn_in(self, G: Graph) -> int:
        b = 10 * G.diameter if self.burn_in is None else self.burn_in
        if b >= self.sweeps:
            raise ValueError(f"burn-in of {b} sweeps leaves no samples (sweeps={self.sweeps})")
        return b

    def with_(self, **kw) -> "SamplerConfig":
        d = asdict(self)
        d.update(kw)
        return SamplerConfig(**d)


@dataclass(frozen=True)
class EstimateResult:
    mean: float
    std_error: float
    n_samples: int
    n_batches: int
    seed: int
    acceptance_rate: float | None = None
    tau_int: float | None = None
    flags: tuple[str, ...] = ()

    @property
    def reliable(self) -> bool:
        return not self.flags

    def to_dict(self) -> dict:
        return asdict(self)


def batch_means(values: Sequence[float]) -> tuple[float, float, int, float | None]:
    """(mean, batch-means standard error, number of batches, integrated autocorrelation time).

    Batches have ``floor(sqrt(n))`` samples; a trailing partial batch is
    dropped from the error estimate but kept in the mean.
    """
    x = np.asarray(values, dtype=np.float64)
    n = len(x)
    if n == 0:
        return math.nan, math.nan, 0, None
    mean = float(x.mean())
    b = max(1, math.isqrt(n))
    nb = n // b
    if nb < 2:
        return mean, math.nan, nb, None
    bm = x[: nb * b].reshape(nb, b).mean(axis=1)
    se = float(bm.std(ddof=1) / math.sqrt(nb))
    naive = float(x[: nb * b].std(ddof=1) / math.sqrt(nb * b))
    tau = 0.5 * (se / naive) ** 2 if naive > 0 else 0.5
    return mean, se, nb, tau


def ratio_batch_means(num: np.ndarray, den: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ratio ``sum(num) / sum(den)`` over batches (rows) with delta-method errors.

    ``num`` may be 2-D (batches x quantities); ``den`` is 1-D.
    """
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    nb = len(den)
    r = num.sum(axis=0) / den.sum()
    if nb < 2:
        return r, np.full_like(np.atleast_1d(r), math.nan)
    resid = num - np.multiply.outer(den, r) if num.ndim == 2 else num - den * r
    se = resid.std(axis=0, ddof=1) / math.sqrt(nb) / den.mean()
    return r, se


def _flags(n_batches: int) -> tuple[str, ...]:
    if n_batches < MIN_BATCHES:
        return (f"unreliable: {n_batches} batches < {MIN_BATCHES}",)
    return ()


class WormChain:
    """Worm Markov chain on a graph.

    With two sources ``{x, y}`` the tail is pinned at ``x`` and the sector is
    ``head == y``. With no sources the chain is unpinned (tail and head jump
    together to a uniform vertex when the worm is closed) and the sector is
    ``head == tail``; ``pinned_at`` pins the tail instead.
    """

    def __init__(self, G: Graph, beta: float, S: Iterable[int] = (), stream=None, pinned_at: int | None = None):
        S = frozenset(int(s) for s in S)
        if len(S) not in (0, 2):
            raise ValueError(f"the worm handles |S| in {{0, 2}}; got {sorted(S)} (use independent replicas)")
        if not G.is_connected:
            raise ValueError("the worm needs a connected graph")
        if S and beta == 0:
            raise ZeroPartitionError("no current has sources at beta = 0")
        self.graph = G
        self.beta = float(beta)
        self.S = S
        self.stream = stream if stream is not None else make_stream(0)
        self.t = math.tanh(beta)
        self.odd = np.zeros(G.n_edges, dtype=np.uint8)
        if S:
            x, y = sorted(S)
            tail, self.pinned, self.mode, self.sa, self.sb = x, True, 2, x, y
        elif pinned_at is not None:
            tail, self.pinned, self.mode, self.sa, self.sb = int(pinned_at), True, 1, -1, -1
        else:
            tail, self.pinned, self.mode, self.sa, self.sb = 0, False, 1, -1, -1
        self.state = np.array([tail, tail, 0, 0], dtype=np.int64)
        self.steps = 0

    @property
    def head(self) -> int:
        return int(self.state[0])

    @property
    def tail(self) -> int:
        return int(self.state[1])

    @property
    def acceptance_rate(self) -> float:
        return float(self.state[2]) / max(1, int(self.state[3]))

    def in_sector(self) -> bool:
        h, t = self.head, self.tail
        if self.mode == 1:
            return h == t
        return {h, t} == {self.sa, self.sb}

    def _advance(self, n: int, mode: int, hist=_EMPTY_I64) -> int:
        if n <= 0:
            return 0
        G = self.graph
        done = kernels.worm_advance(self.odd, G.offsets, G.nbr_v, G.nbr_e, G.degrees, self.state, self.stream,
                                    self.t, int(n), self.pinned, mode, self.sa, self.sb, hist)
        self.steps += done
        return done

    def run(self, n_steps: int, hist: np.ndarray | None = None) -> None:
        """Advance ``n_steps`` moves; ``hist[head]`` counts positions after each move."""
        self._advance(n_steps, 0, _EMPTY_I64 if hist is None else hist)

    def visits(self, budget: int) -> Iterator[int]:
        """Advance at most ``budget`` moves, yielding the move count after each sector visit."""
        while budget > 0:
            used = self._advance(budget, self.mode)
            budget -= used
            if self.in_sector():
                yield self.steps

    def parity_state(self) -> ParityState:
        return ParityState.from_odd(self.graph, self.odd.astype(bool))


def worm_sample(G: Graph, beta: float, S: Iterable[int], cfg: SamplerConfig, replica: int = 0) -> Iterator[ParityState]:
    """Parity states of currents with sources ``S``.

    Even edges come out as Zero: the worm only tracks parities, and
    ``sprinkle_multiplicity`` resolves them.
    """
    for chain in _worm_visits(G, beta, S, cfg, replica):
        yield chain.parity_state()


def _worm_visits(G: Graph, beta: float, S: Iterable[int], cfg: SamplerConfig, replica: int = 0) -> Iterator[WormChain]:
    chain = WormChain(G, beta, S, make_stream(cfg.seed, replica, PURPOSE_WORM))
    burn = cfg.resolved_burn_in(G)
    chain.run(burn * G.n_vertices)
    k = 0
    for _ in chain.visits((cfg.sweeps - burn) * G.n_vertices):
        k += 1
        if k % cfg.thinning == 0:
            yield chain


def sprinkle_probability(beta: float) -> float:
    """Chance that an even multiplicity is nonzero: ``(cosh b - 1) / cosh b``."""
    return 2.0 * math.sinh(beta / 2) ** 2 / math.cosh(beta)


def sprinkle_multiplicity(p: ParityState, beta: float, rng) -> BondConfig:
    """Trace of a current drawn from its parity state.

    Odd edges are open; every other edge (Zero or EvenPositive alike, only
    the parity is used) opens independently with probability
    ``(cosh b - 1) / cosh b``. One uniform is drawn per edge.
    """
    odd = p.odd.astype(np.uint8)
    out = np.empty_like(odd)
    prob = np.full(len(odd), sprinkle_probability(beta))
    kernels.or_bernoulli(odd, prob, rng, out)
    return BondConfig(p.graph, out.astype(bool))


class _Sprinkler:
    """Reusable buffers for sprinkling a live odd array, optionally on a subset of edges."""

    def __init__(self, G: Graph, q: float, stream, support: np.ndarray | None):
        self.stream = stream
        self.support = None if support is None else np.ascontiguousarray(support, dtype=np.int64)
        n = G.n_edges if support is None else len(support)
        self.prob = np.full(n, q)
        self.buf = np.empty(n, dtype=np.uint8)
        self.open = np.zeros(G.n_edges, dtype=np.uint8)

    def __call__(self, odd: np.ndarray) -> np.ndarray:
        if self.support is None:
            kernels.or_bernoulli(odd, self.prob, self.stream, self.open)
        else:
            sub = np.ascontiguousarray(odd[self.support])
            kernels.or_bernoulli(sub, self.prob, self.stream, self.buf)
            self.open[self.support] = self.buf
        return self.open


class CurrentSampler:
    """(odd, trace) draws of one current with sources ``S``."""

    def __init__(self, G: Graph, beta: float, S: Iterable[int] = (), replica: int = 0):
        self.graph, self.beta, self.S, self.replica = G, float(beta), frozenset(S), replica
        self.acceptance_rate: float | None = None

    def draws(self, cfg: SamplerConfig, support: np.ndarray | None = None):
        sp = _Sprinkler(self.graph, sprinkle_probability(self.beta),
                        make_stream(cfg.seed, self.replica, PURPOSE_SPRINKLE), support)
        for chain in _worm_visits(self.graph, self.beta, self.S, cfg, self.replica):
            self.acceptance_rate = chain.acceptance_rate
            yield chain.odd.view(bool), sp(chain.odd).view(bool)


class MultiCurrentSampler:
    """Draws of ``n_1 + ... + n_k`` for independent currents with the given sources.

    Replica ``replica_offset + i`` uses its own streams; the ``j``-th sample of every replica is
    combined into the ``j``-th draw (odd parts add mod 2, traces take the union).
    """

    def __init__(self, G: Graph, beta: float, sources: Sequence[Iterable[int]], replica_offset: int = 0):
        self.graph, self.beta = G, float(beta)
        self.sources = tuple(frozenset(S) for S in sources)
        self.replica_offset = replica_offset
        self.acceptance_rate: float | None = None

    def draws(self, cfg: SamplerConfig, support: np.ndarray | None = None):
        G = self.graph
        q = sprinkle_probability(self.beta)
        ids = [self.replica_offset + i for i in range(len(self.sources))]
        gens = [_worm_visits(G, self.beta, S, cfg, r) for r, S in zip(ids, self.sources)]
        sps = [_Sprinkler(G, q, make_stream(cfg.seed, r, PURPOSE_SPRINKLE), support) for r in ids]
        odd = np.zeros(G.n_edges, dtype=np.uint8)
        open_ = np.zeros(G.n_edges, dtype=np.uint8)
        for chains in zip(*gens):
            odd[:] = 0
            open_[:] = 0
            for ch, sp in zip(chains, sps):
                odd ^= ch.odd
                open_ |= sp(ch.odd)
            self.acceptance_rate = float(np.mean([c.acceptance_rate for c in chains]))
            yield odd.view(bool), open_.view(bool)


class AveragedPairSampler:
    """Two worms with tails pinned at ``a`` and ``b``, sampled at fixed times.

    Without a sector restriction the head of a worm pinned at ``a`` sits at
    ``x`` with probability ``<sigma_a sigma_x> / chi``, so each draw comes from
    the two-current measure with sources ``{a, x}``, ``{b, y}`` averaged over
    ``x, y`` with weights ``<sigma_a sigma_x><sigma_b sigma_y> / chi^2``.
    """

    def __init__(self, G: Graph, beta: float, a: int, b: int):
        self.graph, self.beta, self.a, self.b = G, float(beta), int(a), int(b)
        self.acceptance_rate: float | None = None
        self.heads: tuple[int, int] | None = None

    def draws(self, cfg: SamplerConfig, support: np.ndarray | None = None):
        G = self.graph
        V = G.n_vertices
        q = sprinkle_probability(self.beta)
        chains = [WormChain(G, self.beta, (), make_stream(cfg.seed, i, PURPOSE_WORM), pinned_at=p)
                  for i, p in enumerate((self.a, self.b))]
        sps = [_Sprinkler(G, q, make_stream(cfg.seed, i, PURPOSE_SPRINKLE), support) for i in range(2)]
        burn = cfg.resolved_burn_in(G)
        for ch in chains:
            ch.run(burn * V)
        odd = np.zeros(G.n_edges, dtype=np.uint8)
        open_ = np.zeros(G.n_edges, dtype=np.uint8)
        for k in range(1, cfg.sweeps - burn + 1):
            for ch in chains:
                ch.run(V)
            if k % cfg.thinning:
                continue
            np.bitwise_xor(chains[0].odd, chains[1].odd, out=odd)
            np.bitwise_or(sps[0](chains[0].odd), sps[1](chains[1].odd), out=open_)
            self.heads = (chains[0].head, chains[1].head)
            self.acceptance_rate = 0.5 * (chains[0].acceptance_rate + chains[1].acceptance_rate)
            yield odd.view(bool), open_.view(bool)


def fk_conditioned_sample(G: Graph, beta: float, S: Iterable[int], cfg: SamplerConfig,
                          replica: int = 0) -> Iterator[BondConfig]:
    """``eta = max(trace(n), omega)`` with ``dn = S`` and ``omega`` iid Bernoulli(1 - e^-beta)."""
    for _, eta in FkCouplingSampler(G, beta, S, replica).draws(cfg):
        yield BondConfig(G, eta.copy())


class FkCouplingSampler:
    """Bond draws of the sprinkled current trace; law ``phi^0[. | F_S]``."""

    def __init__(self, G: Graph, beta: float, S: Iterable[int] = (), replica: int = 0):
        self.graph, self.beta, self.S, self.replica = G, float(beta), frozenset(S), replica
        self.acceptance_rate: float | None = None

    def draws(self, cfg: SamplerConfig, support: np.ndarray | None = None):
        G = self.graph
        inner = CurrentSampler(G, self.beta, self.S, self.replica)
        fk = _Sprinkler(G, -math.expm1(-self.beta), make_stream(cfg.seed, self.replica, PURPOSE_FK), support)
        zeros = np.zeros(G.n_edges, dtype=bool)
        for _, trace in inner.draws(cfg, support):
            self.acceptance_rate = inner.acceptance_rate
            yield zeros, fk(trace.view(np.uint8)).view(bool)


class SwSampler:
    """Swendsen-Wang chain; yields the bond configuration after each sweep (free boundary)."""

    def __init__(self, G: Graph, beta: float, replica: int = 0):
        if not G.is_connected:
            raise ValueError("the SW sampler needs a connected graph")
        self.graph, self.beta, self.replica = G, float(beta), replica
        self.acceptance_rate = None

    def draws(self, cfg: SamplerConfig, support: np.ndarray | None = None):
        G = self.graph
        stream = make_stream(cfg.seed, self.replica, PURPOSE_SW)
        spins = np.ones(G.n_vertices, dtype=np.int8)
        open_ = np.zeros(G.n_edges, dtype=np.uint8)
        labels = np.empty(G.n_vertices, dtype=np.int64)
        p = -math.expm1(-2 * self.beta)
        zeros = np.zeros(G.n_edges, dtype=bool)
        burn = cfg.resolved_burn_in(G)
        for _ in range(burn):
            kernels.sw_sweep(spins, G.edge_u, G.edge_v, p, stream, open_, labels)
        for k in range(1, cfg.sweeps - burn + 1):
            kernels.sw_sweep(spins, G.edge_u, G.edge_v, p, stream, open_, labels)
            if k % cfg.thinning == 0:
                yield zeros, open_.view(bool)


def sw_sample_fk(G: Graph, beta: float, cfg: SamplerConfig, replica: int = 0) -> Iterator[BondConfig]:
    for _, bonds in SwSampler(G, beta, replica).draws(cfg):
        yield BondConfig(G, bonds.copy())


def estimate(event, sampler, cfg: SamplerConfig) -> EstimateResult:
    """Mean of an event over a sampler's draws, with batch-means errors."""
    ev = as_event(event)
    G = sampler.graph
    values = [ev.test(G, odd, open_) for odd, open_ in sampler.draws(cfg, ev.support(G))]
    return summarize(values, cfg.seed, getattr(sampler, "acceptance_rate", None))


def estimate_many(events: Sequence[Event], sampler, cfg: SamplerConfig) -> list[EstimateResult]:
    """Several events on the same draws (errors are correlated across events)."""
    evs = [as_event(e) for e in events]
    G = sampler.graph
    sups = [e.support(G) for e in evs]
    support = None if any(s is None for s in sups) else np.unique(np.concatenate(sups + [np.zeros(0, np.int64)]))
    rows = [[e.test(G, odd, open_) for e in evs] for odd, open_ in sampler.draws(cfg, support)]
    arr = np.asarray(rows, dtype=np.float64).reshape(-1, len(evs))
    acc = getattr(sampler, "acceptance_rate", None)
    return [summarize(arr[:, j], cfg.seed, acc) for j in range(len(evs))]


def summarize(values: Sequence[float], seed: int, acceptance_rate: float | None = None) -> EstimateResult:
    mean, se, nb, tau = batch_means(values)
    return EstimateResult(mean, se, len(values), nb, seed, acceptance_rate, tau, _flags(nb))


def worm_two_point_batches(G: Graph, beta: float, origin: int, cfg: SamplerConfig, replica: int = 0,
                           n_batches: int | None = None) -> tuple[np.ndarray, float]:
    """Head-position histograms of a worm pinned at ``origin``, one row per batch.

    Row sums are the move counts per batch. ``hist[:, y] / hist[:, origin]``
    estimates ``<sigma_origin sigma_y>``; ``hist.sum() / hist[:, origin].sum()``
    estimates the susceptibility. Returns (histograms, acceptance rate).
    """
    chain = WormChain(G, beta, (), make_stream(cfg.seed, replica, PURPOSE_WORM), pinned_at=origin)
    V = G.n_vertices
    burn = cfg.resolved_burn_in(G)
    chain.run(burn * V)
    n_meas = (cfg.sweeps - burn) // cfg.thinning
    if n_batches is None:
        n_batches = max(1, math.isqrt(n_meas))
    per = max(1, n_meas // n_batches)
    hist = np.zeros((n_batches, V), dtype=np.int64)
    for b in range(n_batches):
        chain.run(per * cfg.thinning * V, hist[b])
    return hist, chain.acceptance_rate


def spool(states: Iterable[ParityState], path) -> int:
    """Write one parity string per line; returns the number of lines."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in states:
            fh.write(s.to_string() + "\n")
            n += 1
    return n


def read_spool(G: Graph, path) -> list[ParityState]:
    with open(path, encoding="utf-8") as fh:
        return [ParityState.from_string(G, line) for line in fh if line.strip()]
