import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rcising import kernels
from rcising.events import Connected, Disjoint, EdgesOdd, EdgesOpen
from rcising.exact import (FkSpec, current_event_prob, derivative_identity_probe, fk_exact, pair_event_prob,
                           spin_expectation)
from rcising.lattice import Geometry, Graph, build_lattice, cycle_graph
from rcising.samplers import (MIN_BATCHES, AveragedPairSampler, CurrentSampler, FkCouplingSampler,
                              MultiCurrentSampler, SamplerConfig, SwSampler, WormChain, batch_means, estimate,
                              estimate_many, make_stream, ratio_batch_means, read_spool, sprinkle_multiplicity,
                              sprinkle_probability, spool, worm_sample, worm_two_point_batches)

BACKENDS = sorted(kernels.BACKENDS)


@pytest.fixture
def backend():
    """Run the body once per available backend, restoring the default after."""
    yield
    kernels.use_backend("cython" if "cython" in kernels.BACKENDS else "python")


def within(res, exact, k=3.0):
    return abs(res.mean - exact) <= k * res.std_error


# ---- plumbing -------------------------------------------------------------

def test_streams_are_keyed():
    a = [make_stream(1, 0, 0).random() for _ in range(1)]
    assert make_stream(1, 0, 0).random() == a[0]
    assert make_stream(1, 0, 1).random() != a[0]
    assert make_stream(1, 1, 0).random() != a[0]
    assert make_stream(2, 0, 0).random() != a[0]


def test_sampler_config_validation():
    for kw in ({"beta": -1}, {"beta": 1, "thinning": 0}, {"beta": 1, "sweeps": 10, "burn_in": 10},
               {"beta": 1, "sources": ((0,),)}, {"beta": 1, "seed": -1}):
        with pytest.raises(ValueError):
            SamplerConfig(**kw)
    cfg = SamplerConfig(0.5, sweeps=100)
    assert cfg.resolved_burn_in(cycle_graph(6)) == 30
    assert cfg.with_(seed=3).seed == 3
    with pytest.raises(ValueError):
        SamplerConfig(0.5, sweeps=20).resolved_burn_in(cycle_graph(6))


def test_batch_means_shape():
    x = np.arange(100, dtype=float)
    mean, se, nb, tau = batch_means(x)
    assert mean == 49.5 and nb == 10
    bm = x.reshape(10, 10).mean(axis=1)
    assert se == pytest.approx(bm.std(ddof=1) / math.sqrt(10))
    assert batch_means([])[2] == 0
    assert math.isnan(batch_means([1.0])[1])


@given(st.integers(4, 5000))
def test_batch_count_is_isqrt(n):
    nb = batch_means(np.zeros(n))[2]
    assert nb == n // math.isqrt(n)


def test_batch_means_iid_error():
    rng = np.random.default_rng(0)
    x = rng.normal(size=40_000)
    _, se, nb, tau = batch_means(x)
    assert se == pytest.approx(1 / math.sqrt(40_000), rel=0.15)
    assert tau == pytest.approx(0.5, rel=0.3)
    assert nb == 200


def test_ratio_batch_means():
    den = np.array([10.0, 20.0, 30.0, 40.0])
    num = np.stack([2 * den, den + 1], axis=1)
    r, se = ratio_batch_means(num, den)
    assert r[0] == pytest.approx(2.0) and se[0] == pytest.approx(0.0, abs=1e-14)
    assert r[1] == pytest.approx(104 / 100)


def test_flags_below_min_batches(k2):
    res = estimate(EdgesOpen((0,)), CurrentSampler(k2, 1.0), SamplerConfig(1.0, sweeps=200, burn_in=10))
    assert res.n_batches < MIN_BATCHES and not res.reliable


def test_sprinkle_probability():
    for b in (1e-6, 0.3, 1.0, 4.0):
        assert sprinkle_probability(b) == pytest.approx((math.cosh(b) - 1) / math.cosh(b), rel=1e-9)


def test_sprinkle_multiplicity_even_k2(k2):
    from rcising.currents import ParityState

    rng = make_stream(0, 0, 1)
    p = ParityState.from_string(k2, "e")
    opens = [sprinkle_multiplicity(p, 1.0, rng).open[0] for _ in range(20_000)]
    c = math.cosh(1)
    assert np.mean(opens) == pytest.approx((c - 1) / c, abs=3 * 0.0034)
    q = ParityState.from_string(k2, "o")
    assert sprinkle_multiplicity(q, 1.0, rng).open[0]


# ---- backend identity -----------------------------------------------------

@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")
def test_backends_produce_identical_worm_histories(backend):
    G = build_lattice(2, 4, Geometry.TORUS)
    cfg = SamplerConfig(0.35, sweeps=300, burn_in=20, seed=9)
    out = {}
    for name in BACKENDS:
        kernels.use_backend(name)
        hist, acc = worm_two_point_batches(G, 0.35, G.origin, cfg)
        states = [s.to_string() for _, s in zip(range(200), worm_sample(G, 0.35, (0, 5), cfg))]
        out[name] = (hist, acc, states)
    a, b = out.values()
    assert np.array_equal(a[0], b[0]) and a[1] == b[1] and a[2] == b[2]


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")
def test_backends_produce_identical_sw_and_coupling(backend):
    G = build_lattice(2, 3, Geometry.TORUS)
    cfg = SamplerConfig(0.4, sweeps=200, burn_in=10, seed=4)
    out = {}
    for name in BACKENDS:
        kernels.use_backend(name)
        sw = np.array([b.copy() for _, b in SwSampler(G, 0.4).draws(cfg)])
        fk = np.array([b.copy() for _, b in FkCouplingSampler(G, 0.4, (0, 4)).draws(cfg)])
        out[name] = (sw, fk)
    a, b = out.values()
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


# ---- worm chain -----------------------------------------------------------

def test_worm_sector_sources(c4):
    cfg = SamplerConfig(0.8, sweeps=300, burn_in=10, seed=2)
    for s in worm_sample(c4, 0.8, (0, 2), cfg):
        assert s.sources() == {0, 2}
    for s in worm_sample(c4, 0.8, (), cfg):
        assert s.sources() == frozenset()


def test_worm_chain_validation(c4):
    with pytest.raises(ValueError):
        WormChain(c4, 0.5, (0,))
    with pytest.raises(ValueError):
        WormChain(Graph(4, [(0, 1), (2, 3)]), 0.5, (0, 2))


def test_worm_beta_zero(c4):
    cfg = SamplerConfig(0.0, sweeps=200, burn_in=10)
    res = estimate(EdgesOpen((0,)), CurrentSampler(c4, 0.0), cfg)
    assert res.mean == 0.0


@pytest.mark.parametrize("S,event", [((), EdgesOdd()), ((), EdgesOpen((1,))), ((0, 2), Connected(1, 3)),
                                     ((0, 1), EdgesOpen((2,)))])
def test_current_sampler_matches_exact(c4, S, event):
    cfg = SamplerConfig(1.0, sweeps=20_000, burn_in=100, seed=11)
    res = estimate(event, CurrentSampler(c4, 1.0, S), cfg)
    assert within(res, current_event_prob(c4, 1.0, S, event))
    assert res.reliable


def test_worm_two_point_matches_spins():
    G = cycle_graph(6)
    cfg = SamplerConfig(0.6, sweeps=20_000, burn_in=100, seed=1)
    hist, _ = worm_two_point_batches(G, 0.6, 0, cfg)
    g = hist.sum(axis=0) / hist[:, 0].sum()
    for x in range(6):
        assert g[x] == pytest.approx(spin_expectation(G, 0.6, (0, x)) if x else 1.0, abs=0.02)


def test_multi_current_matches_pair_enumeration(c4):
    cfg = SamplerConfig(0.9, sweeps=20_000, burn_in=100, seed=5)
    r = estimate(Disjoint(0, 1), MultiCurrentSampler(c4, 0.9, [(0, 2), (1, 3)]), cfg)
    assert within(r, pair_event_prob(c4, 0.9, (0, 2), (1, 3), Disjoint(0, 1)))


def test_multi_current_nontrivial_avoidance():
    # on the 4-cycle interleaved sources force an intersection; here they do not
    G = cycle_graph(5)
    cfg = SamplerConfig(0.5, sweeps=20_000, burn_in=100, seed=6)
    exact = pair_event_prob(G, 0.5, (0, 4), (1, 2), Disjoint(0, 1))
    assert 0.1 < exact < 0.9
    assert within(estimate(Disjoint(0, 1), MultiCurrentSampler(G, 0.5, [(0, 4), (1, 2)]), cfg), exact)


def test_averaged_pair_sampler_matches_derivative():
    G = build_lattice(1, 4, Geometry.TORUS)
    beta = 0.5
    cfg = SamplerConfig(beta, sweeps=40_000, burn_in=100, seed=8)
    o, e = G.origin, G.unit(0)
    res = estimate(Disjoint(o, e), AveragedPairSampler(G, beta, o, e), cfg)
    exact = derivative_identity_probe(G, beta).form3 / 2
    assert within(res, exact)


def test_fk_coupling_matches_exact(k2):
    cfg = SamplerConfig(1.0, sweeps=20_000, burn_in=100, seed=3)
    assert within(estimate(EdgesOpen((0,)), FkCouplingSampler(k2, 1.0), cfg), math.tanh(1))


def test_sw_matches_exact():
    G = build_lattice(1, 5, Geometry.TORUS)
    cfg = SamplerConfig(0.5, sweeps=20_000, burn_in=100, seed=3)
    exact = fk_exact(G, FkSpec(0.5), EdgesOpen((0,)))
    assert within(estimate(EdgesOpen((0,)), SwSampler(G, 0.5), cfg), exact)


def test_estimate_many_shares_draws(c4):
    cfg = SamplerConfig(0.7, sweeps=2000, burn_in=10, seed=1)
    a, b = estimate_many([EdgesOpen((0,)), EdgesOpen((0,))], CurrentSampler(c4, 0.7), cfg)
    assert a == b
    single = estimate(EdgesOpen((0,)), CurrentSampler(c4, 0.7), cfg)
    assert single.mean == a.mean


def test_reproducible(c4):
    cfg = SamplerConfig(0.7, sweeps=2000, burn_in=10, seed=42)
    r1 = estimate(EdgesOdd(), CurrentSampler(c4, 0.7), cfg)
    r2 = estimate(EdgesOdd(), CurrentSampler(c4, 0.7), cfg)
    assert r1 == r2


def test_spool_roundtrip(tmp_path, c4):
    cfg = SamplerConfig(0.7, sweeps=200, burn_in=10, seed=1)
    states = list(s for _, s in zip(range(50), worm_sample(c4, 0.7, (0, 2), cfg)))
    n = spool(states, tmp_path / "s.txt")
    back = read_spool(c4, tmp_path / "s.txt")
    assert n == 50 and back == states
