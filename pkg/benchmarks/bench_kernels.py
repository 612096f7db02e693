"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--quick]

Each case runs on both backends from the same seed and checks that the
outputs agree before reporting wall times and the speedup.
"""
import argparse
import time

import numpy as np

from rcising import kernels
from rcising.experiments import TwoPointTable, regular_scale_detect
from rcising.lattice import Geometry, build_lattice
from rcising.samplers import SamplerConfig, SwSampler, make_stream, worm_two_point_batches


def worm_case(quick):
    G = build_lattice(3, 6 if quick else 10, Geometry.TORUS)
    cfg = SamplerConfig(0.2, sweeps=200 if quick else 2000, burn_in=20, seed=7)

    def run():
        hist, _ = worm_two_point_batches(G, cfg.beta, G.origin, cfg)
        return hist.sum(axis=0)

    return f"worm on torus d=3 L={G.side}, {cfg.sweeps} sweeps", run


def sw_case(quick):
    G = build_lattice(2, 16 if quick else 48, Geometry.TORUS)
    cfg = SamplerConfig(0.44, sweeps=50 if quick else 400, burn_in=10, seed=3)

    def run():
        acc = np.zeros(G.n_edges)
        for _, bonds in SwSampler(G, cfg.beta).draws(cfg):
            acc += bonds
        return acc

    return f"Swendsen-Wang on torus d=2 L={G.side}, {cfg.sweeps} sweeps", run


def sprinkle_case(quick):
    m = 10_000 if quick else 200_000
    base = np.zeros(m, dtype=np.uint8)
    p = np.full(m, 0.3)

    def run():
        stream = kernels.make_stream(make_stream(11).bit_generator)
        out = np.empty(m, dtype=np.uint8)
        for _ in range(5):
            kernels.or_bernoulli(base, p, stream, out)
        return out

    return f"Bernoulli sprinkling of {m} edges x 5", run


def lipschitz_case(quick):
    R = 16 if quick else 32
    t = TwoPointTable.from_function(lambda x: max(x) ** -1.0, 3, R)

    def run():
        return np.array(regular_scale_detect(t, C=16.0).rows(), dtype=object)[:, 3:7].astype(str)

    return f"regular-scale detector on a d=3 table of radius {R}", run


CASES = [worm_case, sw_case, sprinkle_case, lipschitz_case]


def timed(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="small sizes, for a smoke run")
    args = ap.parse_args()
    if "cython" not in kernels.BACKENDS:
        raise SystemExit("compiled backend not built; reinstall with Cython available")
    print(f"{'case':58s} {'cython s':>10s} {'python s':>10s} {'speedup':>8s}")
    for make in CASES:
        label, fn = make(args.quick)
        times, outs = {}, {}
        for name in ("cython", "python"):
            kernels.use_backend(name)
            times[name], outs[name] = timed(fn, 1 if name == "python" else args.repeat)
        kernels.use_backend("cython")
        if not np.array_equal(outs["cython"], outs["python"]):
            raise SystemExit(f"{label}: backends disagree")
        print(f"{label:58s} {times['cython']:10.4f} {times['python']:10.4f} {times['python'] / times['cython']:7.1f}x")


if __name__ == "__main__":
    main()
