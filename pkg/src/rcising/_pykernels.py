"""Pure-Python kernels.

Reference implementations of the hot loops. ``_ckernels`` mirrors every
function here draw for draw, so both produce identical output streams.
"""
import numpy as np

BACKEND = "python"


class Stream:
    """Uniform doubles from a numpy bit generator."""

    def __init__(self, bit_generator):
        self.bit_generator = bit_generator
        self._gen = np.random.Generator(bit_generator)

    def random(self):
        return self._gen.random()


def worm_advance(odd, offsets, nbr_v, nbr_e, deg, state, stream, t, n_steps,
                 pinned, sector_mode, sa, sb, hist):
    """Run up to ``n_steps`` worm moves in place.

    ``state`` holds ``[head, tail, accepted, proposed]``. With ``pinned`` the
    tail never moves; otherwise half of the moves try to relocate a closed
    worm to a uniform vertex. ``sector_mode`` 1 stops right after a step that
    ends with head == tail, 2 stops when ``{head, tail} == {sa, sb}``. When ``hist``
    is non-empty, ``hist[head]`` is incremented after every step.
    Returns the number of steps taken.
    """
    head, tail = int(state[0]), int(state[1])
    acc, prop = int(state[2]), int(state[3])
    n_vertices = len(deg)
    use_hist = len(hist) > 0
    rnd = stream.random
    inv_t = 1.0 / t if t > 0 else float("inf")
    steps = 0
    while steps < n_steps:
        steps += 1
        shift = True
        if not pinned:
            if rnd() < 0.5:
                shift = False
                if head == tail:
                    v = int(rnd() * n_vertices)
                    head = tail = v
        if shift:
            dh = deg[head]
            k = int(rnd() * dh)
            j = offsets[head] + k
            e = nbr_e[j]
            w = nbr_v[j]
            ratio = (inv_t if odd[e] else t) * dh / deg[w]
            prop += 1
            if rnd() < ratio:
                odd[e] ^= 1
                head = w
                acc += 1
        if use_hist:
            hist[head] += 1
        if sector_mode == 1:
            if head == tail:
                break
        elif sector_mode == 2:
            if (head == sa and tail == sb) or (head == sb and tail == sa):
                break
    state[0] = head
    state[1] = tail
    state[2] = acc
    state[3] = prop
    return steps


def or_bernoulli(base, p, stream, out):
    """``out[i] = base[i] or (u_i < p[i])``; one uniform per entry."""
    rnd = stream.random
    for i in range(len(base)):
        u = rnd()
        out[i] = 1 if (base[i] or u < p[i]) else 0


def _find(parent, v):
    while parent[v] != v:
        parent[v] = parent[parent[v]]
        v = parent[v]
    return v


def label_clusters(n_vertices, eu, ev, open_, labels):
    """Cluster labels of the open subgraph; each label is the cluster's smallest vertex."""
    parent = list(range(n_vertices))
    for i in range(len(eu)):
        if open_[i]:
            a = _find(parent, eu[i])
            b = _find(parent, ev[i])
            if a < b:
                parent[b] = a
            elif b < a:
                parent[a] = b
    for v in range(n_vertices):
        labels[v] = _find(parent, v)


def sw_sweep(spins, eu, ev, p_bond, stream, open_out, labels):
    """One Swendsen-Wang update: bonds, clusters, then fresh cluster spins.

    Draw order: one uniform per edge, then one per cluster in order of the
    cluster's smallest vertex. ``open_out`` receives the bond configuration.
    """
    rnd = stream.random
    n_vertices = len(spins)
    for i in range(len(eu)):
        u = rnd()
        open_out[i] = 1 if (spins[eu[i]] == spins[ev[i]] and u < p_bond) else 0
    label_clusters(n_vertices, eu, ev, open_out, labels)
    for v in range(n_vertices):
        if labels[v] == v:
            spins[v] = 1 if rnd() < 0.5 else -1
    for v in range(n_vertices):
        spins[v] = spins[labels[v]]


def lipschitz_ok(keys, vals, norms, C, lo, hi):
    """``|g_i - g_j| <= C |k_i - k_j|_inf g_i / norm_i`` for ``j`` in ``[lo_i, hi_i)``."""
    for i in range(len(keys)):
        b = slice(lo[i], hi[i])
        dist = np.abs(keys[b] - keys[i]).max(axis=1)
        lhs = np.abs(vals[i] - vals[b])
        if np.any(lhs > C * dist * vals[i] / norms[i] * (1 + 1e-12) + 1e-300):
            return False
    return True
