# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same signatures and draw order as ``_pykernels``."""
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.stdint cimport int8_t, int64_t, uint8_t
from numpy.random cimport bitgen_t

BACKEND = "cython"


cdef class Stream:
    cdef public object bit_generator
    cdef object _capsule
    cdef bitgen_t *rng

    def __init__(self, bit_generator):
        self.bit_generator = bit_generator
        self._capsule = bit_generator.capsule
        self.rng = <bitgen_t *> PyCapsule_GetPointer(self._capsule, "BitGenerator")

    def random(self):
        return self.rng.next_double(self.rng.state)


cdef inline double _draw(bitgen_t *rng) noexcept nogil:
    return rng.next_double(rng.state)


def worm_advance(uint8_t[::1] odd, int64_t[::1] offsets, int64_t[::1] nbr_v,
                 int64_t[::1] nbr_e, int64_t[::1] deg, int64_t[::1] state,
                 Stream stream, double t, int64_t n_steps, bint pinned,
                 int sector_mode, int64_t sa, int64_t sb, int64_t[::1] hist):
    cdef bitgen_t *rng = stream.rng
    cdef int64_t head = state[0], tail = state[1], acc = state[2], prop = state[3]
    cdef int64_t n_vertices = deg.shape[0]
    cdef bint use_hist = hist.shape[0] > 0
    cdef double inv_t = 1.0 / t if t > 0 else float("inf")
    cdef int64_t steps = 0, dh, k, j, e, w
    cdef double ratio
    cdef bint shift
    with nogil:
        while steps < n_steps:
            steps += 1
            shift = True
            if not pinned:
                if _draw(rng) < 0.5:
                    shift = False
                    if head == tail:
                        head = <int64_t> (_draw(rng) * n_vertices)
                        tail = head
            if shift:
                dh = deg[head]
                k = <int64_t> (_draw(rng) * dh)
                j = offsets[head] + k
                e = nbr_e[j]
                w = nbr_v[j]
                ratio = (inv_t if odd[e] else t) * dh / deg[w]
                prop += 1
                if _draw(rng) < ratio:
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


def or_bernoulli(const uint8_t[::1] base, const double[::1] p, Stream stream, uint8_t[::1] out):
    cdef bitgen_t *rng = stream.rng
    cdef Py_ssize_t i
    cdef double u
    with nogil:
        for i in range(base.shape[0]):
            u = _draw(rng)
            out[i] = 1 if (base[i] or u < p[i]) else 0


cdef inline int64_t _find(int64_t[::1] parent, int64_t v) noexcept nogil:
    while parent[v] != v:
        parent[v] = parent[parent[v]]
        v = parent[v]
    return v


cdef void _label(int64_t n_vertices, const int64_t[::1] eu, const int64_t[::1] ev,
                 const uint8_t[::1] open_, int64_t[::1] labels) noexcept nogil:
    cdef Py_ssize_t i
    cdef int64_t a, b, v
    for v in range(n_vertices):
        labels[v] = v
    for i in range(eu.shape[0]):
        if open_[i]:
            a = _find(labels, eu[i])
            b = _find(labels, ev[i])
            if a < b:
                labels[b] = a
            elif b < a:
                labels[a] = b
    for v in range(n_vertices):
        labels[v] = _find(labels, v)


def label_clusters(int64_t n_vertices, const int64_t[::1] eu, const int64_t[::1] ev,
                   const uint8_t[::1] open_, int64_t[::1] labels):
    with nogil:
        _label(n_vertices, eu, ev, open_, labels)


def sw_sweep(int8_t[::1] spins, const int64_t[::1] eu, const int64_t[::1] ev, double p_bond,
             Stream stream, uint8_t[::1] open_out, int64_t[::1] labels):
    cdef bitgen_t *rng = stream.rng
    cdef Py_ssize_t i
    cdef int64_t v, n_vertices = spins.shape[0]
    cdef double u
    with nogil:
        for i in range(eu.shape[0]):
            u = _draw(rng)
            open_out[i] = 1 if (spins[eu[i]] == spins[ev[i]] and u < p_bond) else 0
        _label(n_vertices, eu, ev, open_out, labels)
        for v in range(n_vertices):
            if labels[v] == v:
                spins[v] = 1 if _draw(rng) < 0.5 else -1
        for v in range(n_vertices):
            spins[v] = spins[labels[v]]


def lipschitz_ok(const int64_t[:, ::1] keys, const double[::1] vals, const int64_t[::1] norms, double C,
                 const int64_t[::1] lo, const int64_t[::1] hi):
    cdef int64_t n = keys.shape[0], d = keys.shape[1], i, j, k, dist, diff
    cdef double ga, lhs, rhs
    cdef bint ok = True
    with nogil:
        for i in range(n):
            if not ok:
                break
            ga = vals[i]
            for j in range(lo[i], hi[i]):
                dist = 0
                for k in range(d):
                    diff = keys[i, k] - keys[j, k]
                    if diff < 0:
                        diff = -diff
                    if diff > dist:
                        dist = diff
                lhs = ga - vals[j]
                if lhs < 0:
                    lhs = -lhs
                rhs = C * dist * ga / norms[i]
                if lhs > rhs * (1 + 1e-12) + 1e-300:
                    ok = False
                    break
    return ok
