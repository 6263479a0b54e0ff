# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the pure-Python hot kernels.

The KMC engine reproduces the exact uint64 RNG stream and floating-point
operation order of ``_kmc_py``; the sweep reproduces the integer outputs of
``_filtration_py``.  No numpy C API is used, only typed memoryviews.
"""

from libc.math cimport log

import numpy as np

ctypedef unsigned long long u64
ctypedef signed char i8
ctypedef long long i64

cdef u64 GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double U53 = 1.0 / 9007199254740992.0  # 2**-53

HIT_NONE = 0
HIT_MASK = 1
HIT_COUNT = 2
TRUNCATED = 3


cdef inline u64 _rotl(u64 x, int k) nogil:
    return (x << k) | (x >> (64 - k))


cdef inline u64 _splitmix(u64* state) nogil:
    state[0] += GOLDEN
    cdef u64 z = state[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef class KmcEngine:
    """Event-driven Glauber trajectory sampler over the 2**n flip channels."""

    cdef int n, nv
    cdef double[::1] rates_vac, rates_occ
    cdef i8[::1] start_spins
    cdef u64[::1] target_masks
    cdef i64[::1] target_counts
    cdef u64 mask_size_bits
    cdef bint track_mask
    cdef i8[::1] spins
    cdef int[::1] deg
    cdef double[::1] tree

    def __init__(self, int n, double[::1] rates_vacant, double[::1] rates_occupied,
                 i8[::1] start_spins, u64[::1] target_masks, i64[::1] target_counts):
        self.n = n
        self.nv = 1 << n
        # Memoryview assignment keeps the underlying buffers alive.
        self.rates_vac = rates_vacant
        self.rates_occ = rates_occupied
        self.start_spins = start_spins
        self.target_masks = target_masks
        self.target_counts = target_counts
        self.track_mask = target_masks.shape[0] > 0
        cdef Py_ssize_t i
        cdef u64 m
        self.mask_size_bits = 0
        for i in range(target_masks.shape[0]):
            m = target_masks[i]
            self.mask_size_bits |= (<u64>1) << _popcount64(m)
        self.spins = np.empty(self.nv, dtype=np.int8)
        self.deg = np.zeros(self.nv, dtype=np.intc)
        self.tree = np.zeros(2 * self.nv, dtype=np.float64)

    def run(self, object seed, long long max_events):
        """Simulate one trajectory; returns (status, hit_index, time, events, count)."""
        cdef int n = self.n, nv = self.nv
        cdef u64 st = <u64>(int(seed) & 0xFFFFFFFFFFFFFFFF)
        cdef u64 s0, s1, s2, s3, x, t64
        s0 = _splitmix(&st); s1 = _splitmix(&st); s2 = _splitmix(&st); s3 = _splitmix(&st)
        if s0 == 0 and s1 == 0 and s2 == 0 and s3 == 0:
            s0 = GOLDEN

        cdef i8[::1] spins = self.spins
        cdef int[::1] deg = self.deg
        cdef double[::1] tree = self.tree
        cdef double[::1] rates_vac = self.rates_vac
        cdef double[::1] rates_occ = self.rates_occ
        cdef int v, w, i, d, dw, node, occ
        cdef u64 state_mask = 0

        occ = 0
        for v in range(nv):
            spins[v] = self.start_spins[v]
            deg[v] = 0
        for v in range(nv):
            if spins[v]:
                occ += 1
                if self.track_mask:
                    state_mask |= (<u64>1) << v
                for i in range(n):
                    deg[v ^ (1 << i)] += 1
        for v in range(nv):
            d = deg[v]
            tree[nv + v] = rates_occ[d] if spins[v] else rates_vac[d]
        for node in range(nv - 1, 0, -1):
            tree[node] = tree[2 * node] + tree[2 * node + 1]

        cdef double t = 0.0, total, u, r, left
        cdef long long events = 0
        cdef Py_ssize_t j, lo, hi, mid
        cdef i8 new_spin
        cdef int step

        while events < max_events:
            total = tree[1]
            x = _rotl(s0 + s3, 23) + s0
            t64 = s1 << 17
            s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3; s2 ^= t64; s3 = _rotl(s3, 45)
            u = <double>((x >> 11) + 1) * U53
            t += -log(u) / total
            x = _rotl(s0 + s3, 23) + s0
            t64 = s1 << 17
            s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3; s2 ^= t64; s3 = _rotl(s3, 45)
            r = <double>(x >> 11) * U53 * total
            node = 1
            while node < nv:
                node <<= 1
                left = tree[node]
                if r >= left:
                    r -= left
                    node += 1
            v = node - nv
            events += 1

            new_spin = 1 - spins[v]
            spins[v] = new_spin
            occ += 1 if new_spin else -1
            if self.track_mask:
                state_mask ^= (<u64>1) << v
            d = deg[v]
            tree[nv + v] = rates_occ[d] if new_spin else rates_vac[d]
            node = (nv + v) >> 1
            while node:
                tree[node] = tree[2 * node] + tree[2 * node + 1]
                node >>= 1
            step = 1 if new_spin else -1
            for i in range(n):
                w = v ^ (1 << i)
                dw = deg[w] + step
                deg[w] = dw
                tree[nv + w] = rates_occ[dw] if spins[w] else rates_vac[dw]
                node = (nv + w) >> 1
                while node:
                    tree[node] = tree[2 * node] + tree[2 * node + 1]
                    node >>= 1

            for j in range(self.target_counts.shape[0]):
                if occ == self.target_counts[j]:
                    return (HIT_COUNT, j, t, events, occ)
            if self.track_mask and occ < 64 and (self.mask_size_bits >> occ) & 1:
                lo = 0
                hi = self.target_masks.shape[0]
                while lo < hi:
                    mid = (lo + hi) >> 1
                    if self.target_masks[mid] < state_mask:
                        lo = mid + 1
                    else:
                        hi = mid
                if lo < self.target_masks.shape[0] and self.target_masks[lo] == state_mask:
                    return (HIT_MASK, lo, t, events, occ)
        return (TRUNCATED, -1, t, events, occ)


cdef inline int _popcount64(u64 x) nogil:
    cdef int c = 0
    while x:
        x &= x - 1
        c += 1
    return c


def filtration_sweep(i64[::1] order, i64[::1] pos, int n):
    """Union-find sweep over the energy-sorted state space; integer outputs."""
    cdef Py_ssize_t nstates = order.shape[0]
    cdef int nv = 1 << n
    parent_node_arr = np.full(2 * nstates - 1, -1, dtype=np.int64)
    node_birth_arr = np.empty(2 * nstates - 1, dtype=np.int64)
    node_saddle_arr = np.zeros(nstates - 1, dtype=np.int64)
    uf_arr = np.arange(nstates, dtype=np.int64)
    node_of_root_arr = np.arange(nstates, dtype=np.int64)
    cdef i64[::1] parent_node = parent_node_arr
    cdef i64[::1] node_birth = node_birth_arr
    cdef i64[::1] node_saddle = node_saddle_arr
    cdef i64[::1] uf = uf_arr
    cdef i64[::1] node_of_root = node_of_root_arr

    cdef Py_ssize_t idx, next_node = nstates
    cdef i64 s, pt, ra, rb, na, nb, m
    cdef int i
    for idx in range(nstates):
        node_birth[idx] = idx
    for idx in range(nstates):
        s = order[idx]
        for i in range(nv):
            pt = pos[s ^ ((<i64>1) << i)]
            if pt >= idx:
                continue
            ra = idx
            while uf[ra] != ra:
                uf[ra] = uf[uf[ra]]
                ra = uf[ra]
            rb = pt
            while uf[rb] != rb:
                uf[rb] = uf[uf[rb]]
                rb = uf[rb]
            if ra == rb:
                continue
            na = node_of_root[ra]
            nb = node_of_root[rb]
            m = next_node
            next_node += 1
            parent_node[na] = m
            parent_node[nb] = m
            node_birth[m] = node_birth[na] if node_birth[na] < node_birth[nb] else node_birth[nb]
            node_saddle[m - nstates] = idx
            uf[ra] = rb
            node_of_root[rb] = m
    if next_node != 2 * nstates - 1:
        raise AssertionError("configuration graph failed to connect during the sweep")
    return parent_node_arr, node_birth_arr, node_saddle_arr
