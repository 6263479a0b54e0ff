"""Pure-Python event-driven kinetic Monte Carlo kernel.

Fallback twin of the compiled kernel in ``_core``: same algorithm, same RNG
stream, same floating-point operation order, hence bit-for-bit identical
trajectories.  A complete binary tree over the 2**n flip channels gives
O(log) sampling and O(n log) rate updates per event (the flipped vertex and
its n neighbours change rate class).
"""

from __future__ import annotations

import math
from bisect import bisect_left

from ._rng import Xoshiro256pp

#: run() status codes shared with the compiled kernel.
HIT_NONE = 0
HIT_MASK = 1
HIT_COUNT = 2
TRUNCATED = 3


class KmcEngine:
    """Reusable single-trajectory simulator for fixed (n, rates, start, targets).

    ``target_masks`` are full-configuration bitmasks (requires n <= 6 so the
    running mask stays cheap); ``target_counts`` trigger on the occupied
    count alone and work at any supported n.  Targets are checked only after
    a flip, so a start inside a target set is "hit" only upon return.
    """

    def __init__(self, n, rates_vacant, rates_occupied, start_bits,
                 target_masks=(), target_counts=()):
        self.n = n
        self.nv = 1 << n
        self.rates_vac = [float(x) for x in rates_vacant]
        self.rates_occ = [float(x) for x in rates_occupied]
        self.start_bits = int(start_bits)
        self.target_masks = sorted(int(m) for m in target_masks)
        self.target_counts = [int(c) for c in target_counts]
        self.mask_sizes = {m.bit_count() for m in self.target_masks}
        self._track_mask = bool(self.target_masks)

    def run(self, seed, max_events):
        """Simulate one trajectory; returns (status, hit_index, time, events, final_count).

        ``hit_index`` points into target_masks or target_counts depending on
        the status code.
        """
        n, nv = self.n, self.nv
        rates_vac, rates_occ = self.rates_vac, self.rates_occ
        rng = Xoshiro256pp(seed)

        spins = [0] * nv
        bits = self.start_bits
        v = 0
        while bits:
            if bits & 1:
                spins[v] = 1
            bits >>= 1
            v += 1
        deg = [0] * nv
        for v in range(nv):
            if spins[v]:
                for i in range(n):
                    deg[v ^ (1 << i)] += 1
        tree = [0.0] * (2 * nv)
        for v in range(nv):
            d = deg[v]
            tree[nv + v] = rates_occ[d] if spins[v] else rates_vac[d]
        for node in range(nv - 1, 0, -1):
            tree[node] = tree[2 * node] + tree[2 * node + 1]

        occ = self.start_bits.bit_count()
        state_mask = self.start_bits
        t = 0.0
        events = 0
        while events < max_events:
            total = tree[1]
            u = rng.next_open01()
            t += -math.log(u) / total
            r = rng.next_halfopen01() * total
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
            if self._track_mask:
                state_mask ^= 1 << v
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

            for idx, c in enumerate(self.target_counts):
                if occ == c:
                    return HIT_COUNT, idx, t, events, occ
            if self._track_mask and occ in self.mask_sizes:
                pos = bisect_left(self.target_masks, state_mask)
                if pos < len(self.target_masks) and self.target_masks[pos] == state_mask:
                    return HIT_MASK, pos, t, events, occ
        return TRUNCATED, -1, t, events, occ
