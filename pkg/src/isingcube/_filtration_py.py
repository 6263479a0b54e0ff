"""Pure-Python union-find sweep over the energy-sorted state space.

Fallback twin of the compiled kernel in ``_core``.  States are added in
increasing energy order; each union of two components creates a dendrogram
node whose height is the sweep position of the merging state.  The outputs
are plain integer arrays, so both backends produce identical results.
"""

from __future__ import annotations

import numpy as np


def filtration_sweep(order, pos, n):
    """Kruskal-style sweep; returns (parent_node, node_birth, node_saddle).

    ``order`` lists state bitmasks by increasing energy, ``pos`` is its
    inverse permutation.  Dendrogram leaves are sweep positions 0..S-1 and
    internal nodes S..2S-2 in creation order; ``node_birth`` carries the
    minimum sweep position in each subtree and ``node_saddle[m-S]`` the
    position at which internal node m merged its children.
    """
    nstates = len(order)
    nv = 1 << n
    uf = list(range(nstates))
    node_of_root = list(range(nstates))
    parent_node = [-1] * (2 * nstates - 1)
    node_birth = list(range(nstates)) + [0] * (nstates - 1)
    node_saddle = [0] * (nstates - 1)
    next_node = nstates
    order_l = [int(x) for x in order]
    pos_l = [int(x) for x in pos]

    for idx in range(nstates):
        s = order_l[idx]
        for i in range(nv):
            pt = pos_l[s ^ (1 << i)]
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
            node_birth[m] = min(node_birth[na], node_birth[nb])
            node_saddle[m - nstates] = idx
            uf[ra] = rb
            node_of_root[rb] = m

    if next_node != 2 * nstates - 1:
        raise AssertionError("configuration graph failed to connect during the sweep")
    return (
        np.asarray(parent_node, dtype=np.int64),
        np.asarray(node_birth, dtype=np.int64),
        np.asarray(node_saddle, dtype=np.int64),
    )
