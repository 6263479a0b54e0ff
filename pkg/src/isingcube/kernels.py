"""Hot-kernel backend selection: compiled extension with pure-Python fallback.

The compiled module ``isingcube._core`` provides the event-driven KMC engine
and the union-find landscape sweep.  When it is absent (no compiler at
install time) the pure-Python twins are used; they implement the identical
algorithms and RNG stream, so results agree bit for bit, only slower.
"""

from __future__ import annotations

import numpy as np

from .errors import CapabilityError, ParameterError
from . import _filtration_py, _kmc_py

try:
    from . import _core
    HAVE_COMPILED = True
except ImportError:  # pragma: no cover - exercised only on fallback installs
    _core = None
    HAVE_COMPILED = False

DEFAULT_BACKEND = "compiled" if HAVE_COMPILED else "python"

#: status codes shared by both engines
HIT_NONE = _kmc_py.HIT_NONE
HIT_MASK = _kmc_py.HIT_MASK
HIT_COUNT = _kmc_py.HIT_COUNT
TRUNCATED = _kmc_py.TRUNCATED

#: KMC state arrays are 2**n wide; past this the rate tree no longer fits comfortably.
KMC_MAX_DIM = 22


def resolve_backend(backend: str | None) -> str:
    if backend is None or backend == "auto":
        return DEFAULT_BACKEND
    if backend == "compiled":
        if not HAVE_COMPILED:
            raise CapabilityError("compiled kernel requested but isingcube._core is not built")
        return "compiled"
    if backend == "python":
        return "python"
    raise ParameterError(f"unknown kernel backend {backend!r}")


def kmc_engine(n, rates_vacant, rates_occupied, start_spins,
               target_masks=(), target_counts=(), backend=None):
    """Construct a single-trajectory KMC engine on the selected backend.

    ``start_spins`` is a length-2**n array of 0/1; ``target_masks`` are
    configuration bitmasks (n <= 6 only) and ``target_counts`` are occupied
    counts.  The engine's ``run(seed, max_events)`` returns
    ``(status, hit_index, time, events, final_count)``.
    """
    if n > KMC_MAX_DIM:
        raise CapabilityError(f"KMC kernel capped at n={KMC_MAX_DIM}")
    if target_masks and n > 6:
        raise CapabilityError("bitmask targets require n <= 6; use count targets instead")
    which = resolve_backend(backend)
    if which == "compiled":
        spins = np.ascontiguousarray(start_spins, dtype=np.int8)
        masks = np.ascontiguousarray(sorted(int(m) for m in target_masks), dtype=np.uint64)
        counts = np.ascontiguousarray([int(c) for c in target_counts], dtype=np.int64)
        rv = np.ascontiguousarray(rates_vacant, dtype=np.float64)
        ro = np.ascontiguousarray(rates_occupied, dtype=np.float64)
        return _core.KmcEngine(n, rv, ro, spins, masks, counts)
    start_bits = 0
    for v, s in enumerate(start_spins):
        if s:
            start_bits |= 1 << v
    return _kmc_py.KmcEngine(n, rates_vacant, rates_occupied, start_bits,
                             target_masks, target_counts)


def filtration_sweep(order, pos, n, backend=None):
    """Run the union-find sweep; returns (parent_node, node_birth, node_saddle)."""
    which = resolve_backend(backend)
    order = np.ascontiguousarray(order, dtype=np.int64)
    pos = np.ascontiguousarray(pos, dtype=np.int64)
    if which == "compiled":
        return _core.filtration_sweep(order, pos, n)
    return _filtration_py.filtration_sweep(order, pos, n)
