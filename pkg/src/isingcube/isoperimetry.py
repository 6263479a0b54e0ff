"""Digit-sum combinatorics and edge-isoperimetric structure of Q_n.

The central objects are the prefix sets ``upsilon(n, k)`` (the first k
vertices in binary counting order), which minimise the edge boundary among
all k-subsets, and the recursively defined *good sets* that exhaust the
minimisers.  Exhaustive oracles for small n live here too, so the closed
forms can be checked against brute force.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .errors import CapabilityError, ParameterError
from .hypercube import (
    Config,
    Automorphism,
    canonical_form,
    edge_counts,
    edge_counts_bits,
    check_dim,
    check_vertex,
    group_vertex_tables,
    _image_bits,
    subcube_envelope,
)

#: Exhaustive enumeration over C(2**n, k) subsets stays below ~66k sets.
BRUTE_MAX_DIM = 4
#: r*2**(r-1) exceeds the 64-bit range past this point.
QSUM_CLOSED_MAX_R = 57


def q(i: int) -> int:
    """Number of ones in the binary expansion of i."""
    if i < 0:
        raise ParameterError("q is defined for nonnegative integers")
    return i.bit_count()


def qsum(m: int) -> int:
    """Sum of q(i) for i = 1..m, computed exactly in O(log m).

    Counts, for every bit position, how many of 0..m have that bit set.
    """
    if m < 0:
        raise ParameterError("qsum is defined for nonnegative integers")
    total = 0
    for b in range(m.bit_length()):
        period = 1 << (b + 1)
        full, rem = divmod(m + 1, period)
        total += (full << b) + max(0, rem - (1 << b))
    return total


def qsum_closed(r: int) -> int:
    """Closed form r * 2**(r-1) for qsum(2**r - 1)."""
    if r < 0:
        raise ParameterError("r must be nonnegative")
    if r > QSUM_CLOSED_MAX_R:
        raise CapabilityError(f"qsum_closed overflows 64-bit arithmetic for r > {QSUM_CLOSED_MAX_R}")
    if r == 0:
        return 0
    return r << (r - 1)


def abdiff_check(a: int, j: int, n: int) -> bool:
    """Verify the digit-sum step identity for b = a + 2**(j-1) by direct summation.

    Requires 1 <= j < n-1, a < 2**n, bit j-1 of a set and bit j clear.  The
    identity relates the prefix digit sums below a and below b through the
    count of ones above position j+1; it holds for every admissible input, so
    the return value is True unless arithmetic itself is broken.
    """
    check_dim(n)
    if not 1 <= j < n - 1:
        raise ParameterError("j must satisfy 1 <= j < n-1")
    if not 1 <= a < (1 << n):
        raise ParameterError("a must satisfy 1 <= a < 2**n")
    if not (a >> (j - 1)) & 1:
        raise ParameterError("bit j-1 of a must be set")
    if (a >> j) & 1:
        raise ParameterError("bit j of a must be clear")
    b = a + (1 << (j - 1))
    high_ones = (a >> (j + 1)).bit_count()
    # Increment is (j + 1 + 2*high_ones) * 2**(j-2); fractional for j = 1,
    # so compare with both sides scaled by 4.
    lhs = 4 * qsum(b - 1)
    rhs = 4 * qsum(a - 1) + (j + 1 + 2 * high_ones) * (1 << j)
    return lhs == rhs


def upsilon(n: int, k: int) -> Config:
    """The first k vertices in integer order; a minimal-boundary set of size k."""
    check_dim(n)
    if not 0 <= k <= (1 << n):
        raise ParameterError(f"k={k} outside [0, 2**{n}]")
    return Config(n, (1 << k) - 1)


def minimal_boundary(n: int, k: int) -> int:
    """Minimum edge-boundary size over all k-subsets of Q_n: n*k - 2*qsum(k-1)."""
    check_dim(n)
    if not 0 <= k <= (1 << n):
        raise ParameterError(f"k={k} outside [0, 2**{n}]")
    if k == 0:
        return 0
    return n * k - 2 * qsum(k - 1)


def _size_bracket(k: int) -> int:
    """The r with 2**r < k <= 2**(r+1); requires k >= 2."""
    return (k - 1).bit_length() - 1


def is_well_contained(config: Config) -> bool:
    """True when some (r+1)-dimensional sub-cube contains the set, 2**r < |S| <= 2**(r+1)."""
    k = config.size
    if k < 1:
        raise ParameterError("well-containment is defined for nonempty sets")
    if k == 1:
        return True
    _, dirs = subcube_envelope(config)
    return dirs.bit_count() <= _size_bracket(k) + 1


@lru_cache(maxsize=1 << 18)
def _is_good_bits(bits: int) -> bool:
    k = bits.bit_count()
    if k == 1:
        return True
    r = _size_bracket(k)
    base = (bits & -bits).bit_length() - 1
    dirs = 0
    rest, v = bits, 0
    while rest:
        if rest & 1:
            dirs |= v ^ base
        rest >>= 1
        v += 1
    if dirs.bit_count() != r + 1:
        # The minimal enclosing sub-cube always has dimension >= r+1; anything
        # larger means the set is not well-contained, hence not good.
        return False
    for i in range(dirs.bit_length()):
        if not (dirs >> i) & 1:
            continue
        zero_mask = 0
        rest, v = bits, 0
        while rest:
            if rest & 1 and not (v >> i) & 1:
                zero_mask |= 1 << v
            rest >>= 1
            v += 1
        one_mask = bits & ~zero_mask
        half = 1 << r
        if zero_mask.bit_count() == half and one_mask and _is_good_bits(one_mask):
            return True
        if one_mask.bit_count() == half and zero_mask and _is_good_bits(zero_mask):
            return True
    return False


def is_good(config: Config) -> bool:
    """Recursive good-set recognition.

    A set is good when it is a singleton, or it lives in an (r+1)-sub-cube
    split into twin r-sub-cubes with one twin fully occupied and the
    remainder good.  Good sets are exactly the boundary minimisers.
    """
    if config.size < 1:
        raise ParameterError("good-set recognition is defined for nonempty sets")
    return _is_good_bits(config.bits)


def is_boundary_minimal(config: Config) -> bool:
    """Independent minimality certificate: boundary equals the closed-form minimum."""
    _, boundary = edge_counts(config)
    return boundary == minimal_boundary(config.n, config.size)


@dataclass(frozen=True)
class MinimizerCatalog:
    """Exhaustive minimisers of the edge boundary at one (n, k).

    Members are stored both as a complete list and deduplicated by canonical
    form, since orbit counts are what the critical-set analysis consumes.
    """

    n: int
    k: int
    minimum: int
    members: tuple[int, ...]
    orbit_reps: tuple[int, ...]

    @property
    def count(self) -> int:
        return len(self.members)

    def member_configs(self) -> list[Config]:
        return [Config(self.n, b) for b in self.members]


def brute_min_boundary(n: int, k: int) -> MinimizerCatalog:
    """Enumerate every k-subset of Q_n and keep the boundary minimisers."""
    check_dim(n)
    if n > BRUTE_MAX_DIM:
        raise CapabilityError(f"exhaustive subset enumeration capped at n={BRUTE_MAX_DIM}")
    if not 0 <= k <= (1 << n):
        raise ParameterError(f"k={k} outside [0, 2**{n}]")
    best = None
    members: list[int] = []
    for combo in itertools.combinations(range(1 << n), k):
        bits = 0
        for v in combo:
            bits |= 1 << v
        _, boundary = edge_counts_bits(bits, n)
        if best is None or boundary < best:
            best = boundary
            members = [bits]
        elif boundary == best:
            members.append(bits)
    reps = sorted({min(_image_bits(b, t) for t in group_vertex_tables(n)) for b in members})
    return MinimizerCatalog(n, k, best if best is not None else 0, tuple(sorted(members)), tuple(reps))


def reference_path(n: int):
    """Lazily yield the canonical growth path: prefixes of size 0..2**n.

    Consecutive sets differ by exactly one vertex and every prefix minimises
    the energy within its size class, which makes the path uniformly optimal.
    """
    check_dim(n)
    for k in range((1 << n) + 1):
        yield upsilon(n, k)


def reference_path_list(n: int) -> list[Config]:
    """Materialised reference path; capped where the full path fits in memory."""
    check_dim(n)
    if n > BRUTE_MAX_DIM:
        raise CapabilityError(f"materialised reference path capped at n={BRUTE_MAX_DIM}")
    return list(reference_path(n))


def path_automorphism(n: int, w: int, y: int) -> Automorphism:
    """Automorphism sending the canonical path start to gamma_1={y}, gamma_2={w,y}."""
    check_vertex(w, n)
    check_vertex(y, n)
    d = w ^ y
    if d.bit_count() != 1:
        raise ParameterError(f"vertices {w} and {y} are not adjacent")
    axis = d.bit_length() - 1
    perm = list(range(n))
    perm[0], perm[axis] = perm[axis], perm[0]
    return Automorphism(tuple(perm), y)


def translated_reference_path(n: int, w: int, y: int):
    """Reference path relabelled so it starts empty, then {y}, then {w, y}.

    The relabelling is an automorphism, so the energy profile along the path
    is identical to the canonical one.
    """
    phi = path_automorphism(n, w, y)
    table = phi.vertex_table()
    bits = 0
    yield Config(n, 0)
    for v in range(1 << n):
        bits |= 1 << table[v]
        yield Config(n, bits)
