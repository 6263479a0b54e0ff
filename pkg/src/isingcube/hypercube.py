"""Vertex and configuration arithmetic on the n-dimensional hypercube Q_n.

Vertices are integers in ``[0, 2**n)``; coordinate ``i`` (1-based) lives in
bit ``i-1``, so the set of the first ``k`` integers is exactly the canonical
minimal-boundary set of size ``k`` used throughout the package.  A spin
configuration is a subset of the vertex set, stored as a bitmask with bit
``v`` set when vertex ``v`` carries spin +1.

Everything here is immutable and re-entrant.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .errors import CapabilityError, ParameterError

#: Cap for formula-level operations: a 2**n-bit mask still fits in memory.
MAX_DIM = 30
#: Cap for whole-group enumeration: n! * 2**n automorphisms.
GROUP_MAX_DIM = 6


def check_dim(n: int) -> None:
    """Raise ParameterError unless 1 <= n <= MAX_DIM."""
    if not isinstance(n, int) or n < 1 or n > MAX_DIM:
        raise ParameterError(f"dimension n={n!r} outside supported range [1, {MAX_DIM}]")


def num_vertices(n: int) -> int:
    return 1 << n


def check_vertex(v: int, n: int) -> None:
    check_dim(n)
    if not 0 <= v < (1 << n):
        raise ParameterError(f"vertex {v} outside [0, 2**{n})")


def neighbors(v: int, n: int) -> list[int]:
    """The n vertices adjacent to v, ordered by flipped coordinate."""
    check_vertex(v, n)
    return [v ^ (1 << i) for i in range(n)]


def vertex_neighbor_mask(v: int, n: int) -> int:
    """Bitmask over vertices with the neighbours of v set."""
    m = 0
    for i in range(n):
        m |= 1 << (v ^ (1 << i))
    return m


@dataclass(frozen=True, slots=True)
class Config:
    """A spin configuration: the set of +1 vertices of Q_n as a bitmask."""

    n: int
    bits: int

    def __post_init__(self):
        check_dim(self.n)
        if not 0 <= self.bits < (1 << (1 << self.n)):
            raise ParameterError("configuration bitmask wider than 2**n vertices")

    @classmethod
    def empty(cls, n: int) -> "Config":
        return cls(n, 0)

    @classmethod
    def full(cls, n: int) -> "Config":
        return cls(n, (1 << (1 << n)) - 1)

    @classmethod
    def from_vertices(cls, n: int, vertices) -> "Config":
        bits = 0
        for v in vertices:
            check_vertex(v, n)
            bits |= 1 << v
        return cls(n, bits)

    @property
    def size(self) -> int:
        return self.bits.bit_count()

    def vertices(self) -> list[int]:
        return [v for v in range(1 << self.n) if (self.bits >> v) & 1]

    def __contains__(self, v: int) -> bool:
        return 0 <= v < (1 << self.n) and (self.bits >> v) & 1 == 1

    def __iter__(self):
        return iter(self.vertices())

    def with_vertex(self, v: int) -> "Config":
        check_vertex(v, self.n)
        return Config(self.n, self.bits | (1 << v))

    def without_vertex(self, v: int) -> "Config":
        check_vertex(v, self.n)
        return Config(self.n, self.bits & ~(1 << v))

    def flipped(self, v: int) -> "Config":
        check_vertex(v, self.n)
        return Config(self.n, self.bits ^ (1 << v))

    def complement(self) -> "Config":
        return Config(self.n, self.bits ^ ((1 << (1 << self.n)) - 1))

    def is_empty(self) -> bool:
        return self.bits == 0

    def is_full(self) -> bool:
        return self.bits == (1 << (1 << self.n)) - 1


@lru_cache(maxsize=64)
def _direction_masks(n: int) -> tuple[int, ...]:
    """For each coordinate i: bitmask of vertices whose bit i is clear."""
    total = 1 << n
    masks = []
    for i in range(n):
        block = (1 << (1 << i)) - 1
        m = 0
        step = 1 << (i + 1)
        for base in range(0, total, step):
            m |= block << base
        masks.append(m)
    return tuple(masks)


def edge_counts_bits(bits: int, n: int) -> tuple[int, int]:
    """(within, boundary) edge counts for a raw bitmask; no validation."""
    within = 0
    for i, mask in enumerate(_direction_masks(n)):
        within += (bits & (bits >> (1 << i)) & mask).bit_count()
    boundary = n * bits.bit_count() - 2 * within
    return within, boundary


def edge_counts(config: Config) -> tuple[int, int]:
    """Count edges inside the set and edges crossing to the complement.

    The exact identity ``boundary == n*|S| - 2*within`` holds by handshake
    over the n edge directions.
    """
    return edge_counts_bits(config.bits, config.n)


@dataclass(frozen=True, slots=True)
class Automorphism:
    """A graph automorphism of Q_n: permute coordinates, then XOR a flip mask.

    ``perm[i]`` is the (0-based) image coordinate of coordinate ``i``; the
    mask is applied after permuting.  The group they generate has order
    ``n! * 2**n``.
    """

    perm: tuple[int, ...]
    mask: int

    def __post_init__(self):
        n = len(self.perm)
        if sorted(self.perm) != list(range(n)):
            raise ParameterError("perm is not a permutation of the coordinates")
        if not 0 <= self.mask < (1 << n):
            raise ParameterError("flip mask wider than the coordinate count")

    @property
    def n(self) -> int:
        return len(self.perm)

    @classmethod
    def identity(cls, n: int) -> "Automorphism":
        return cls(tuple(range(n)), 0)

    def apply_vertex(self, v: int) -> int:
        w = 0
        for i, p in enumerate(self.perm):
            if (v >> i) & 1:
                w |= 1 << p
        return w ^ self.mask

    def vertex_table(self) -> tuple[int, ...]:
        return tuple(self.apply_vertex(v) for v in range(1 << self.n))

    def apply(self, config: Config) -> Config:
        if config.n != self.n:
            raise ParameterError(
                f"automorphism on {self.n} coordinates applied to a Q_{config.n} configuration"
            )
        bits = config.bits
        out = 0
        v = 0
        while bits:
            if bits & 1:
                out |= 1 << self.apply_vertex(v)
            bits >>= 1
            v += 1
        return Config(config.n, out)

    def compose(self, other: "Automorphism") -> "Automorphism":
        """The automorphism v -> self(other(v))."""
        if self.n != other.n:
            raise ParameterError("cannot compose automorphisms of different dimension")
        perm = tuple(self.perm[other.perm[i]] for i in range(self.n))
        # self(permute(v) ^ other.mask) distributes: mask picks up self's permutation.
        mask = self.mask
        for i in range(self.n):
            if (other.mask >> i) & 1:
                mask ^= 1 << self.perm[i]
        return Automorphism(perm, mask)

    def inverse(self) -> "Automorphism":
        inv = [0] * self.n
        for i, p in enumerate(self.perm):
            inv[p] = i
        mask = 0
        for i in range(self.n):
            if (self.mask >> i) & 1:
                mask ^= 1 << inv[i]
        return Automorphism(tuple(inv), mask)


def apply_automorphism(phi: Automorphism, config: Config) -> Config:
    """Image of a configuration under a hypercube automorphism."""
    return phi.apply(config)


def _check_group_dim(n: int) -> None:
    check_dim(n)
    if n > GROUP_MAX_DIM:
        raise CapabilityError(
            f"automorphism-group enumeration capped at n={GROUP_MAX_DIM} "
            f"(group size n!*2**n); got n={n}"
        )


def automorphism_group(n: int):
    """Yield all n! * 2**n automorphisms of Q_n (n <= GROUP_MAX_DIM)."""
    _check_group_dim(n)
    for perm in itertools.permutations(range(n)):
        for mask in range(1 << n):
            yield Automorphism(perm, mask)


@lru_cache(maxsize=8)
def group_vertex_tables(n: int) -> tuple[tuple[int, ...], ...]:
    """Vertex-image tables for the whole automorphism group, cached per n."""
    _check_group_dim(n)
    return tuple(phi.vertex_table() for phi in automorphism_group(n))


def _image_bits(bits: int, table) -> int:
    out = 0
    v = 0
    while bits:
        if bits & 1:
            out |= 1 << table[v]
        bits >>= 1
        v += 1
    return out


def orbit_bits(bits: int, n: int) -> set[int]:
    """All distinct images of a raw bitmask under the automorphism group."""
    return {_image_bits(bits, t) for t in group_vertex_tables(n)}


def canonical_form(config: Config) -> Config:
    """Lexicographically least bitmask over the automorphism orbit.

    Two configurations have equal canonical forms exactly when some
    automorphism maps one onto the other.
    """
    _check_group_dim(config.n)
    best = min(_image_bits(config.bits, t) for t in group_vertex_tables(config.n))
    return Config(config.n, best)


def orbit(config: Config) -> list[Config]:
    """The automorphism orbit of a configuration, sorted by bitmask."""
    return [Config(config.n, b) for b in sorted(orbit_bits(config.bits, config.n))]


def subcube_envelope(config: Config) -> tuple[int, int]:
    """Smallest sub-cube containing the set, as (base vertex, free-direction mask).

    The envelope fixes every coordinate on which all members agree; its
    dimension is the popcount of the free-direction mask.  Undefined for the
    empty set.
    """
    if config.bits == 0:
        raise ParameterError("empty configuration has no enclosing sub-cube")
    base = (config.bits & -config.bits).bit_length() - 1
    dirs = 0
    rest = config.bits
    v = 0
    while rest:
        if rest & 1:
            dirs |= v ^ base
        rest >>= 1
        v += 1
    return base, dirs


def is_subcube(config: Config):
    """Return the sub-cube dimension r if the set is exactly an r-face, else None."""
    if config.bits == 0:
        return None
    _, dirs = subcube_envelope(config)
    r = dirs.bit_count()
    return r if config.size == (1 << r) else None


@dataclass(frozen=True, slots=True)
class SubCube:
    """An axis-aligned sub-cube: a base vertex plus a set of free coordinates."""

    n: int
    base: int
    dirs: int

    def __post_init__(self):
        check_vertex(self.base, self.n)
        if self.base & self.dirs:
            raise ParameterError("base vertex must be minimal within the sub-cube")

    @property
    def dim(self) -> int:
        return self.dirs.bit_count()

    def vertices(self) -> list[int]:
        free = [i for i in range(self.n) if (self.dirs >> i) & 1]
        out = []
        for sel in range(1 << len(free)):
            v = self.base
            for j, i in enumerate(free):
                if (sel >> j) & 1:
                    v |= 1 << i
            out.append(v)
        return sorted(out)

    def to_config(self) -> Config:
        return Config.from_vertices(self.n, self.vertices())
