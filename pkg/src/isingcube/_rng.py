"""Deterministic 64-bit RNG shared by the pure-Python and compiled kernels.

Both kernel implementations reproduce exactly the same uint64 stream
(splitmix64 seeding a xoshiro256++ generator), so trajectories are
bit-for-bit identical across backends.  Replica seeds are derived from the
master seed by the documented rule in ``derive_replica_seed``.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
#: 2**-53, the spacing of the 53-bit uniform grid.
U53 = 1.0 / (1 << 53)


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (next_state, output)."""
    state = (state + GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def derive_replica_seed(master: int, index: int) -> int:
    """Seed for replica ``index``: one splitmix64 output from master + (index+1)*GOLDEN."""
    state = (master + (index + 1) * GOLDEN) & MASK64
    _, z = splitmix64(state)
    return z


def xoshiro_seed(seed: int) -> list[int]:
    """Four splitmix64 outputs initialise the xoshiro256++ state."""
    state = seed & MASK64
    s = []
    for _ in range(4):
        state, z = splitmix64(state)
        s.append(z)
    if s[0] == 0 and s[1] == 0 and s[2] == 0 and s[3] == 0:
        s[0] = GOLDEN
    return s


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256pp:
    """Pure-Python xoshiro256++; the compiled kernel implements the same stream."""

    __slots__ = ("s0", "s1", "s2", "s3")

    def __init__(self, seed: int):
        self.s0, self.s1, self.s2, self.s3 = xoshiro_seed(seed)

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self.s0, self.s1, self.s2, self.s3
        result = (_rotl((s0 + s3) & MASK64, 23) + s0) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s0, self.s1, self.s2, self.s3 = s0, s1, s2, s3
        return result

    def next_open01(self) -> float:
        """Uniform on (0, 1]; safe as an exponential-sampling argument."""
        return ((self.next_u64() >> 11) + 1) * U53

    def next_halfopen01(self) -> float:
        """Uniform on [0, 1); safe as a cumulative-rate selector."""
        return (self.next_u64() >> 11) * U53
