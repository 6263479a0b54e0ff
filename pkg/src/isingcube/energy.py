"""Hamiltonian, exact energy arithmetic and field admissibility.

Energies relative to the all-minus state are carried as exact integer pairs
``(e, s)`` with realised value ``e - h*s`` (edge-boundary count and occupied
count).  All landscape comparisons reduce to integer arithmetic on the exact
binary expansion of ``h``, so they are immune to floating-point ties; floats
appear only at presentation and solver boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from .errors import CapabilityError, ParameterError
from .hypercube import Config, check_dim, check_vertex, edge_counts, vertex_neighbor_mask

#: g-profile tables materialise 2**n + 1 entries.
PROFILE_MAX_DIM = 26
#: Full state spaces have 2**(2**n) configurations.
STATE_SPACE_MAX_DIM = 4


@dataclass(frozen=True, slots=True)
class EnergyValue:
    """Exact energy gap: ``e`` boundary edges minus ``h`` times ``s`` occupied sites."""

    e: int
    s: int

    def value(self, h: float) -> float:
        return self.e - h * self.s

    def key(self, h: float) -> int:
        """Exact integer comparison key for the realised value at this h."""
        num, den = float(h).as_integer_ratio()
        return self.e * den - num * self.s

    def __sub__(self, other: "EnergyValue") -> "EnergyValue":
        return EnergyValue(self.e - other.e, self.s - other.s)

    def __add__(self, other: "EnergyValue") -> "EnergyValue":
        return EnergyValue(self.e + other.e, self.s + other.s)


def energy_key(e: int, s: int, h: float) -> int:
    num, den = float(h).as_integer_ratio()
    return e * den - num * s


@dataclass(frozen=True)
class AdmissibilityReport:
    """Result of scanning h against rationals a/b with small denominator."""

    n: int
    h: float
    tol: float
    margin: float
    witness_a: int
    witness_b: int
    admissible: bool

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "h": self.h,
            "tol": self.tol,
            "margin": self.margin,
            "witness_a": self.witness_a,
            "witness_b": self.witness_b,
            "admissible": self.admissible,
        }


def default_field_tol(n: int) -> float:
    """Keeps the certified margin meaningful in double precision at supported n."""
    return 1e-9 / (1 << n)


def _best_rational_margin(h: float, max_b: int) -> tuple[Fraction, int, int]:
    """Exact min over 1 <= b <= max_b of dist(b*h, Z), with the witness (a, b).

    Uses the best-approximation property of continued-fraction convergents:
    the minimum is attained at the largest convergent denominator <= max_b.
    """
    num, den = float(h).as_integer_ratio()
    whole, frac_num = divmod(num, den)
    if frac_num == 0:
        return Fraction(0), whole, 1
    best_p, best_q = 0, 1
    p_prev, q_prev = 1, 0
    p_cur, q_cur = 0, 1
    x, y = frac_num, den
    while x:
        a = y // x
        y, x = x, y % x
        p_prev, p_cur = p_cur, a * p_cur + p_prev
        q_prev, q_cur = q_cur, a * q_cur + q_prev
        if q_cur > max_b:
            break
        best_p, best_q = p_cur, q_cur
    margin = Fraction(abs(best_q * frac_num - best_p * den), den)
    return margin, best_p + best_q * whole, best_q


def _brute_rational_margin(h: float, max_b: int) -> tuple[Fraction, int, int]:
    """Direct exact scan over every denominator; quadratic-free but O(max_b)."""
    hf = Fraction(float(h))
    best = None
    for b in range(1, max_b + 1):
        a = round(b * hf)
        d = abs(b * hf - a)
        if best is None or d < best[0]:
            best = (d, int(a), b)
    return best


def validate_field(n: int, h: float, tol: float | None = None) -> AdmissibilityReport:
    """Scan b = 1..2**n for near-rational h and certify the minimum margin.

    A margin above tol guarantees that configurations of different sizes
    never share an energy level, which is the degeneracy the analysis needs
    to exclude.
    """
    check_dim(n)
    if n > PROFILE_MAX_DIM:
        raise CapabilityError(f"field validation capped at n={PROFILE_MAX_DIM}")
    if not 0 < h < n:
        raise ParameterError(f"field h={h} outside the open interval (0, {n})")
    if tol is None:
        tol = default_field_tol(n)
    max_b = 1 << n
    if n <= 16:
        margin, a, b = _brute_rational_margin(h, max_b)
    else:
        margin, a, b = _best_rational_margin(h, max_b)
    return AdmissibilityReport(
        n=n,
        h=float(h),
        tol=tol,
        margin=float(margin),
        witness_a=a,
        witness_b=b,
        admissible=margin > tol,
    )


@dataclass(frozen=True)
class ModelParams:
    """Model parameters: dimension n, external field h, inverse temperature beta.

    The pair interaction is fixed at 1 (any other value is a rescaling of
    beta and h).  Degenerate fields of the form a/b with b <= 2**n are
    rejected by ``require_admissible`` unless ``allow_degenerate`` is set.
    """

    n: int
    h: float
    beta: float = 0.0
    allow_degenerate: bool = False

    J = 1.0

    def __post_init__(self):
        check_dim(self.n)
        if not 0 < self.h < self.n:
            raise ParameterError(f"field h={self.h} outside the open interval (0, {self.n})")
        if self.beta < 0:
            raise ParameterError("inverse temperature beta must be nonnegative")

    @cached_property
    def h_ratio(self) -> tuple[int, int]:
        return float(self.h).as_integer_ratio()

    @cached_property
    def admissibility(self) -> AdmissibilityReport:
        margin, a, b = _best_rational_margin(self.h, 1 << self.n)
        tol = default_field_tol(self.n)
        return AdmissibilityReport(
            n=self.n,
            h=float(self.h),
            tol=tol,
            margin=float(margin),
            witness_a=a,
            witness_b=b,
            admissible=margin > tol,
        )

    def require_admissible(self) -> None:
        if self.allow_degenerate:
            return
        rep = self.admissibility
        if not rep.admissible:
            raise ParameterError(
                f"h={self.h} is within {rep.margin:g} of {rep.witness_a}/{rep.witness_b}; "
                "use an admissible field or set allow_degenerate"
            )

    def with_beta(self, beta: float) -> "ModelParams":
        return ModelParams(self.n, self.h, beta, self.allow_degenerate)


def hamiltonian(config: Config, params: ModelParams) -> float:
    """Absolute energy of a configuration (interaction 1, field h)."""
    n = params.n
    if config.n != n:
        raise ParameterError("configuration dimension does not match parameters")
    _, boundary = edge_counts(config)
    total_edges = n << (n - 1)
    s = config.size
    return -0.5 * (total_edges - 2 * boundary) - 0.5 * params.h * (2 * s - (1 << n))


def energy_gap(config: Config, params: ModelParams) -> EnergyValue:
    """Exact energy relative to the all-minus state: (boundary, occupied)."""
    if config.n != params.n:
        raise ParameterError("configuration dimension does not match parameters")
    _, boundary = edge_counts(config)
    return EnergyValue(boundary, config.size)


def flip_delta(config: Config, v: int, params: ModelParams) -> EnergyValue:
    """Exact energy change from flipping the spin at vertex v.

    Adding an unoccupied vertex of occupied-degree d costs ``n - 2d - h``;
    removing an occupied one costs ``2d - n + h``.
    """
    n = params.n
    check_vertex(v, n)
    if config.n != n:
        raise ParameterError("configuration dimension does not match parameters")
    d = (config.bits & vertex_neighbor_mask(v, n)).bit_count()
    if (config.bits >> v) & 1:
        return EnergyValue(2 * d - n, -1)
    return EnergyValue(n - 2 * d, 1)


def g_profile(n: int, h: float) -> np.ndarray:
    """Energy gap of the canonical size-k minimiser for k = 0..2**n.

    ``g(k) = k*(n - h) - 2*qsum(k-1)`` equals the boundary of the size-k
    prefix set minus h*k.
    """
    check_dim(n)
    if n > PROFILE_MAX_DIM:
        raise CapabilityError(f"g-profile tables capped at n={PROFILE_MAX_DIM}")
    if not 0 < h < n:
        raise ParameterError(f"field h={h} outside the open interval (0, {n})")
    total = 1 << n
    pops = np.bitwise_count(np.arange(total, dtype=np.uint32)).astype(np.int64)
    qsum_prev = np.zeros(total + 1, dtype=np.int64)
    np.cumsum(pops, out=qsum_prev[1:])  # qsum_prev[k] = sum of q(i) for i < k
    k = np.arange(total + 1, dtype=np.float64)
    return k * (n - h) - 2.0 * qsum_prev.astype(np.float64)


@lru_cache(maxsize=8)
def state_tables(n: int) -> tuple[np.ndarray, np.ndarray]:
    """(sizes, boundaries) for every configuration of the full state space.

    Index = configuration bitmask over vertices; capped at n=4 where the
    space has 65536 states.
    """
    check_dim(n)
    if n > STATE_SPACE_MAX_DIM:
        raise CapabilityError(f"full state-space tables capped at n={STATE_SPACE_MAX_DIM}")
    nstates = 1 << (1 << n)
    states = np.arange(nstates, dtype=np.uint32)
    sizes = np.bitwise_count(states).astype(np.int64)
    within = np.zeros(nstates, dtype=np.int64)
    for i in range(n):
        shift = 1 << i
        mask = 0
        for v in range(1 << n):
            if not (v >> i) & 1:
                mask |= 1 << v
        pair = states & (states >> np.uint32(shift)) & np.uint32(mask)
        within += np.bitwise_count(pair)
    boundaries = n * sizes - 2 * within
    sizes.setflags(write=False)
    boundaries.setflags(write=False)
    return sizes, boundaries


def state_energy_keys(n: int, h: float) -> np.ndarray:
    """Exact int64 comparison keys e*den - num*s for every state; ties = equal energy."""
    sizes, boundaries = state_tables(n)
    num, den = float(h).as_integer_ratio()
    # Magnitudes stay below 2**60 for n <= 4, so int64 arithmetic is exact.
    return boundaries * den - num * sizes


def gibbs_log_weight(config: Config, params: ModelParams) -> float:
    """Log of the unnormalised Gibbs weight, -beta * H."""
    return -params.beta * hamiltonian(config, params)


def log_partition_function(n: int, h: float, beta: float) -> float:
    """Log of the Gibbs normalising constant over all 2**(2**n) states (max-shifted)."""
    sizes, boundaries = state_tables(n)
    total_edges = n << (n - 1)
    energies = -0.5 * (total_edges - 2.0 * boundaries) - 0.5 * h * (2.0 * sizes - (1 << n))
    logw = -beta * energies
    m = logw.max()
    return m + math.log(np.exp(logw - m).sum())


def partition_function(n: int, h: float, beta: float) -> float:
    """The Gibbs normalising constant; may overflow to inf for extreme beta."""
    return math.exp(log_partition_function(n, h, beta))


def gibbs_probability(config: Config, params: ModelParams) -> float:
    """Normalised Gibbs probability of one configuration (n <= 4)."""
    logz = log_partition_function(params.n, params.h, params.beta)
    return math.exp(gibbs_log_weight(config, params) - logz)
