"""Critical and protocritical structure: enumeration, neighbour counts, prefactor.

Ground truth is always enumeration plus definitional scans on the
filtration; the collapsed counting formulas and the printed prefactor are
evaluated alongside and flagged informationally, because direct counts
disagree with them at small instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import CapabilityError, InvariantViolation, ParameterError
from .energy import ModelParams, flip_delta
from .hypercube import Config, check_dim, edge_counts, orbit_bits
from .isoperimetry import brute_min_boundary, minimal_boundary, upsilon, BRUTE_MAX_DIM
from .landscape import BarrierProfile, FiltrationIndex, gamma_star_closed, wells_scan

#: orbit enumeration of the critical set is practical through n=5
C_STAR_MAX_DIM = 5


def _ceil_frac(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def c_star_enumerate(n: int, h: float) -> list[Config]:
    """All critical configurations: the automorphism orbit of the size-k* prefix.

    For n <= 4 the orbit is cross-checked against the exhaustive minimiser
    list at size k*; the two must coincide exactly.
    """
    check_dim(n)
    if n > C_STAR_MAX_DIM:
        raise CapabilityError(f"critical-set enumeration capped at n={C_STAR_MAX_DIM}")
    profile = gamma_star_closed(n, h)
    seed = upsilon(n, profile.k_star)
    members = sorted(orbit_bits(seed.bits, n))
    if n <= BRUTE_MAX_DIM:
        catalog = brute_min_boundary(n, profile.k_star)
        if list(catalog.members) != members:
            raise InvariantViolation(
                f"orbit enumeration and exhaustive minimisers disagree at n={n}, h={h}"
            )
    return [Config(n, b) for b in members]


def p_star_b_star(index: FiltrationIndex, c_star: list[Config]) -> tuple[list[Config], list[Config]]:
    """Definitional scan for the protocritical and downhill neighbour sets.

    P*: neighbours of the critical set whose bottleneck to all-minus is
    strictly below their bottleneck to all-plus.  B*: neighbours of the
    critical set already inside the all-plus valley (bottleneck to all-plus
    strictly below the saddle).
    """
    n = index.n
    h = index.params.h
    profile = gamma_star_closed(n, h)
    key_star = profile.saddle.key(h)
    phi_minus = index.phi_to_minus_pos()
    phi_plus = index.phi_to_plus_pos()
    candidates: set[int] = set()
    for c in c_star:
        for v in range(1 << n):
            candidates.add(c.bits ^ (1 << v))
    p_star, b_star = [], []
    for s in sorted(candidates):
        p = index.pos[s]
        key_minus = int(index.sorted_keys[phi_minus[p]])
        key_plus = int(index.sorted_keys[phi_plus[p]])
        if key_minus < key_plus:
            p_star.append(Config(n, s))
        if key_plus < key_star:
            b_star.append(Config(n, s))
    return p_star, b_star


def neighbor_counts(sigma: Config, params: ModelParams,
                    p_star: list[Config] | None = None,
                    b_star: list[Config] | None = None) -> tuple[int, int]:
    """(N-, N+): neighbours of a critical configuration in P* and B*.

    The counts are recomputed independently from the signs of single-flip
    energy changes (a removal is downhill iff 2d - n + h < 0, an addition
    iff the occupied degree exceeds (n - h)/2); when the definitional sets
    are supplied both routes must agree.
    """
    n = params.n
    h = params.h
    profile = gamma_star_closed(n, h)
    if sigma.size != profile.k_star or edge_counts(sigma)[1] != minimal_boundary(n, profile.k_star):
        raise ParameterError("configuration is not critical: wrong size or non-minimal boundary")
    down_removals = 0
    down_additions = 0
    for v in range(1 << n):
        delta = flip_delta(sigma, v, params)
        if delta.key(h) < 0:
            if v in sigma:
                down_removals += 1
            else:
                down_additions += 1
    if p_star is not None and b_star is not None:
        p_bits = {c.bits for c in p_star}
        b_bits = {c.bits for c in b_star}
        adj_minus = sum(1 for v in range(1 << n) if sigma.bits ^ (1 << v) in p_bits)
        adj_plus = sum(1 for v in range(1 << n) if sigma.bits ^ (1 << v) in b_bits)
        if (adj_minus, adj_plus) != (down_removals, down_additions):
            raise InvariantViolation(
                f"adjacency route ({adj_minus}, {adj_plus}) disagrees with the "
                f"flip-sign route ({down_removals}, {down_additions}) on {sigma.bits:#x}"
            )
    return down_removals, down_additions


def h2_check(counts: list[tuple[int, int]]) -> bool:
    """True when (N-, N+) is constant across the critical set."""
    return len(set(counts)) <= 1


def pairwise_non_adjacent(c_star: list[Config]) -> bool:
    """Distinct critical configurations always differ in more than one vertex."""
    bits = [c.bits for c in c_star]
    for i, a in enumerate(bits):
        for b in bits[i + 1:]:
            if (a ^ b).bit_count() == 1:
                return False
    return True


def prefactor_variational(c_star: list[Config], counts: list[tuple[int, int]],
                          wells: list[Config] | None) -> float:
    """Prefactor from the simplified variational formula.

    ``1/K`` is the sum over critical configurations of the harmonic mean
    N- * N+ / (N- + N+).  The simplification requires an empty wells list
    and a pairwise non-adjacent critical set; both are enforced.
    """
    if wells is not None and len(wells) > 0:
        raise InvariantViolation("wells present: the simplified prefactor formula is invalid")
    if not pairwise_non_adjacent(c_star):
        raise InvariantViolation("adjacent critical configurations invalidate the prefactor")
    if len(counts) != len(c_star):
        raise ParameterError("one (N-, N+) pair per critical configuration is required")
    inv = Fraction(0)
    for nm, np_ in counts:
        if nm <= 0 or np_ <= 0:
            raise InvariantViolation("every critical configuration needs downhill moves both ways")
        inv += Fraction(nm * np_, nm + np_)
    return float(1 / inv)


@dataclass(frozen=True)
class PrintedCounts:
    """Closed-form count/prefactor evaluations reported beside the ground truth."""

    c_star_stepwise: int
    c_star_collapsed: float
    k_printed: float
    n_plus_printed: int
    delta: int
    epsilon: int


def counts_printed(n: int, h: float) -> PrintedCounts:
    """Evaluate the stepwise construction product and the collapsed constants.

    The stepwise product multiplies out the choices in the sub-cube-chain
    construction (shrinking sub-cubes, external coordinates, final vertex);
    the collapsed forms are the fully simplified constants.  These are
    report rows only and never arbitrate ground truth.
    """
    check_dim(n)
    profile = gamma_star_closed(n, h)
    hf = Fraction(float(h))
    nh = n - hf
    delta = profile.delta
    if delta == 1:
        stepwise = 1 << n
    else:
        dims = [_ceil_frac(nh - 2 * i) for i in range(1, delta)]
        stepwise = math.comb(n, dims[0]) * (1 << (n - dims[0])) * (n - dims[0])
        for prev, cur in zip(dims, dims[1:]):
            stepwise *= 8 * math.comb(prev, cur)
        stepwise *= 1 << dims[-1]
    d1 = _ceil_frac(nh - 2)
    d_last = _ceil_frac(nh - 2 * delta + 2)
    collapsed = math.nan
    if 0 <= n - d1 - 1 and d_last > 0:
        collapsed = float(
            Fraction(math.factorial(n)) * Fraction(2) ** (n - 4)
            / (math.factorial(n - d1 - 1) * d_last)
        )
    k_printed = float(
        Fraction(math.factorial(math.ceil(Fraction(float(h)))))
        / (Fraction(math.factorial(n)) * Fraction(2) ** (n - 4) * (3 - profile.epsilon))
    )
    return PrintedCounts(
        c_star_stepwise=stepwise,
        c_star_collapsed=collapsed,
        k_printed=k_printed,
        n_plus_printed=d_last,
        delta=delta,
        epsilon=profile.epsilon,
    )


def classify_state(index: FiltrationIndex, profile: BarrierProfile, xi: Config) -> str:
    """Partition label for one state: 'S_minus', 'S_plus', 'C_star' or 'other'.

    For an admissible field, every state whose bottleneck to all-minus is at
    most the saddle falls in the first three classes; 'other' only occurs
    above the saddle.
    """
    if xi.n != index.n:
        raise ParameterError("configuration dimension does not match the index")
    h = index.params.h
    key_star = profile.saddle.key(h)
    p = index.pos[xi.bits]
    key_minus = int(index.sorted_keys[index.phi_to_minus_pos()[p]])
    key_plus = int(index.sorted_keys[index.phi_to_plus_pos()[p]])
    if key_minus < key_star:
        return "S_minus"
    if key_plus < key_star:
        return "S_plus"
    ev = index.state_energy(xi.bits)
    if ev.s == profile.k_star and ev.key(h) == key_star:
        return "C_star"
    return "other"


@dataclass
class CriticalReport:
    """Full critical-structure report for one (n, h)."""

    n: int
    h: float
    profile: BarrierProfile
    c_star: list[Config]
    p_star: list[Config] | None
    b_star: list[Config] | None
    counts: list[tuple[int, int]]
    n_minus: int | None
    n_plus: int | None
    h2_holds: bool
    k_variational: float
    printed: PrintedCounts
    wells_checked: bool

    @property
    def c_star_size(self) -> int:
        return len(self.c_star)

    def k_printed_matches(self, rel: float = 1e-9) -> bool:
        return math.isclose(self.k_variational, self.printed.k_printed, rel_tol=rel)

    def stepwise_matches(self) -> bool:
        return self.printed.c_star_stepwise == self.c_star_size

    def collapsed_matches(self) -> bool:
        return float(self.printed.c_star_collapsed) == float(self.c_star_size)


def critical_report(n: int, h: float, index: FiltrationIndex | None = None,
                    allow_degenerate: bool = False) -> CriticalReport:
    """Assemble the critical-set report, building a filtration when possible.

    At n <= 4 the definitional P*/B* scan runs and cross-validates the
    flip-sign neighbour counts; at n = 5 only the flip-sign route is
    available and the wells certificate is recorded as unchecked.
    """
    params = ModelParams(n, h, allow_degenerate=allow_degenerate)
    profile = gamma_star_closed(n, h)
    c_star = c_star_enumerate(n, h)
    p_star = b_star = None
    wells = None
    wells_checked = False
    if index is None and n <= 4:
        index = FiltrationIndex(params)
    if index is not None:
        if index.params.h != params.h or index.n != n:
            raise ParameterError("filtration index does not match (n, h)")
        p_star, b_star = p_star_b_star(index, c_star)
        wells = wells_scan(index, profile)
        wells_checked = True
    counts = [neighbor_counts(c, params, p_star, b_star) for c in c_star]
    h2 = h2_check(counts)
    k_var = prefactor_variational(c_star, counts, wells)
    n_minus = counts[0][0] if h2 else None
    n_plus = counts[0][1] if h2 else None
    return CriticalReport(
        n=n, h=float(h), profile=profile, c_star=c_star,
        p_star=p_star, b_star=b_star, counts=counts,
        n_minus=n_minus, n_plus=n_plus, h2_holds=h2,
        k_variational=k_var, printed=counts_printed(n, h),
        wells_checked=wells_checked,
    )
