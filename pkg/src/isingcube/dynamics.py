"""Continuous-time Glauber dynamics: exact solvers and kinetic Monte Carlo.

Single-spin-flip rates are ``exp(-beta * max(0, dH))``, which makes the
chain reversible for the Gibbs measure.  For n <= 4 the full state space is
small enough to solve expected hitting times, committors and absorption
probabilities exactly; for larger n an event-driven simulator samples
trajectories with a segment-tree rate index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels, landscape
from ._rng import derive_replica_seed
from .errors import BudgetError, CapabilityError, ParameterError, PrecisionError
from .energy import ModelParams, STATE_SPACE_MAX_DIM, flip_delta, state_tables
from .hypercube import Config
from .solvers import FlipStencil, StencilSolver

#: expected-event estimates above this are refused by default
DEFAULT_EVENT_BUDGET = 1e10
#: per-replica safety valve; practically unreachable below the budget
DEFAULT_MAX_EVENTS = 10**10


def rate_tables(params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Per-degree flip rates: (vacant-site table, occupied-site table).

    Index d is the occupied-neighbour count of the flipping vertex; adding a
    vertex costs ``n - 2d - h``, removing one costs ``2d - n + h``.
    """
    n, h, beta = params.n, params.h, params.beta
    d = np.arange(n + 1, dtype=np.float64)
    dh_vac = n - 2.0 * d - h
    dh_occ = 2.0 * d - n + h
    vac = np.exp(-beta * np.maximum(0.0, dh_vac))
    occ = np.exp(-beta * np.maximum(0.0, dh_occ))
    return vac, occ


def flip_rate(config: Config, v: int, params: ModelParams) -> float:
    """Rate of flipping vertex v: exp(-beta * [dH]_+); 1 for downhill or flat moves."""
    dh = flip_delta(config, v, params).value(params.h)
    return math.exp(-params.beta * max(0.0, dh))


@dataclass(frozen=True)
class RateModel:
    """Transition-rate rule bound to one parameter set."""

    params: ModelParams

    def rate(self, config: Config, v: int) -> float:
        return flip_rate(config, v, self.params)

    def tables(self) -> tuple[np.ndarray, np.ndarray]:
        return rate_tables(self.params)


# ---------------------------------------------------------------------------
# exact solvers on the full state space (n <= 4)
# ---------------------------------------------------------------------------


@lru_cache(maxsize=16)
def _neighbor_vertex_masks(n: int) -> tuple[int, ...]:
    nv = 1 << n
    out = []
    for v in range(nv):
        m = 0
        for i in range(n):
            m |= 1 << (v ^ (1 << i))
        out.append(m)
    return tuple(out)


def _check_solver_dim(n: int) -> None:
    if n > STATE_SPACE_MAX_DIM:
        raise CapabilityError(f"exact state-space solvers capped at n={STATE_SPACE_MAX_DIM}")


def _restricted_stencil(params: ModelParams, absorbing: tuple[int, ...]):
    """Stencil of the negated generator restricted to non-absorbing states.

    Rows/columns are ordered by (occupied count, bitmask); returns
    (included_states, index_of, stencil) where index_of maps a state to its
    row, or -1 for absorbing states.
    """
    n = params.n
    _check_solver_dim(n)
    nstates = 1 << (1 << n)
    nv = 1 << n
    sizes, _ = state_tables(n)
    excluded = np.zeros(nstates, dtype=bool)
    for a in absorbing:
        excluded[a] = True
    states = np.arange(nstates, dtype=np.int64)
    inc = states[~excluded]
    order = np.lexsort((inc, sizes[inc]))
    included = inc[order]
    index_of = np.full(nstates, -1, dtype=np.int64)
    index_of[included] = np.arange(included.shape[0])

    h, beta = params.h, params.beta
    masks = _neighbor_vertex_masks(n)
    diag = np.zeros(included.shape[0], dtype=np.float64)
    coefs = np.zeros((nv, included.shape[0]), dtype=np.float64)
    cols = np.full((nv, included.shape[0]), -1, dtype=np.int64)
    for v in range(nv):
        d = np.bitwise_count(np.bitwise_and(included, masks[v])).astype(np.float64)
        occupied = (included >> v) & 1
        dh = np.where(occupied == 1, 2.0 * d - n + h, n - 2.0 * d - h)
        rate = np.exp(-beta * np.maximum(0.0, dh))
        nb = included ^ (1 << v)
        col = index_of[nb]
        diag += rate
        keep = col >= 0
        coefs[v][keep] = -rate[keep]
        cols[v][keep] = col[keep]
    return included, index_of, FlipStencil(diag=diag, coefs=coefs, cols=cols)


def _rate_into(params: ModelParams, index_of: np.ndarray, size: int, target: int) -> np.ndarray:
    """Column of rates from each included state into one absorbing target."""
    n = params.n
    h, beta = params.h, params.beta
    masks = _neighbor_vertex_masks(n)
    out = np.zeros(size, dtype=np.float64)
    for v in range(1 << n):
        src = target ^ (1 << v)
        i = int(index_of[src])
        if i < 0:
            continue
        d = int(src & masks[v]).bit_count()
        if (src >> v) & 1:
            dh = 2.0 * d - n + h
        else:
            dh = n - 2.0 * d - h
        out[i] += math.exp(-beta * max(0.0, dh))
    return out


def _first_step_distribution(params: ModelParams, start: int) -> list[tuple[int, float]]:
    """Jump-chain law out of ``start``: [(neighbour state, probability)]."""
    n = params.n
    h, beta = params.h, params.beta
    masks = _neighbor_vertex_masks(n)
    rates = []
    for v in range(1 << n):
        d = int(start & masks[v]).bit_count()
        if (start >> v) & 1:
            dh = 2.0 * d - n + h
        else:
            dh = n - 2.0 * d - h
        rates.append((start ^ (1 << v), math.exp(-beta * max(0.0, dh))))
    total = sum(r for _, r in rates)
    return [(s, r / total) for s, r in rates]


def resolve_precision(params: ModelParams, precision: str = "auto") -> str:
    """Pick double vs extended mode: extended once exp(beta * barrier) > 1e12."""
    if precision in ("double", "extended"):
        return precision
    if precision != "auto":
        raise ParameterError(f"unknown precision mode {precision!r}")
    profile = landscape.gamma_star_closed(params.n, params.h)
    return "extended" if params.beta * profile.gamma_star > math.log(1e12) else "double"


@dataclass
class HittingSolution:
    """Expected hitting times of the all-plus state from every configuration."""

    params: ModelParams
    times: np.ndarray  # indexed by state bitmask; 0 at the target
    residual: float
    mode: str
    iterations: int

    @property
    def expected_from_minus(self) -> float:
        return float(self.times[0])

    def time_of(self, config: Config) -> float:
        return float(self.times[config.bits])


def exact_expected_hitting(params: ModelParams, precision: str = "auto",
                           residual_bound: float = 1e-8) -> HittingSolution:
    """Solve the linear system for expected times to reach the all-plus state.

    One equation per state xi != all-plus: the rate-weighted sum of
    neighbouring time differences equals -1; the target time is 0.  The
    reported residual is the certified componentwise backward error of the
    solve, evaluated in double-double arithmetic.
    """
    _check_solver_dim(params.n)
    full = (1 << (1 << params.n)) - 1
    mode = resolve_precision(params, precision)
    included, _, stencil = _restricted_stencil(params, (full,))
    sol = StencilSolver(stencil).solve(np.ones(included.shape[0]), mode=mode,
                                       required=residual_bound)
    if np.any(sol.x <= 0):
        raise PrecisionError("hitting times must be positive; solve is not trustworthy")
    times = np.zeros(full + 1, dtype=np.float64)
    times[included] = sol.x
    return HittingSolution(params=params, times=times, residual=sol.backward_error,
                           mode=sol.mode, iterations=sol.iterations)


@dataclass
class CommittorSolution:
    """Harmonic committor q(xi) = P_xi(reach all-plus before all-minus)."""

    params: ModelParams
    q: np.ndarray  # indexed by state; q[minus] = 0, q[plus] = 1
    residual: float
    mode: str
    exit_committor_minus: float  # P_minus(hit all-plus before returning to all-minus)


def committor(params: ModelParams, precision: str = "auto",
              residual_bound: float = 1e-8) -> CommittorSolution:
    """Solve the Dirichlet problem with boundary 0 at all-minus and 1 at all-plus.

    The committor at the all-minus state itself is pinned to 0; the
    vacate-first quantity (probability of reaching all-plus before returning)
    is the rate-weighted first-step average, reported separately.
    """
    _check_solver_dim(params.n)
    full = (1 << (1 << params.n)) - 1
    mode = resolve_precision(params, precision)
    included, index_of, stencil = _restricted_stencil(params, (0, full))
    b = _rate_into(params, index_of, included.shape[0], full)
    sol = StencilSolver(stencil).solve(b, mode=mode, required=residual_bound)
    q = np.zeros(full + 1, dtype=np.float64)
    q[included] = np.clip(sol.x, 0.0, 1.0)
    q[full] = 1.0
    exit_q = sum(p * q[s] for s, p in _first_step_distribution(params, 0))
    return CommittorSolution(params=params, q=q, residual=sol.backward_error,
                             mode=sol.mode, exit_committor_minus=float(exit_q))


def absorption_probabilities(params: ModelParams, targets: list[int],
                             extra_absorbing: tuple[int, ...] = (),
                             residual_bound: float = 1e-8):
    """P(absorbed at each target) for every transient state.

    ``targets`` and ``extra_absorbing`` together form the absorbing set;
    returns (index_of, matrix U) with U[i, j] the probability that transient
    state i is absorbed at targets[j].
    """
    absorbing = tuple(targets) + tuple(extra_absorbing)
    included, index_of, stencil = _restricted_stencil(params, absorbing)
    U = np.empty((included.shape[0], len(targets)), dtype=np.float64)
    if included.shape[0] == 0:
        return index_of, U
    solver = StencilSolver(stencil)
    for j, t in enumerate(targets):
        b = _rate_into(params, index_of, included.shape[0], t)
        sol = solver.solve(b, mode="double", required=residual_bound)
        U[:, j] = np.clip(sol.x, 0.0, 1.0)
    return index_of, U


def gate_probability(params: ModelParams, c_star: list[Config],
                     precision: str = "auto") -> float:
    """P(visit the critical set before all-plus | all-plus reached before returning).

    Computed exactly in the committor-conditioned chain started from
    all-minus with the vacate-first convention.
    """
    _check_solver_dim(params.n)
    com = committor(params, precision=precision)
    q = com.q
    targets = sorted(c.bits for c in c_star)
    full = (1 << (1 << params.n)) - 1
    index_of, U = absorption_probabilities(params, targets, extra_absorbing=(0, full))
    numerator = 0.0
    for s, p in _first_step_distribution(params, 0):
        if s == full:
            continue
        for j, t in enumerate(targets):
            if s == t:
                numerator += p * q[t]
                break
        else:
            i = int(index_of[s])
            if i >= 0:
                numerator += p * float(U[i] @ q[targets])
    denominator = com.exit_committor_minus
    if denominator <= 0:
        raise PrecisionError("vanishing exit committor; cannot condition")
    return float(numerator / denominator)


@dataclass
class FirstHitDistribution:
    """Distribution of the first critical-set element visited, from all-minus.

    Exact variant: absorption probabilities with the critical set and
    all-plus absorbing, conditioned on the critical set being hit first.
    Monte Carlo variant: empirical tallies under the same stopping rule.
    """

    params: ModelParams
    targets: tuple[int, ...]
    probabilities: np.ndarray
    p_cstar_first: float
    method: str
    replicas: int | None = None
    seed: int | None = None
    counts: np.ndarray | None = None
    plus_first: int | None = None

    def max_uniform_deviation(self) -> float:
        u = 1.0 / len(self.targets)
        return float(np.max(np.abs(self.probabilities - u)))


def first_hit_distribution(params: ModelParams, c_star: list[Config],
                           replicas: int | None = None, seed: int = 0,
                           max_events: int = DEFAULT_MAX_EVENTS,
                           backend: str | None = None) -> FirstHitDistribution:
    """First entry point into the critical set, exact or by simulation.

    With ``replicas=None`` the absorbing-chain linear system is solved
    exactly (n <= 4); otherwise that many independent trajectories are run
    from all-minus until they enter the critical set or all-plus.
    """
    targets = sorted(c.bits for c in c_star)
    if not targets:
        raise ParameterError("critical set must be nonempty")
    full = (1 << (1 << params.n)) - 1
    if replicas is None:
        _check_solver_dim(params.n)
        index_of, U = absorption_probabilities(params, targets, extra_absorbing=(full,))
        row = U[int(index_of[0])]
        total = float(row.sum())
        if total <= 0:
            raise PrecisionError("no probability mass reaches the critical set")
        return FirstHitDistribution(
            params=params, targets=tuple(targets),
            probabilities=row / total, p_cstar_first=min(1.0, total), method="exact",
        )

    engine = kernels.kmc_engine(
        params.n, *rate_tables(params),
        start_spins=np.zeros(1 << params.n, dtype=np.int8),
        target_masks=targets, target_counts=(1 << params.n,),
        backend=backend,
    )
    counts = np.zeros(len(targets), dtype=np.int64)
    plus_first = 0
    for r in range(replicas):
        status, idx, _, _, _ = engine.run(derive_replica_seed(seed, r), max_events)
        if status == kernels.HIT_MASK:
            counts[idx] += 1
        elif status == kernels.HIT_COUNT:
            plus_first += 1
        else:
            raise BudgetError(f"replica {r} truncated after {max_events} events")
    hit = int(counts.sum())
    if hit == 0:
        raise PrecisionError("no replica reached the critical set; cannot normalise")
    return FirstHitDistribution(
        params=params, targets=tuple(targets),
        probabilities=counts / hit, p_cstar_first=hit / replicas, method="mc",
        replicas=replicas, seed=seed, counts=counts, plus_first=plus_first,
    )


# ---------------------------------------------------------------------------
# kinetic Monte Carlo front ends
# ---------------------------------------------------------------------------


@dataclass
class KmcSample:
    """One trajectory outcome: elapsed time, event count and the target hit."""

    time: float
    events: int
    target_index: int | None
    truncated: bool
    final_size: int


def estimate_events_per_replica(params: ModelParams) -> float:
    """Leading-exponential-order estimate of events until the all-plus hit."""
    profile = landscape.gamma_star_closed(params.n, params.h)
    return math.exp(min(700.0, params.beta * profile.gamma_star))


def kmc_run(start: Config, targets: list[Config], params: ModelParams,
            seed: int, max_events: int = DEFAULT_MAX_EVENTS,
            backend: str | None = None) -> KmcSample:
    """Simulate one trajectory from ``start`` until any target is hit.

    Targets are checked only after a flip (vacate-first convention), so
    ``start`` itself appearing among the targets means "first return".
    Exceeding ``max_events`` yields a flagged truncation, not an exception.
    """
    if not targets:
        raise ParameterError("target list must be nonempty")
    n = params.n
    if start.n != n or any(t.n != n for t in targets):
        raise ParameterError("configuration dimension does not match parameters")
    nv = 1 << n
    full_bits = (1 << nv) - 1
    mask_targets: list[tuple[int, int]] = []  # (bits, original position)
    count_targets: list[tuple[int, int]] = []  # (count, original position)
    for j, t in enumerate(targets):
        if t.bits == full_bits:
            count_targets.append((nv, j))
        elif t.bits == 0:
            count_targets.append((0, j))
        elif n <= 6:
            mask_targets.append((t.bits, j))
        else:
            raise CapabilityError("general bitmask targets require n <= 6")
    mask_targets.sort()
    spins = np.zeros(nv, dtype=np.int8)
    for v in start.vertices():
        spins[v] = 1
    engine = kernels.kmc_engine(
        n, *rate_tables(params), start_spins=spins,
        target_masks=[m for m, _ in mask_targets],
        target_counts=[c for c, _ in count_targets],
        backend=backend,
    )
    status, idx, t, events, final_count = engine.run(seed, max_events)
    if status == kernels.HIT_MASK:
        target_index = mask_targets[idx][1]
    elif status == kernels.HIT_COUNT:
        target_index = count_targets[idx][1]
    else:
        target_index = None
    return KmcSample(time=t, events=events, target_index=target_index,
                     truncated=status == kernels.TRUNCATED, final_size=final_count)


@dataclass
class SimulationStats:
    """Aggregate over independent replicas of the all-plus hitting time."""

    params: ModelParams
    replicas: int
    seed: int
    mean_time: float
    stderr: float
    total_events: int
    mean_events: float
    truncated: int

    def within(self, reference: float, k_sigma: float = 3.0) -> bool:
        return abs(self.mean_time - reference) <= k_sigma * self.stderr


def simulate_hitting(params: ModelParams, replicas: int, seed: int,
                     max_events: int = DEFAULT_MAX_EVENTS,
                     event_budget: float = DEFAULT_EVENT_BUDGET,
                     backend: str | None = None) -> SimulationStats:
    """Replicated simulation of the all-minus to all-plus crossover time.

    Refuses up front (BudgetError) when the leading-order event estimate
    exceeds ``event_budget``.  Replica seeds derive deterministically from
    the master seed, so aggregation is order-independent and reproducible.
    """
    if replicas < 2:
        raise ParameterError("need at least 2 replicas for a standard error")
    estimate = estimate_events_per_replica(params) * replicas
    if estimate > event_budget:
        raise BudgetError(
            f"estimated {estimate:.3e} events exceeds the budget {event_budget:.3e}; "
            "raise the budget explicitly to force the run"
        )
    n = params.n
    nv = 1 << n
    engine = kernels.kmc_engine(
        n, *rate_tables(params), start_spins=np.zeros(nv, dtype=np.int8),
        target_counts=(nv,), backend=backend,
    )
    times = []
    total_events = 0
    truncated = 0
    for r in range(replicas):
        status, _, t, events, _ = engine.run(derive_replica_seed(seed, r), max_events)
        total_events += events
        if status == kernels.TRUNCATED:
            truncated += 1
        else:
            times.append(t)
    if len(times) < 2:
        raise BudgetError("too many truncated replicas to form an estimate")
    arr = np.asarray(times)
    mean = float(arr.mean())
    stderr = float(arr.std(ddof=1) / math.sqrt(len(arr)))
    return SimulationStats(params=params, replicas=replicas, seed=seed,
                           mean_time=mean, stderr=stderr,
                           total_events=total_events,
                           mean_events=total_events / replicas,
                           truncated=truncated)


def asymptotic_report(params: ModelParams, betas: list[float],
                      gamma_star: float | None = None,
                      k_reference: float | None = None,
                      precision: str = "auto") -> list[dict]:
    """Rows (beta, E[tau], exp(-beta*Gamma)E[tau], ratio to K) for each beta.

    Gamma and K default to the library's own ground truth (closed-form
    barrier and the variational prefactor).
    """
    if gamma_star is None:
        gamma_star = landscape.gamma_star_closed(params.n, params.h).gamma_star
    if k_reference is None:
        from .critical import critical_report
        k_reference = critical_report(params.n, params.h,
                                      allow_degenerate=params.allow_degenerate).k_variational
    rows = []
    for beta in betas:
        p = params.with_beta(beta)
        sol = exact_expected_hitting(p, precision=precision)
        expected = sol.expected_from_minus
        scaled = math.exp(-beta * gamma_star) * expected
        rows.append({
            "beta": beta,
            "expected_hitting": expected,
            "scaled": scaled,
            "ratio_to_k": scaled / k_reference if k_reference else math.nan,
            "residual": sol.residual,
            "mode": sol.mode,
        })
    return rows
