"""Glauber rates, exact hitting/committor solvers, KMC sampling, asymptotics."""

import math
import random

import numpy as np
import pytest

from isingcube.errors import BudgetError, ParameterError, PrecisionError
from isingcube.energy import ModelParams, gibbs_log_weight
from isingcube.hypercube import Config
from isingcube.critical import c_star_enumerate
from isingcube.landscape import gamma_star_closed
from isingcube.dynamics import (
    RateModel,
    asymptotic_report,
    committor,
    exact_expected_hitting,
    first_hit_distribution,
    flip_rate,
    gate_probability,
    kmc_run,
    rate_tables,
    resolve_precision,
    simulate_hitting,
)


def dense_hitting_oracle(n, h, beta):
    """Naive dense-matrix expected hitting time of all-plus from all-minus."""
    nv = 1 << n
    nstates = 1 << nv
    full = nstates - 1

    def boundary(x):
        e = 0
        for a in range(nv):
            if (x >> a) & 1:
                for i in range(n):
                    if not (x >> (a ^ (1 << i))) & 1:
                        e += 1
        return e

    L = np.zeros((nstates, nstates))
    for s in range(nstates):
        for v in range(nv):
            t = s ^ (1 << v)
            dh = (boundary(t) - boundary(s)) - h * (t.bit_count() - s.bit_count())
            L[s, t] = math.exp(-beta * max(0.0, dh))
    np.fill_diagonal(L, -L.sum(axis=1))
    keep = [s for s in range(nstates) if s != full]
    t = np.linalg.solve(-L[np.ix_(keep, keep)], np.ones(len(keep)))
    return t[0]


def test_flip_rate_examples():
    p = ModelParams(3, 0.6, 2.0, allow_degenerate=True)
    # downhill: removing an isolated occupied vertex
    lone = Config.from_vertices(3, [0, 7])
    assert flip_rate(lone, 7, p) == 1.0
    # adding an isolated vertex costs n - h
    assert flip_rate(Config.empty(3), 4, p) == pytest.approx(math.exp(-2.0 * (3 - 0.6)))
    p0 = ModelParams(3, 0.6, 0.0, allow_degenerate=True)
    for v in range(8):
        assert flip_rate(Config.from_vertices(3, [1, 2]), v, p0) == 1.0


def test_rates_in_unit_interval_and_model_wrapper():
    p = ModelParams(3, 0.5 + 1e-4, 1.7)
    model = RateModel(p)
    rng = random.Random(6)
    for _ in range(200):
        cfg = Config(3, rng.getrandbits(8))
        v = rng.randrange(8)
        r = model.rate(cfg, v)
        assert 0 < r <= 1.0
    vac, occ = model.tables()
    assert vac.shape == (4,) and occ.shape == (4,)


def test_detailed_balance():
    rng = random.Random(12)
    for n in (2, 3):
        p = ModelParams(n, 0.5 + 1e-4, 1.3)
        for _ in range(5000):
            bits = rng.getrandbits(1 << n)
            v = rng.randrange(1 << n)
            a = Config(n, bits)
            b = a.flipped(v)
            lhs = gibbs_log_weight(a, p) + math.log(flip_rate(a, v, p))
            rhs = gibbs_log_weight(b, p) + math.log(flip_rate(b, v, p))
            assert abs(lhs - rhs) < 1e-10


def test_exact_hitting_n1_closed_form():
    for beta in (1.0, 5.0, 20.0):
        p = ModelParams(1, 0.5, beta, allow_degenerate=True)
        sol = exact_expected_hitting(p)
        expect = math.exp(beta * 0.5) + 1.0
        assert abs(sol.expected_from_minus - expect) <= 1e-12 * expect
        # the singleton rows come out of the same solve, consistently
        single = sol.times[1]
        assert single == pytest.approx(0.5 + sol.expected_from_minus / 2, rel=1e-12)
        assert sol.residual < 1e-8


def test_exact_hitting_against_dense_oracle():
    for n, h, beta in ((2, 0.7, 0.0), (2, 0.7, 1.0), (3, 0.5 + 1e-4, 2.0)):
        p = ModelParams(n, h, beta)
        sol = exact_expected_hitting(p)
        assert sol.expected_from_minus == pytest.approx(dense_hitting_oracle(n, h, beta), rel=1e-12)


def test_exact_hitting_positive_and_monotone_reference_tail():
    h = 0.5 + 1e-4
    p = ModelParams(3, h, 4.0)
    sol = exact_expected_hitting(p)
    assert np.all(sol.times[:-1] > 0)
    profile = gamma_star_closed(3, h)
    prefix = 0
    tail = []
    for k in range(profile.k_star, 9):
        prefix = (1 << k) - 1
        tail.append(sol.times[prefix])
    assert all(a >= b for a, b in zip(tail, tail[1:]))


def test_precision_modes():
    h = 0.5 + 1e-4
    assert resolve_precision(ModelParams(3, h, 6.0)) == "double"
    assert resolve_precision(ModelParams(3, h, 8.0)) == "extended"
    assert resolve_precision(ModelParams(3, h, 8.0), "double") == "double"
    with pytest.raises(ParameterError):
        resolve_precision(ModelParams(3, h, 1.0), "quad")
    with pytest.raises(PrecisionError):
        exact_expected_hitting(ModelParams(2, 0.7, 1.0), residual_bound=1e-40)


def test_scaled_ratio_converges_toward_prefactor():
    # The scaled crossover time approaches the prefactor; the deviation from
    # the limit shrinks with beta (the value itself dips below the limit near
    # beta ~ 6.5 and re-approaches from below, so only |deviation| is
    # monotone on wide beta ranges).
    h = 0.5 + 1e-4
    gamma = gamma_star_closed(3, h).gamma_star
    k_ref = 1 / 16
    devs = []
    for beta in (4.0, 6.0, 8.0):
        sol = exact_expected_hitting(ModelParams(3, h, beta))
        scaled = math.exp(-beta * gamma) * sol.expected_from_minus
        devs.append(abs(scaled / k_ref - 1.0))
    assert devs[0] > devs[1] > devs[2]
    assert devs[-1] < 0.01
    # on the pre-dip range the scaled value itself decreases monotonically
    vals = []
    for beta in (3.0, 4.0, 5.0, 6.0):
        sol = exact_expected_hitting(ModelParams(3, h, beta))
        vals.append(math.exp(-beta * gamma) * sol.expected_from_minus)
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_committor_small_cases():
    p = ModelParams(1, 0.5, 2.0, allow_degenerate=True)
    com = committor(p)
    assert com.q[0] == 0.0 and com.q[3] == 1.0
    assert com.q[1] == pytest.approx(0.5) and com.q[2] == pytest.approx(0.5)
    assert com.exit_committor_minus == pytest.approx(0.5)

    # harmonicity at interior states for n=2
    p2 = ModelParams(2, 0.7, 1.1)
    com2 = committor(p2)
    from isingcube.dynamics import _first_step_distribution

    for s in range(1, 15):
        expected = sum(pr * com2.q[t] for t, pr in _first_step_distribution(p2, s))
        assert com2.q[s] == pytest.approx(expected, abs=1e-10)


def test_gate_probability_examples():
    p1 = ModelParams(1, 0.5, 2.0, allow_degenerate=True)
    assert gate_probability(p1, c_star_enumerate(1, 0.5)) == pytest.approx(1.0)

    h = 0.5 + 1e-4
    cs = c_star_enumerate(3, h)
    gates = [gate_probability(ModelParams(3, h, b), cs) for b in (2.0, 4.0, 6.0)]
    assert gates[0] < gates[1] < gates[2]
    assert gates[2] > 0.95


def test_first_hit_exact():
    p1 = ModelParams(1, 0.5, 2.0, allow_degenerate=True)
    fh = first_hit_distribution(p1, c_star_enumerate(1, 0.5))
    assert fh.probabilities == pytest.approx([0.5, 0.5])
    h = 0.5 + 1e-4
    fh3 = first_hit_distribution(ModelParams(3, h, 2.0), c_star_enumerate(3, h))
    assert fh3.probabilities.sum() == pytest.approx(1.0)
    assert fh3.p_cstar_first > 0.9
    # the group acting on the cube fixes both poles, so the exact law is uniform
    assert fh3.max_uniform_deviation() < 1e-12


def test_first_hit_mc_matches_exact():
    h = 0.5 + 1e-4
    p = ModelParams(3, h, 2.0)
    cs = c_star_enumerate(3, h)
    fh = first_hit_distribution(p, cs, replicas=20000, seed=99)
    assert fh.method == "mc"
    assert fh.counts.sum() + fh.plus_first == 20000
    exact = first_hit_distribution(p, cs)
    expected = exact.probabilities * fh.counts.sum()
    chi2 = float(((fh.counts - expected) ** 2 / expected).sum())
    from scipy.stats import chi2 as chi2_dist

    assert chi2 < chi2_dist.ppf(0.999, len(cs) - 1)


def test_kmc_run_determinism_and_truncation():
    p = ModelParams(2, 0.7, 1.0)
    full = Config.full(2)
    s1 = kmc_run(Config.empty(2), [full], p, seed=99)
    s2 = kmc_run(Config.empty(2), [full], p, seed=99)
    assert s1 == s2
    assert s1.target_index == 0 and not s1.truncated

    trunc = kmc_run(Config.empty(2), [full], p, seed=99, max_events=1)
    assert trunc.truncated and trunc.target_index is None

    # first-return to all-minus from a singleton start
    ret = kmc_run(Config.from_vertices(2, [0]), [Config.empty(2), full], p, seed=7)
    assert ret.target_index in (0, 1)

    with pytest.raises(ParameterError):
        kmc_run(Config.empty(2), [], p, seed=1)


def test_simulate_hitting_statistics():
    p = ModelParams(1, 0.5, 2.0, allow_degenerate=True)
    st = simulate_hitting(p, 4000, seed=42)
    assert st.within(math.e + 1)
    again = simulate_hitting(p, 4000, seed=42)
    assert again.mean_time == st.mean_time and again.stderr == st.stderr
    other = simulate_hitting(p, 4000, seed=43)
    assert other.mean_time != st.mean_time


def test_simulate_budget_refusal():
    with pytest.raises(BudgetError):
        simulate_hitting(ModelParams(3, 0.5 + 1e-4, 20.0), 1000, seed=1)


def test_asymptotic_report_rows():
    h = 0.5 + 1e-4
    rows = asymptotic_report(ModelParams(2, 0.7), [0.0, 1.0])
    assert rows[0]["beta"] == 0.0
    assert rows[0]["expected_hitting"] == pytest.approx(16 / 3, rel=1e-12)
    assert {"beta", "expected_hitting", "scaled", "ratio_to_k", "residual", "mode"} <= set(rows[0])
    # n=1 ratio closed form: 1 + exp(-beta(1-h))
    rows1 = asymptotic_report(ModelParams(1, 0.5, allow_degenerate=True), [1.0, 2.0, 3.0])
    for r in rows1:
        assert r["ratio_to_k"] == pytest.approx(1 + math.exp(-r["beta"] * 0.5), rel=1e-10)
    ratios = [r["ratio_to_k"] for r in rows1]
    assert ratios == sorted(ratios, reverse=True)
