"""Hamiltonian arithmetic, exact energy pairs, Gibbs weights, admissibility."""

import math
import random
from fractions import Fraction

import pytest

from isingcube.errors import ParameterError
from isingcube.energy import (
    EnergyValue,
    ModelParams,
    _best_rational_margin,
    _brute_rational_margin,
    energy_gap,
    flip_delta,
    g_profile,
    gibbs_log_weight,
    hamiltonian,
    log_partition_function,
    partition_function,
    state_energy_keys,
    state_tables,
    validate_field,
)
from isingcube.hypercube import Config, automorphism_group


def test_hamiltonian_examples():
    p = ModelParams(2, 0.7, allow_degenerate=True)
    assert hamiltonian(Config.empty(2), p) == pytest.approx(-2 + 2 * 0.7)
    assert hamiltonian(Config.full(2), p) == pytest.approx(-2 - 2 * 0.7)
    assert hamiltonian(Config.from_vertices(2, [1]), p) == pytest.approx(0.7)


def test_energy_gap_examples():
    p = ModelParams(3, 0.6, allow_degenerate=True)
    assert energy_gap(Config.empty(3), p) == EnergyValue(0, 0)
    assert energy_gap(Config.from_vertices(3, [0]), p) == EnergyValue(3, 1)
    assert energy_gap(Config.full(3), p) == EnergyValue(0, 8)
    assert energy_gap(Config.full(3), p).value(0.6) == pytest.approx(-8 * 0.6)


def test_energy_gap_consistent_with_hamiltonian():
    rng = random.Random(31)
    for n in (1, 2, 3):
        p = ModelParams(n, 0.37)
        base = hamiltonian(Config.empty(n), p)
        for bits in range(1 << (1 << n)):
            cfg = Config(n, bits)
            gap = energy_gap(cfg, p).value(p.h)
            assert abs((hamiltonian(cfg, p) - base) - gap) < 1e-12
    for n in (8, 14, 20):
        p = ModelParams(n, 1.23)
        base = hamiltonian(Config.empty(n), p)
        for _ in range(20):
            cfg = Config(n, rng.getrandbits(1 << n))
            gap = energy_gap(cfg, p).value(p.h)
            ham = hamiltonian(cfg, p) - base
            assert abs(ham - gap) < 1e-9 * max(1.0, abs(gap))


def test_flip_delta_examples():
    p3 = ModelParams(3, 0.6, allow_degenerate=True)
    assert flip_delta(Config.empty(3), 0, p3).value(0.6) == pytest.approx(3 - 0.6)
    # square with pendant in Q4: removing the pendant costs h - 2
    p4 = ModelParams(4, 0.6, allow_degenerate=True)
    cfg = Config.from_vertices(4, [0, 1, 2, 3, 4])
    assert flip_delta(cfg, 4, p4).value(0.6) == pytest.approx(0.6 - 2)
    # adding the square-completing vertex to a 3-path
    path = Config.from_vertices(3, [0, 1, 2])
    assert flip_delta(path, 3, p3).value(0.6) == pytest.approx(3 - 4 - 0.6)


def test_flip_delta_matches_hamiltonian_difference():
    rng = random.Random(7)
    checks = 0
    while checks < 5000:
        n = rng.randint(1, 8)
        p = ModelParams(n, 0.25 + 0.5 * rng.random() * (n - 0.5))
        cfg = Config(n, rng.getrandbits(1 << n))
        v = rng.randrange(1 << n)
        delta = flip_delta(cfg, v, p).value(p.h)
        diff = hamiltonian(cfg.flipped(v), p) - hamiltonian(cfg, p)
        assert abs(delta - diff) < 1e-12 * max(1.0, abs(diff))
        checks += 1


def test_energy_gap_automorphism_invariant():
    rng = random.Random(13)
    autos = list(automorphism_group(3))
    p = ModelParams(3, 0.8, allow_degenerate=True)
    for _ in range(50):
        cfg = Config(3, rng.getrandbits(8))
        phi = rng.choice(autos)
        assert energy_gap(phi.apply(cfg), p) == energy_gap(cfg, p)


def test_g_profile_examples():
    g = g_profile(3, 0.5)
    assert list(g) == pytest.approx([0, 2.5, 3, 3.5, 2, 2.5, 1, -0.5, -4])
    g15 = g_profile(3, 1.5)
    assert g15.argmax() == 1 and g15[1] == pytest.approx(1.5)
    assert g_profile(4, 0.77)[0] == 0.0


def test_distinct_sizes_distinct_energies_admissible():
    for n in (2, 3):
        h = 0.5 + 1e-4
        keys = state_energy_keys(n, h)
        sizes, _ = state_tables(n)
        seen = {}
        for s in range(1 << (1 << n)):
            k = int(keys[s])
            if k in seen:
                assert sizes[seen[k]] == sizes[s]
            else:
                seen[k] = s


def test_partition_function_beta_zero():
    for n in (1, 2, 3):
        assert partition_function(n, 0.5, 0.0) == pytest.approx(2.0 ** (1 << n))


def test_gibbs_ratio_identity():
    n, h, beta = 2, 0.8, 1.1
    p = ModelParams(n, h, beta, allow_degenerate=True)
    lw_plus = gibbs_log_weight(Config.full(n), p)
    lw_minus = gibbs_log_weight(Config.empty(n), p)
    assert math.exp(lw_plus - lw_minus) == pytest.approx(math.exp(4 * beta * h))


def test_partition_function_n1_explicit():
    h, beta = 0.5, 1.3
    p = ModelParams(1, h, beta, allow_degenerate=True)
    states = [Config.empty(1), Config.from_vertices(1, [0]), Config.from_vertices(1, [1]), Config.full(1)]
    z = sum(math.exp(gibbs_log_weight(c, p)) for c in states)
    assert partition_function(1, h, beta) == pytest.approx(z, rel=1e-12)


def test_gibbs_measure_normalised():
    for n in (1, 2, 3):
        h, beta = 0.7, 0.9
        p = ModelParams(n, h, beta)
        logz = log_partition_function(n, h, beta)
        total = sum(
            math.exp(gibbs_log_weight(Config(n, bits), p) - logz)
            for bits in range(1 << (1 << n))
        )
        assert abs(total - 1.0) < 1e-10


def test_validate_field_examples():
    rep = validate_field(3, 0.5)
    assert not rep.admissible
    assert (rep.witness_a, rep.witness_b) == (1, 2)
    assert rep.margin == 0.0

    rep = validate_field(3, 0.5 + 1e-4, tol=1e-6)
    assert rep.admissible
    assert rep.margin == pytest.approx(2e-4, rel=1e-6)

    rep = validate_field(3, 2.9999)
    assert rep.margin == pytest.approx(1e-4, rel=1e-6)

    with pytest.raises(ParameterError):
        validate_field(3, 5.0)
    with pytest.raises(ParameterError):
        validate_field(3, 0.0)


def test_margin_methods_agree():
    rng = random.Random(41)
    for _ in range(100):
        h = 0.01 + 2.98 * rng.random()
        cf = _best_rational_margin(h, 256)
        brute = _brute_rational_margin(h, 256)
        assert cf[0] == brute[0]


def test_model_params_validation():
    with pytest.raises(ParameterError):
        ModelParams(3, 3.0)
    with pytest.raises(ParameterError):
        ModelParams(3, -0.1)
    with pytest.raises(ParameterError):
        ModelParams(3, 0.5, -1.0)
    p = ModelParams(3, 0.5)
    with pytest.raises(ParameterError):
        p.require_admissible()
    ModelParams(3, 0.5, allow_degenerate=True).require_admissible()
    ModelParams(3, 0.5 + 1e-4).require_admissible()


def test_energy_key_orders_like_float_value():
    rng = random.Random(3)
    h = 0.7312
    for _ in range(200):
        a = EnergyValue(rng.randrange(0, 30), rng.randrange(0, 16))
        b = EnergyValue(rng.randrange(0, 30), rng.randrange(0, 16))
        va, vb = a.value(h), b.value(h)
        if abs(va - vb) > 1e-9:
            assert (a.key(h) < b.key(h)) == (va < vb)
