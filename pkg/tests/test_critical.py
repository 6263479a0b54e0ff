"""Critical droplets, protocritical sets, neighbour counts and the prefactor."""

import random

import pytest

from isingcube.errors import CapabilityError, InvariantViolation, ParameterError
from isingcube.energy import ModelParams
from isingcube.hypercube import Config, orbit_bits
from isingcube.isoperimetry import upsilon
from isingcube.landscape import FiltrationIndex, comm_height, gamma_star_closed
from isingcube.critical import (
    c_star_enumerate,
    classify_state,
    counts_printed,
    critical_report,
    h2_check,
    neighbor_counts,
    p_star_b_star,
    pairwise_non_adjacent,
    prefactor_variational,
)


def test_c_star_sizes():
    assert len(c_star_enumerate(3, 0.5)) == 24
    assert len(c_star_enumerate(4, 0.5)) == 192
    assert len(c_star_enumerate(1, 0.5)) == 2
    with pytest.raises(CapabilityError):
        c_star_enumerate(6, 0.5)


def test_c_star_members_are_critical_shapes():
    cs = c_star_enumerate(3, 0.5)
    assert all(c.size == 3 for c in cs)
    assert upsilon(3, 3).bits in {c.bits for c in cs}


def test_p_star_b_star_structure():
    h = 0.5 + 1e-4
    idx = FiltrationIndex(ModelParams(4, h))
    cs = c_star_enumerate(4, h)
    p_star, b_star = p_star_b_star(idx, cs)
    assert {c.bits for c in p_star} == orbit_bits(upsilon(4, 4).bits, 4)
    assert {c.bits for c in b_star} == orbit_bits(upsilon(4, 6).bits, 4)

    idx1 = FiltrationIndex(ModelParams(1, 0.5, allow_degenerate=True))
    cs1 = c_star_enumerate(1, 0.5)
    p1, b1 = p_star_b_star(idx1, cs1)
    assert [c.bits for c in p1] == [0]
    assert [c.bits for c in b1] == [0b11]


def test_neighbor_counts_examples():
    h4 = 0.5 + 1e-4
    p4 = ModelParams(4, h4)
    idx4 = FiltrationIndex(p4)
    cs4 = c_star_enumerate(4, h4)
    ps, bs = p_star_b_star(idx4, cs4)
    assert neighbor_counts(cs4[0], p4, ps, bs) == (1, 2)

    h3 = 0.5 + 1e-4
    p3 = ModelParams(3, h3)
    idx3 = FiltrationIndex(p3)
    cs3 = c_star_enumerate(3, h3)
    ps3, bs3 = p_star_b_star(idx3, cs3)
    assert neighbor_counts(cs3[0], p3, ps3, bs3) == (2, 1)

    p1 = ModelParams(1, 0.5, allow_degenerate=True)
    assert neighbor_counts(c_star_enumerate(1, 0.5)[0], p1) == (1, 1)


def test_neighbor_counts_rejects_non_critical():
    p = ModelParams(3, 0.5 + 1e-4)
    with pytest.raises(ParameterError):
        neighbor_counts(Config.from_vertices(3, [0, 3, 5]), p)


def test_dual_route_agrees_on_every_element():
    h = 0.5 + 1e-4
    for n in (2, 3):
        p = ModelParams(n, h)
        idx = FiltrationIndex(p)
        cs = c_star_enumerate(n, h)
        ps, bs = p_star_b_star(idx, cs)
        for c in cs:
            neighbor_counts(c, p, ps, bs)  # raises InvariantViolation on mismatch


def test_h2_check():
    assert h2_check([(2, 1)] * 24)
    assert not h2_check([(2, 1), (1, 2)])


def test_prefactor_values():
    assert prefactor_variational(c_star_enumerate(1, 0.5), [(1, 1)] * 2, []) == pytest.approx(1.0)
    assert prefactor_variational(c_star_enumerate(3, 0.5), [(2, 1)] * 24, []) == pytest.approx(1 / 16)
    assert prefactor_variational(c_star_enumerate(4, 0.5), [(1, 2)] * 192, []) == pytest.approx(1 / 128)


def test_prefactor_precondition_errors():
    cs = c_star_enumerate(3, 0.5)
    with pytest.raises(InvariantViolation):
        prefactor_variational(cs, [(2, 1)] * 24, [Config.empty(3)])
    adjacent = [Config.from_vertices(2, [0]), Config.from_vertices(2, [0, 1])]
    with pytest.raises(InvariantViolation):
        prefactor_variational(adjacent, [(1, 1)] * 2, [])
    with pytest.raises(ParameterError):
        prefactor_variational(cs, [(2, 1)] * 5, [])


def test_c_star_pairwise_non_adjacent():
    for n, h in ((3, 0.5), (4, 0.5)):
        assert pairwise_non_adjacent(c_star_enumerate(n, h))


def test_prefactor_invariant_under_relabelling():
    cs = c_star_enumerate(3, 0.5)
    counts = [(2, 1)] * len(cs)
    shuffled = list(zip(cs, counts))
    random.Random(5).shuffle(shuffled)
    k = prefactor_variational([c for c, _ in shuffled], [c for _, c in shuffled], [])
    assert k == pytest.approx(1 / 16)


def test_counts_printed_examples():
    pc = counts_printed(4, 0.5)
    assert pc.c_star_stepwise == 192
    assert pc.c_star_collapsed == pytest.approx(12.0)
    pc = counts_printed(3, 0.5)
    assert pc.c_star_stepwise == 48  # double-counts ambiguous edge+vertex splits
    pc = counts_printed(1, 0.5)
    assert pc.k_printed == pytest.approx(4.0)
    assert pc.c_star_stepwise == 2


def test_critical_report_assembly():
    rep = critical_report(3, 0.5, allow_degenerate=True)
    assert rep.c_star_size == 24
    assert (rep.n_minus, rep.n_plus) == (2, 1)
    assert rep.h2_holds
    assert rep.k_variational == pytest.approx(1 / 16)
    assert rep.wells_checked
    assert not rep.k_printed_matches()
    assert rep.stepwise_matches() is False  # 48 != 24
    assert len(rep.p_star) == 12
    assert len(rep.b_star) == 6

    rep5 = critical_report(5, 0.4123)
    assert rep5.p_star is None and not rep5.wells_checked
    assert rep5.k_variational > 0


def test_classify_state_examples():
    h = 0.5 + 1e-4
    idx = FiltrationIndex(ModelParams(3, h))
    profile = gamma_star_closed(3, h)
    assert classify_state(idx, profile, Config.empty(3)) == "S_minus"
    assert classify_state(idx, profile, Config.full(3)) == "S_plus"
    assert classify_state(idx, profile, upsilon(3, profile.k_star)) == "C_star"


def test_classify_no_other_inside_s_star():
    h = 0.5 + 1e-4
    idx = FiltrationIndex(ModelParams(3, h))
    profile = gamma_star_closed(3, h)
    key_star = profile.saddle.key(h)
    for bits in range(256):
        cfg = Config(3, bits)
        if idx.phi_key_to(bits, 0) <= key_star:
            assert classify_state(idx, profile, cfg) != "other"


def test_critical_protocritical_defining_conditions():
    # Directly verify the three defining conditions at n <= 3.
    h = 0.5 + 1e-4
    n = 3
    params = ModelParams(n, h)
    idx = FiltrationIndex(params)
    profile = gamma_star_closed(n, h)
    key_star = profile.saddle.key(h)
    cs = c_star_enumerate(n, h)
    ps, _ = p_star_b_star(idx, cs)
    cs_bits = {c.bits for c in cs}

    # 1: every protocritical element is adjacent to a critical one
    for xi in ps:
        assert any(xi.bits ^ (1 << v) in cs_bits for v in range(1 << n))
    # 2: every protocritical element sits strictly on the all-minus side
    for xi in ps:
        km = idx.phi_key_to(xi.bits, 0)
        kp = idx.phi_key_to(xi.bits, (1 << (1 << n)) - 1)
        assert km < kp
    # 3: from each critical element the relabelled reference suffix reaches
    # all-plus without exceeding the barrier or touching the minus side
    from isingcube.hypercube import group_vertex_tables, _image_bits

    seed = upsilon(n, profile.k_star).bits
    for table in group_vertex_tables(n):
        image = _image_bits(seed, table)
        if image not in cs_bits:
            continue
        suffix = []
        bits = 0
        for v in range(1 << n):
            bits |= 1 << table[v]
            if bits.bit_count() >= profile.k_star:
                suffix.append(bits)
        assert suffix[0] == image
        for state in suffix:
            assert idx.state_energy(state).key(h) <= key_star
            km = idx.phi_key_to(state, 0)
            kp = idx.phi_key_to(state, (1 << (1 << n)) - 1)
            assert not (km < kp)
