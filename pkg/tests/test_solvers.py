"""Error-free transformations and the refined stencil solver."""

import random
from fractions import Fraction

import numpy as np
import pytest

from isingcube.errors import PrecisionError
from isingcube.solvers import (
    FlipStencil,
    StencilSolver,
    dd_add,
    dd_mul_d,
    solve_refined,
    two_prod,
    two_sum,
)


def test_two_sum_exact():
    rng = random.Random(1)
    for _ in range(300):
        a = rng.uniform(-1e12, 1e12)
        b = rng.uniform(-1e-6, 1e-6)
        s, e = two_sum(a, b)
        assert Fraction(s) + Fraction(e) == Fraction(a) + Fraction(b)


def test_two_prod_exact():
    rng = random.Random(2)
    for _ in range(300):
        a = rng.uniform(-1e8, 1e8)
        b = rng.uniform(-1e8, 1e8)
        p, e = two_prod(a, b)
        assert Fraction(p) + Fraction(e) == Fraction(a) * Fraction(b)


def test_dd_ops_high_precision():
    rng = random.Random(3)
    for _ in range(100):
        a = rng.uniform(0.5, 2.0)
        b = rng.uniform(-1e-20, 1e-20)
        c = rng.uniform(0.5, 2.0)
        xh, xl = dd_add(np.float64(a), np.float64(0.0), np.float64(b), np.float64(0.0))
        exact = Fraction(a) + Fraction(b)
        err = abs(Fraction(float(xh)) + Fraction(float(xl)) - exact)
        assert err <= abs(exact) * Fraction(1, 10**30)
        yh, yl = dd_mul_d(xh, xl, np.float64(c))
        exact = exact * Fraction(c)
        err = abs(Fraction(float(yh)) + Fraction(float(yl)) - exact)
        assert err <= abs(exact) * Fraction(1, 10**28)


def _chain_stencil(rates_fwd, rates_back):
    """Birth-death chain killed at the right end, in stencil form."""
    size = len(rates_fwd)
    diag = np.zeros(size)
    coefs = np.zeros((2, size))
    cols = np.full((2, size), -1, dtype=np.int64)
    for i in range(size):
        diag[i] += rates_fwd[i]
        if i + 1 < size:
            coefs[0, i] = -rates_fwd[i]
            cols[0, i] = i + 1
        if i > 0:
            diag[i] += rates_back[i]
            coefs[1, i] = -rates_back[i]
            cols[1, i] = i - 1
    return FlipStencil(diag=diag, coefs=coefs, cols=cols)


def test_refined_solve_matches_analytic_chain():
    # Hand-solved two-state chain with absorption off the right end:
    # 0.25*(t0 - t1) = 1 and 3*t1 - t0 = 1 give t0 = 6.5, t1 = 2.5.
    stencil = _chain_stencil([0.25, 2.0], [0.0, 1.0])
    sol = solve_refined(stencil, np.ones(2), mode="double")
    assert sol.x[0] == pytest.approx(6.5, rel=1e-14)
    assert sol.x[1] == pytest.approx(2.5, rel=1e-14)
    assert sol.backward_error < 1e-15


def test_refined_solve_extended_mode_tiny_backward_error():
    rng = random.Random(4)
    f = [10.0 ** rng.uniform(-2, 0) for _ in range(12)]
    bk = [0.0] + [10.0 ** rng.uniform(-2, 0) for _ in range(11)]
    stencil = _chain_stencil(f, bk)
    sol = StencilSolver(stencil).solve(np.ones(12), mode="extended")
    assert sol.mode == "extended"
    # the double-double residual floor sits far below the double-storage floor
    assert sol.backward_error < 1e-25
    plain = StencilSolver(stencil).solve(np.ones(12), mode="double")
    assert plain.backward_error > sol.backward_error


def test_refined_solve_precision_error():
    # rates without exact binary representations leave a nonzero residual
    stencil = _chain_stencil([0.1, 1 / 3], [0.0, 0.7])
    with pytest.raises(PrecisionError):
        solve_refined(stencil, np.ones(2), mode="double", required=1e-40)
