from fractions import Fraction

import numpy as np
import pytest

from rankforge.curves import (
    INFINITY,
    WeierstrassCurve,
    _add_raw,
    point_mul,
    point_neg,
)
from rankforge.heights import (
    PrecisionFailure,
    canonical_height,
    gram,
    height_pairing,
    naive_height,
    rank_lower_bound,
    select_basis,
    _height_by_doubling,
)

E37 = WeierstrassCurve(0, 0, 1, -1, 0)
P37 = (Fraction(0), Fraction(0))
E389 = WeierstrassCurve(0, 1, 1, -2, 0)
G389 = [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(0))]

EPS = 1e-8


def test_height_of_infinity():
    assert canonical_height(E37, INFINITY) == 0.0


def test_generator_height_anchor():
    # independently computable as lim naive(2^n P)/4^n
    h = canonical_height(E37, P37)
    assert abs(h - 0.0511114) < 1e-6
    limit = _height_by_doubling(E37, P37, eps=1.0)
    assert abs(h - limit) < 5e-4


def test_doubling_limit_oracle():
    Q = P37
    for n in range(1, 9):
        Q = _add_raw(E37, Q, Q)
    est = naive_height(Q) / 4 ** 8
    assert abs(est - canonical_height(E37, P37)) < 1e-4


def test_quadraticity():
    for E, P in ((E37, P37), (E389, G389[0])):
        h = canonical_height(E, P)
        for n in range(2, 9):
            hn = canonical_height(E, point_mul(E, n, P))
            assert abs(hn - n * n * h) < n * n * EPS


def test_parallelogram_law():
    P, Q = G389
    S = _add_raw(E389, P, Q)
    D = _add_raw(E389, P, point_neg(E389, Q))
    lhs = canonical_height(E389, S) + canonical_height(E389, D)
    rhs = 2 * canonical_height(E389, P) + 2 * canonical_height(E389, Q)
    assert abs(lhs - rhs) < 8 * EPS


def test_torsion_height_zero():
    E = WeierstrassCurve(0, 0, 1, 0, 0)
    assert canonical_height(E, (Fraction(0), Fraction(0))) == 0.0


def test_height_on_additive_curve():
    # conductor 800 curve: additive at 2 and 5, identity-component push needed
    E = WeierstrassCurve(0, 0, 0, -25, 0)
    P = (Fraction(-4), Fraction(6))
    h = canonical_height(E, P)
    assert h > 0
    h2 = canonical_height(E, point_mul(E, 2, P))
    assert abs(h2 - 4 * h) < 4 * EPS


def test_doubling_fallback_precision_failure():
    with pytest.raises(PrecisionFailure):
        _height_by_doubling(E37, P37, eps=1e-9, max_doublings=5)


def test_gram_examples():
    E = WeierstrassCurve(0, 0, 1, 0, 0)
    g = gram(E, [(Fraction(0), Fraction(0))])
    assert abs(g.matrix[0, 0]) < EPS

    P = G389[0]
    g2 = gram(E389, [P, point_neg(E389, P)])
    assert abs(g2.det()) < 1e-9

    g3 = gram(E389, G389)
    assert g3.det() > 0
    assert abs(g3.det() - 0.15246017794) < 1e-6  # regulator of the rank-2 curve
    assert np.allclose(g3.matrix, g3.matrix.T)


def test_gram_unimodular_invariance():
    P, Q = G389
    g = gram(E389, [P, Q]).det()
    # basis change (P, Q) -> (P + Q, Q)
    g2 = gram(E389, [_add_raw(E389, P, Q), Q]).det()
    assert abs(g - g2) < 1e-8


def test_pairing_symmetry():
    P, Q = G389
    assert abs(height_pairing(E389, P, Q) - height_pairing(E389, Q, P)) < 1e-12


def test_select_basis_forced():
    P, Q = G389
    pts = [P, point_mul(E389, 2, P), Q]
    basis, g = select_basis(E389, pts)
    assert len(basis) == 2
    assert g.det() > 1e-6


def test_select_basis_all_torsion():
    E = WeierstrassCurve(0, 0, 1, 0, 0)
    basis, g = select_basis(E, [(Fraction(0), Fraction(0)), (Fraction(0), Fraction(-1))])
    assert basis == []


def test_rank_monotonicity():
    P, Q = G389
    r1 = rank_lower_bound(E389, [P]).rank
    r2 = rank_lower_bound(E389, [P, Q]).rank
    assert r1 == 1 and r2 == 2


def test_rank_single_nontorsion():
    a = rank_lower_bound(E37, [P37])
    assert a.rank == 1
    assert a.determinant > 1e-6
