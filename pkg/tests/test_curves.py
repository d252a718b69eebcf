import random
from fractions import Fraction

import pytest

from rankforge.curves import (
    INFINITY,
    SingularCurve,
    TwoTorsionModel,
    WeierstrassCurve,
    b_invariants,
    curve_from_b,
    full_invariants,
    is_integral_point,
    is_on_curve,
    minimal_model,
    misc_transform,
    parse_curve,
    point_add,
    point_from_two_torsion,
    point_mul,
    point_neg,
    point_to_two_torsion,
    torsion_order,
    two_torsion_model,
)
from rankforge.records_data import CONDUCTOR_RECORDS, DISCRIMINANT_RECORDS


def test_b_invariants_examples():
    assert b_invariants(WeierstrassCurve(0, 0, 1, -79, 342)) == (0, -158, 1369, -6241)
    assert b_invariants(WeierstrassCurve(0, 0, 0, 0, 1)) == (0, 0, 4, 0)
    b2, b4, b6, b8 = b_invariants(WeierstrassCurve(1, 0, 0, -22, 219))
    assert (b2, b4, b6) == (1, -44, 876)
    assert 4 * b8 == 876 - 1936


def test_b_invariant_identity_random():
    rng = random.Random(1)
    for _ in range(2000):
        try:
            c = WeierstrassCurve(
                rng.randint(0, 1),
                rng.randint(-1, 1),
                rng.randint(0, 1),
                rng.randint(-50, 50),
                rng.randint(-50, 50),
            )
        except SingularCurve:
            continue
        b2, b4, b6, b8 = c.b_invariants()
        assert 4 * b8 == b2 * b6 - b4 * b4
        c4, c6 = c.c_invariants()
        assert c4 ** 3 - c6 * c6 == 1728 * c.discriminant()


def test_full_invariants():
    inv = full_invariants(WeierstrassCurve(0, 0, 1, -79, 342))
    assert inv.delta == -19047851
    assert (inv.c4, inv.c6) == (3792, -295704)
    with pytest.raises(SingularCurve):
        WeierstrassCurve(0, 0, 0, 0, 0)


def test_two_torsion_model_examples():
    assert two_torsion_model(WeierstrassCurve(0, 0, 1, -79, 342)) == TwoTorsionModel(0, -158, 1369)
    assert two_torsion_model(WeierstrassCurve(0, 0, 0, -1, 0)) == TwoTorsionModel(0, -2, 0)
    assert two_torsion_model(WeierstrassCurve(1, 1, 0, -2582, 48720)) == TwoTorsionModel(5, -5164, 194880)
    # (0, 37) lies on the image model since 1369 = 37^2
    assert TwoTorsionModel(0, -158, 1369).rhs(0) == 37 ** 2


def test_curve_from_b_examples():
    # serialized middle entry is 2*b4
    assert curve_from_b(TwoTorsionModel(0, -913248, 2637633024)).ainvs() == (1, 0, 0, -22, 219)
    assert curve_from_b(TwoTorsionModel(0, -158, 1369)).ainvs() == (0, 0, 1, -79, 342)
    m = curve_from_b(TwoTorsionModel(0, 0, 1))
    assert two_torsion_model(m) == TwoTorsionModel(0, 0, 1)
    assert TwoTorsionModel(0, -913248, 2637633024).serialize() == "(0, -1826496, 2637633024)"


def test_minimal_model_examples():
    assert minimal_model(3792, -295704).ainvs() == (0, 0, 1, -79, 342)
    assert minimal_model(12 ** 4 * 1057, -(12 ** 6) * 190801).ainvs() == (1, 0, 0, -22, 219)
    # (48, -216) belongs to the conductor-37 curve
    assert minimal_model(48, -216).ainvs() == (0, 0, 1, -1, 0)
    assert minimal_model(0, 864).ainvs() == (0, 0, 0, 0, -1)
    with pytest.raises(SingularCurve):
        minimal_model(4, 8)  # c4^3 = c6^2
    # a pair needing the u = 6 rescale: (1, 2) is carried by [0,0,0,-27,-108]
    assert minimal_model(1, 2).ainvs() == (0, 0, 0, -27, -108)


@pytest.mark.parametrize("row", CONDUCTOR_RECORDS + DISCRIMINANT_RECORDS)
def test_minimal_model_round_trip(row):
    E = WeierstrassCurve(*row[0])
    inv = full_invariants(E)
    assert minimal_model(inv.c4, inv.c6).ainvs() == E.ainvs()


def test_minimal_model_scaled_inputs():
    E = WeierstrassCurve(1, -1, 0, -415, 3481)
    inv = full_invariants(E)
    for u in (2, 3, 5, 12):
        assert minimal_model(inv.c4 * u ** 4, inv.c6 * u ** 6).ainvs() == E.ainvs()


def test_group_law_examples():
    E = WeierstrassCurve(0, 0, 1, -1, 0)
    P, Q = (Fraction(0), Fraction(0)), (Fraction(1), Fraction(0))
    assert point_add(E, P, Q) == (-1, -1)
    assert point_add(E, P, INFINITY) == P
    assert point_add(E, P, point_neg(E, P)) is INFINITY
    assert point_mul(E, 0, P) is INFINITY


def test_group_law_properties():
    E = WeierstrassCurve(0, 1, 1, -2, 0)
    pts = [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(0)), (Fraction(-2), Fraction(0))]
    for P in pts:
        assert is_on_curve(E, P)
    for P in pts:
        for Q in pts:
            assert point_add(E, P, Q) == point_add(E, Q, P)
            for R in pts:
                lhs = point_add(E, point_add(E, P, Q), R)
                rhs = point_add(E, P, point_add(E, Q, R))
                assert lhs == rhs
    P = pts[0]
    acc = INFINITY
    for n in range(1, 21):
        acc = point_add(E, acc, P)
        assert acc == point_mul(E, n, P)


def test_integral_point_transport():
    rng = random.Random(7)
    curves = 0
    while curves < 20:
        try:
            E = WeierstrassCurve(
                rng.randint(0, 1),
                rng.randint(-1, 1),
                rng.randint(0, 1),
                rng.randint(-30, 30),
                rng.randint(-30, 30),
            )
        except SingularCurve:
            continue
        curves += 1
        model = two_torsion_model(E)
        for X in range(-1000, 1001):
            rhs = E.rhs(X)
            # solve Y^2 + (a1 X + a3) Y = rhs over Z
            from rankforge.curves import isqrt_exact

            disc = (E.a1 * X + E.a3) ** 2 + 4 * rhs
            s = isqrt_exact(disc)
            if s is None:
                continue
            Y = (-(E.a1 * X + E.a3) + s) // 2
            if Y * Y + (E.a1 * X + E.a3) * Y != rhs:
                continue
            P = (Fraction(X), Fraction(Y))
            assert is_on_curve(E, P)
            image = point_to_two_torsion(E, P)
            assert image[1] ** 2 == model.rhs(image[0])
            assert is_integral_point(image)
            back = point_from_two_torsion(E, image)
            assert back == P


def test_torsion_order():
    E = WeierstrassCurve(0, 0, 1, 0, 0)
    assert torsion_order(E, (Fraction(0), Fraction(0))) == 3
    E37 = WeierstrassCurve(0, 0, 1, -1, 0)
    assert torsion_order(E37, (Fraction(0), Fraction(0))) is None
    assert torsion_order(E37, INFINITY) == 1


def test_transform_preserves_invariants():
    E = WeierstrassCurve(1, -1, 0, -415, 3481)
    F = misc_transform(E, 3, 1, -2)
    assert F.discriminant() == E.discriminant()
    assert F.c_invariants() == E.c_invariants()


def test_parse_and_str():
    E = parse_curve("[0,0,1,-79,342]")
    assert E.ainvs() == (0, 0, 1, -79, 342)
    assert str(E) == "[0,0,1,-79,342]"
    with pytest.raises(ValueError):
        parse_curve("[1,2,3]")
