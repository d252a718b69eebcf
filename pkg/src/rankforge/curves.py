"""Exact arithmetic on Weierstrass models over Q.

Everything here is integer/rational arithmetic with no floating point:
discriminants of the curves we care about overflow doubles by a wide margin.
A curve is the quintuple [a1,a2,a3,a4,a6]; the completed-square companion
y^2 = 4x^3 + b2*x^2 + 2*b4*x + b6 ("two-torsion model") is the coordinate
system the searches operate in, because testing whether its right side is a
square is cheap and the x<->x map preserves integral points.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import gmpy2


class SingularCurve(ValueError):
    """Discriminant vanished where a nonsingular curve was required."""


class InvalidInvariants(ValueError):
    """(c4, c6) do not belong to any integral Weierstrass model."""


class PointNotOnCurve(ValueError):
    """A point failed the exact curve-membership check."""


# Point at infinity sentinel: points are None or (Fraction, Fraction).
INFINITY = None


@dataclass(frozen=True)
class WeierstrassCurve:
    """Integral model Y^2 + a1*XY + a3*Y = X^3 + a2*X^2 + a4*X + a6."""

    a1: int
    a2: int
    a3: int
    a4: int
    a6: int

    def __post_init__(self):
        if self.discriminant() == 0:
            raise SingularCurve(f"discriminant is zero for {self.ainvs()}")

    def ainvs(self) -> tuple[int, int, int, int, int]:
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    def b_invariants(self) -> tuple[int, int, int, int]:
        a1, a2, a3, a4, a6 = self.ainvs()
        b2 = a1 * a1 + 4 * a2
        b4 = a1 * a3 + 2 * a4
        b6 = a3 * a3 + 4 * a6
        b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        return b2, b4, b6, b8

    def c_invariants(self) -> tuple[int, int]:
        b2, b4, b6, _ = self.b_invariants()
        return c_invariants_from_b(b2, b4, b6)

    def discriminant(self) -> int:
        b2, b4, b6, b8 = self.b_invariants()
        return (
            -b2 * b2 * b8 - 8 * b4 ** 3 - 27 * b6 * b6 + 9 * b2 * b4 * b6
        )

    def j_invariant(self) -> Fraction:
        c4, _ = self.c_invariants()
        return Fraction(c4 ** 3, self.discriminant())

    def is_reduced_form(self) -> bool:
        """a1, a3 in {0,1} and |a2| <= 1 (the shape minimal models carry)."""
        return self.a1 in (0, 1) and self.a3 in (0, 1) and abs(self.a2) <= 1

    def rhs(self, x):
        """x^3 + a2*x^2 + a4*x + a6 (the a1/a3 cross terms live on the left)."""
        return ((x + self.a2) * x + self.a4) * x + self.a6

    def __str__(self):
        return "[%d,%d,%d,%d,%d]" % self.ainvs()


@dataclass(frozen=True)
class Invariants:
    b8: int
    c4: int
    c6: int
    delta: int
    j: Fraction


@dataclass(frozen=True)
class TwoTorsionModel:
    """y^2 = 4x^3 + b2*x^2 + 2*b4*x + b6.

    Note the serialized form doubles the middle entry: "(b2, 2*b4, b6)".
    """

    b2: int
    b4: int
    b6: int

    def rhs(self, x):
        return ((4 * x + self.b2) * x + 2 * self.b4) * x + self.b6

    def c_invariants(self) -> tuple[int, int]:
        return c_invariants_from_b(self.b2, self.b4, self.b6)

    def discriminant(self) -> Fraction:
        c4, c6 = self.c_invariants()
        return Fraction(c4 ** 3 - c6 * c6, 1728)

    def serialize(self) -> str:
        return "(%d, %d, %d)" % (self.b2, 2 * self.b4, self.b6)


def c_invariants_from_b(b2: int, b4: int, b6: int) -> tuple[int, int]:
    c4 = b2 * b2 - 24 * b4
    c6 = -b2 ** 3 + 36 * b2 * b4 - 216 * b6
    return c4, c6


def b_invariants(curve: WeierstrassCurve) -> tuple[int, int, int, int]:
    return curve.b_invariants()


def full_invariants(curve: WeierstrassCurve) -> Invariants:
    """All derived invariants, with the c4^3 - c6^2 = 1728*delta identity checked."""
    b2, b4, b6, b8 = curve.b_invariants()
    c4, c6 = c_invariants_from_b(b2, b4, b6)
    delta = curve.discriminant()
    if delta == 0:
        raise SingularCurve(f"discriminant is zero for {curve.ainvs()}")
    assert 4 * b8 == b2 * b6 - b4 * b4
    assert c4 ** 3 - c6 * c6 == 1728 * delta
    return Invariants(b8=b8, c4=c4, c6=c6, delta=delta, j=Fraction(c4 ** 3, delta))


def two_torsion_model(curve: WeierstrassCurve) -> TwoTorsionModel:
    """Complete the square via y = 2Y + a1*X + a3; integral points map bijectively."""
    b2, b4, b6, _ = curve.b_invariants()
    return TwoTorsionModel(b2, b4, b6)


def point_to_two_torsion(curve: WeierstrassCurve, P):
    """(X, Y) on the minimal model -> (X, 2Y + a1X + a3) on the b-model."""
    if P is INFINITY:
        return INFINITY
    x, y = P
    return (x, 2 * y + curve.a1 * x + curve.a3)


def point_from_two_torsion(curve: WeierstrassCurve, P):
    """Inverse of point_to_two_torsion; exact, so parity must cooperate."""
    if P is INFINITY:
        return INFINITY
    x, y = P
    ynew = Fraction(y - curve.a1 * x - curve.a3, 2)
    return (Fraction(x), ynew)


def _mods(n: int, m: int) -> int:
    """Symmetric residue of n mod m in (-m/2, m/2]."""
    r = n % m
    if 2 * r > m:
        r -= m
    return r


# Values of b2 = a1^2 + 4*a2 a reduced-form model can carry.
REDUCED_B2 = (-4, -3, 0, 1, 4, 5)


def _model_from_c(c4: int, c6: int) -> WeierstrassCurve | None:
    """Reduced-form integral model with the given invariants, or None.

    Every integral model reduces to one with a1, a3 in {0,1} and |a2| <= 1
    without touching (c4, c6), so an exhaustive scan of the six possible b2
    values doubles as the existence test for an integral model.
    """
    for b2 in REDUCED_B2:
        if (b2 * b2 - c4) % 24 != 0:
            continue
        b4 = (b2 * b2 - c4) // 24
        num = -b2 ** 3 + 36 * b2 * b4 - c6
        if num % 216 != 0:
            continue
        b6 = num // 216
        if b6 % 4 not in (0, 1):
            continue
        a1 = b2 % 2
        a3 = b6 % 2
        if (b4 - a1 * a3) % 2 != 0:
            continue
        a2 = (b2 - a1) // 4
        a4 = (b4 - a1 * a3) // 2
        a6 = (b6 - a3 * a3) // 4
        return WeierstrassCurve(a1, a2, a3, a4, a6)
    return None


def _valuation(n: int, p: int) -> int:
    if n == 0:
        raise ValueError("valuation of zero")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _candidate_scaling_primes(c4: int, c6: int) -> list[int]:
    """Primes p that could divide the minimality scalar u (p^4|c4 and p^6|c6)."""
    if c4 != 0 and c6 != 0:
        g = gcd(abs(c4), abs(c6))
    else:
        g = abs(c4) or abs(c6)
    # Only fourth/sixth powers matter, so primes above |g|^(1/4) are irrelevant.
    from rankforge.factorint import factor_for_scaling

    return factor_for_scaling(g)


def minimal_model(c4: int, c6: int) -> WeierstrassCurve:
    """Globally minimal integral model with invariants (c4/u^4, c6/u^6).

    Laska-Kraus-Connell shape: strip every prime p with p^4 | c4 and p^6 | c6
    as long as some integral model survives, rescaling back up by a factor
    from {1, 2, 3, 6} at the end.  Models scaled up from an integral model
    are always integral, so validity is contiguous in the exponent and the
    one-step-back net suffices.
    """
    if c4 ** 3 - c6 * c6 == 0:
        raise SingularCurve(f"(c4, c6) = ({c4}, {c6}) is degenerate")
    for p in _candidate_scaling_primes(c4, c6):
        while True:
            p4, p6 = p ** 4, p ** 6
            if (c4 == 0 or c4 % p4 == 0) and (c6 == 0 or c6 % p6 == 0):
                nc4, nc6 = c4 // p4 if c4 else 0, c6 // p6 if c6 else 0
                if p > 3 or _attainable(nc4, nc6):
                    c4, c6 = nc4, nc6
                    continue
            break
    for u in (1, 2, 3, 6):
        model = _model_from_c(c4 * u ** 4, c6 * u ** 6)
        if model is not None:
            return model
    raise InvalidInvariants(f"({c4}, {c6}) admits no integral model")


def _attainable(c4: int, c6: int) -> bool:
    return any(_model_from_c(c4 * u ** 4, c6 * u ** 6) is not None for u in (1, 2, 3, 6))


def curve_from_b(model: TwoTorsionModel) -> WeierstrassCurve:
    """Global minimal model of y^2 = 4x^3 + b2 x^2 + 2 b4 x + b6."""
    c4, c6 = model.c_invariants()
    if c4 ** 3 - c6 * c6 == 0:
        raise SingularCurve(f"two-torsion model {model} is degenerate")
    return minimal_model(c4, c6)


def misc_transform(
    curve: WeierstrassCurve, r: int, s: int, t: int
) -> WeierstrassCurve:
    """Coordinate change x = x' + r, y = y' + s*x' + t (u = 1)."""
    a1, a2, a3, a4, a6 = curve.ainvs()
    na1 = a1 + 2 * s
    na2 = a2 - s * a1 + 3 * r - s * s
    na3 = a3 + r * a1 + 2 * t
    na4 = a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t
    na6 = a6 + r * a4 + r * r * a2 + r ** 3 - t * a3 - t * t - r * t * a1
    return WeierstrassCurve(na1, na2, na3, na4, na6)


# ---------------------------------------------------------------------------
# Group law over Q (exact).


def is_on_curve(curve: WeierstrassCurve, P) -> bool:
    if P is INFINITY:
        return True
    x, y = Fraction(P[0]), Fraction(P[1])
    a1, a2, a3, a4, a6 = curve.ainvs()
    return y * y + a1 * x * y + a3 * y == ((x + a2) * x + a4) * x + a6


def point_neg(curve: WeierstrassCurve, P):
    if P is INFINITY:
        return INFINITY
    x, y = P
    return (x, -y - curve.a1 * x - curve.a3)


def _add_raw(curve: WeierstrassCurve, P, Q):
    """Group law without membership checks; inputs must lie on the curve."""
    if P is INFINITY:
        return Q
    if Q is INFINITY:
        return P
    a1, a2, a3, a4, a6 = curve.ainvs()
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if y1 + y2 + a1 * x2 + a3 == 0:
            return INFINITY
        lam = Fraction(
            3 * x1 * x1 + 2 * a2 * x1 + a4 - a1 * y1, 2 * y1 + a1 * x1 + a3
        )
    else:
        lam = Fraction(y2 - y1, x2 - x1)
    x3 = lam * lam + a1 * lam - a2 - x1 - x2
    y3 = lam * (x1 - x3) - y1 - a1 * x3 - a3
    return (x3, y3)


def point_add(curve: WeierstrassCurve, P, Q):
    for pt in (P, Q):
        if not is_on_curve(curve, pt):
            raise PointNotOnCurve(f"{pt} not on {curve}")
    return _add_raw(curve, P, Q)


def point_mul(curve: WeierstrassCurve, n: int, P):
    """n*P by double-and-add."""
    if not is_on_curve(curve, P):
        raise PointNotOnCurve(f"{P} not on {curve}")
    if n < 0:
        n, P = -n, point_neg(curve, P)
    R = INFINITY
    addend = P
    while n:
        if n & 1:
            R = _add_raw(curve, R, addend)
        addend = _add_raw(curve, addend, addend)
        n >>= 1
    return R


def is_integral_point(P) -> bool:
    if P is INFINITY:
        return False
    x, y = P
    return Fraction(x).denominator == 1 and Fraction(y).denominator == 1


def torsion_order(curve: WeierstrassCurve, P, bound: int = 12) -> int | None:
    """Order of P if it is torsion (order <= bound suffices over Q), else None."""
    if P is INFINITY:
        return 1
    Q = P
    for n in range(2, bound + 1):
        Q = _add_raw(curve, Q, P)
        if Q is INFINITY:
            return n
    return None


def parse_curve(text: str) -> WeierstrassCurve:
    """Parse the bracket serialization "[a1,a2,a3,a4,a6]"."""
    inner = text.strip().lstrip("[").rstrip("]")
    parts = [int(tok.strip()) for tok in inner.split(",")]
    if len(parts) != 5:
        raise ValueError(f"expected five coefficients, got {text!r}")
    return WeierstrassCurve(*parts)


def isqrt_exact(n: int) -> int | None:
    """Integer square root if n is a perfect square, else None."""
    if n < 0:
        return None
    if not gmpy2.is_square(gmpy2.mpz(n)):
        return None
    return int(gmpy2.isqrt(gmpy2.mpz(n)))
