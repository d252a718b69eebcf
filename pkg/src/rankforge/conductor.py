"""Reduction types and conductors via Tate's algorithm.

Runs prime by prime on a globally minimal model.  Each local computation
returns the conductor exponent and Kodaira symbol; the conductor is the
product p^f_p over bad primes, which requires factoring the discriminant
(propagating IncompleteFactorization rather than ever guessing).
"""

from __future__ import annotations

from dataclasses import dataclass

from rankforge.curves import WeierstrassCurve, misc_transform
from rankforge.factorint import DEFAULT_RHO_BUDGET, Factorization, factor


@dataclass(frozen=True)
class LocalData:
    prime: int
    conductor_exponent: int
    kodaira: str
    disc_valuation: int
    minimal: bool = True  # was the input model already minimal at this prime

    @property
    def is_multiplicative(self) -> bool:
        return self.conductor_exponent == 1

    def component_exponent(self) -> int:
        """Exponent of (a multiple of) the component group; used to push
        points onto the identity component for local height formulas."""
        k = self.kodaira
        named = {"I0": 1, "II": 1, "II*": 1, "III": 2, "III*": 2, "IV": 3, "IV*": 3}
        if k in named:
            return named[k]
        if k.endswith("*"):
            return 4  # I_m*: Z/4 or Z/2 x Z/2
        return int(k[1:])  # I_n: cyclic of order n


def _val(n: int, p: int) -> int:
    if n == 0:
        raise ValueError("valuation of 0")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _inv(a: int, p: int) -> int:
    return pow(a % p, -1, p)


def tate_local(curve: WeierstrassCurve, p: int) -> LocalData:
    """Kodaira type and conductor exponent of curve at p (curve integral)."""
    E = curve
    minimal = True
    while True:
        delta = E.discriminant()
        if delta % p != 0:
            return LocalData(p, 0, "I0", 0, minimal)
        n = _val(delta, p)

        E = _move_singular_point(E, p)
        a1, a2, a3, a4, a6 = E.ainvs()
        b2, b4, b6, b8 = E.b_invariants()
        c4, _c6 = E.c_invariants()

        if c4 % p != 0:
            return LocalData(p, 1, f"I{n}", n, minimal)
        if a6 % p ** 2 != 0:
            return LocalData(p, n, "II", n, minimal)
        if b8 % p ** 3 != 0:
            return LocalData(p, n - 1, "III", n, minimal)
        if b6 % p ** 3 != 0:
            return LocalData(p, n - 2, "IV", n, minimal)

        E = _normalize_additive(E, p)
        a1, a2, a3, a4, a6 = E.ainvs()

        # Reduced cubic T^3 + b*T^2 + c*T + d from (a2/p, a4/p^2, a6/p^3).
        b = a2 // p
        c = a4 // p ** 2
        d = a6 // p ** 3
        w = 27 * d * d - b * b * c * c + 4 * b ** 3 * d - 18 * b * c * d + 4 * c ** 3
        x = 3 * c - b * b

        if w % p != 0:
            return LocalData(p, n - 4, "I0*", n, minimal)
        if x % p != 0:
            m = _additive_istar(E, p, b, c, d, x)
            return LocalData(p, n - m - 4, f"I{m}*", n, minimal)

        # Triple root: move it to the origin.
        if p == 2:
            r = b % p
        elif p == 3:
            r = (-d) % p
        else:
            r = (-b * _inv(3, p)) % p
        E = misc_transform(E, p * _sym(r, p), 0, 0)
        a1, a2, a3, a4, a6 = E.ainvs()

        a3t = a3 // p ** 2
        a6t = a6 // p ** 4
        if (a3t * a3t + 4 * a6t) % p != 0:
            return LocalData(p, n - 6, "IV*", n, minimal)

        if p == 2:
            t = a6t % 2
        else:
            t = (-a3t * _inv(2, p)) % p
        E = misc_transform(E, 0, 0, p ** 2 * _sym(t, p))
        a1, a2, a3, a4, a6 = E.ainvs()

        if a4 % p ** 4 != 0:
            return LocalData(p, n - 7, "III*", n, minimal)
        if a6 % p ** 6 != 0:
            return LocalData(p, n - 8, "II*", n, minimal)

        # Non-minimal at p: rescale by u = p and start over.
        E = WeierstrassCurve(
            a1 // p, a2 // p ** 2, a3 // p ** 3, a4 // p ** 4, a6 // p ** 6
        )
        minimal = False


def _sym(r: int, p: int) -> int:
    """Symmetric representative of r mod p, to keep coefficients small."""
    r %= p
    if 2 * r > p:
        r -= p
    return r


def _move_singular_point(E: WeierstrassCurve, p: int) -> WeierstrassCurve:
    """Translate so the singular point of the reduction is (0, 0) mod p."""
    a1, a2, a3, a4, a6 = E.ainvs()
    b2, b4, b6, _ = E.b_invariants()
    c4, c6 = E.c_invariants()
    if p == 2:
        if b2 % 2 == 0:
            r = a4 % 2
            t = (r * (1 + a2 + a4) + a6) % 2
        else:
            r = a3 % 2
            t = (r + a4) % 2
    elif p == 3:
        r = (-b6) % 3 if b2 % 3 == 0 else (-b2 * b4) % 3
        t = (a1 * r + a3) % 3
    else:
        if c4 % p == 0:
            r = (-b2 * _inv(12, p)) % p
        else:
            r = (-(c6 + b2 * c4) * _inv(12 * c4, p)) % p
        t = (-(a1 * r + a3) * _inv(2, p)) % p
    E = misc_transform(E, _sym(r, p), 0, _sym(t, p))
    a1, a2, a3, a4, a6 = E.ainvs()
    assert a3 % p == 0 and a4 % p == 0 and a6 % p == 0, "singular point not at origin"
    return E


def _normalize_additive(E: WeierstrassCurve, p: int) -> WeierstrassCurve:
    """Arrange p|a1,a2, p^2|a3,a4, p^3|a6 (valid once types II/III/IV are excluded)."""
    a1, a2, a3, a4, a6 = E.ainvs()
    if p == 2:
        s = a2 % 2
        E = misc_transform(E, 0, s, 0)
        t = 2 * ((E.a6 // 4) % 2)
        E = misc_transform(E, 0, 0, t)
    else:
        s = (-a1 * _inv(2, p)) % p
        E = misc_transform(E, 0, _sym(s, p), 0)
        t = (-E.a3 * _inv(2, p)) % p ** 2
        E = misc_transform(E, 0, 0, _sym(t, p ** 2))
    a1, a2, a3, a4, a6 = E.ainvs()
    assert a1 % p == 0 and a2 % p == 0, "additive normalization failed (a1, a2)"
    assert a3 % p ** 2 == 0 and a4 % p ** 2 == 0, "additive normalization failed (a3, a4)"
    assert a6 % p ** 3 == 0, "additive normalization failed (a6)"
    return E


def _additive_istar(E: WeierstrassCurve, p: int, b: int, c: int, d: int, x: int) -> int:
    """Length m of the I_m* chain (double root of the reduced cubic)."""
    if p == 2:
        r = c % p
    elif p == 3:
        r = (b * c) % p
    else:
        r = ((b * c - 9 * d) * _inv(2 * x, p)) % p
    E = misc_transform(E, p * _sym(r, p), 0, 0)

    ix, iy = 3, 3
    mx = my = p * p
    while True:
        a1, a2, a3, a4, a6 = E.ainvs()
        a2t = a2 // p
        a3t = a3 // my
        a6t = a6 // (mx * my)
        if (a3t * a3t + 4 * a6t) % p != 0:
            break
        if p == 2:
            t = my * (a6t % 2)
        else:
            t = my * ((-a3t * _inv(2, p)) % p)
        E = misc_transform(E, 0, 0, t)
        my *= p
        iy += 1

        a1, a2, a3, a4, a6 = E.ainvs()
        a2t = a2 // p
        a4t = a4 // (p * mx)
        a6t = a6 // (mx * my)
        if (a4t * a4t - 4 * a2t * a6t) % p != 0:
            break
        if p == 2:
            r = mx * ((a6t * a2t) % 2)
        else:
            r = mx * ((-a4t * _inv(2 * a2t, p)) % p)
        E = misc_transform(E, r, 0, 0)
        mx *= p
        ix += 1
    return ix + iy - 5


def conductor(
    curve: WeierstrassCurve, budget: int = DEFAULT_RHO_BUDGET
) -> tuple[int, int]:
    """(N, |delta|/N) for the given minimal model.

    Propagates IncompleteFactorization when |delta| resists the budget;
    callers may retry with a larger one.
    """
    delta = curve.discriminant()
    fac = factor(delta, budget=budget)
    return _conductor_from_factors(curve, fac)


def local_data(curve: WeierstrassCurve, budget: int = DEFAULT_RHO_BUDGET) -> list[LocalData]:
    delta = curve.discriminant()
    fac = factor(delta, budget=budget)
    return [tate_local(curve, p) for p in fac.primes()]


def _conductor_from_factors(
    curve: WeierstrassCurve, fac: Factorization
) -> tuple[int, int]:
    N = 1
    for p in fac.primes():
        ld = tate_local(curve, p)
        N *= p ** ld.conductor_exponent
    q, r = divmod(abs(curve.discriminant()), N)
    assert r == 0, "conductor does not divide the discriminant"
    return N, q
