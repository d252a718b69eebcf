"""Integral point enumeration: sieve-assisted x-scans and combinations of
generators.

The x-scan runs on the completed-square model y^2 = 4x^3 + b2 x^2 + 2 b4 x + b6
whose right side only needs a squareness test.  Vectorized residue filtering
modulo 64 * 63 * 65 * 11 rejects over 99% of x values before any bignum work,
which is what makes bounds like 10^9 practical.  The combination search walks
all sum(n_i P_i) with |n_i| <= m depth-first so each step costs one group
addition; a modular variant runs the same walk in E(F_p) for several primes
and reassembles x-coordinates with the Chinese Remainder Theorem.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
import numpy as np

from rankforge.curves import (
    INFINITY,
    WeierstrassCurve,
    _add_raw,
    is_integral_point,
    is_on_curve,
    point_from_two_torsion,
    point_mul,
    point_neg,
    two_torsion_model,
)
from rankforge.factorint import small_primes

SIEVE_MODULI = (64, 63, 65, 11)
_SIEVE_M = 64 * 63 * 65 * 11  # 2882880


def _square_mask() -> np.ndarray:
    mask = np.zeros(_SIEVE_M, dtype=bool)
    residues = np.arange(_SIEVE_M, dtype=np.int64)
    ok = np.ones(_SIEVE_M, dtype=bool)
    for m in SIEVE_MODULI:
        sq = np.zeros(m, dtype=bool)
        sq[(np.arange(m, dtype=np.int64) ** 2) % m] = True
        ok &= sq[residues % m]
    mask[ok] = True
    return mask


_SQUARE_MASK: np.ndarray | None = None


def _mask() -> np.ndarray:
    global _SQUARE_MASK
    if _SQUARE_MASK is None:
        _SQUARE_MASK = _square_mask()
    return _SQUARE_MASK


def sieve_search(curve: WeierstrassCurve, xbound: int, chunk: int = 1 << 20):
    """All integral points (x, y) on the minimal model with |x| <= xbound, y >= 0
    on the completed-square model (i.e. one representative per +-pair).

    Pipeline per chunk: quadratic-residue bitmask mod 64*63*65*11, then a
    float64 near-square gate with an error band wide enough that no true
    square can slip past it, then the exact bignum check.
    """
    model = two_torsion_model(curve)
    b2, b4, b6 = model.b2, model.b4, model.b6
    mask = _mask()
    M = _SIEVE_M
    out = []
    for lo in range(-xbound, xbound + 1, chunk):
        hi = min(lo + chunk, xbound + 1)
        xs = np.arange(lo, hi, dtype=np.int64)
        xm = xs % M
        # Horner with a reduction after each step keeps everything in int64.
        r = (4 * xm + b2 % M) % M
        r = (r * xm + (2 * b4) % M) % M
        r = (r * xm + b6 % M) % M
        survivors = xs[mask[r]]
        if survivors.size == 0:
            continue
        with np.errstate(all="ignore"):
            xf = survivors.astype(np.float64)
            rhs_f = ((4.0 * xf + b2) * xf + 2.0 * b4) * xf + b6
            scale = np.abs(4.0 * xf ** 3) + abs(b2) * xf ** 2 + np.abs(2.0 * b4 * xf) + abs(b6)
            band = 1e-14 * scale + 16.0
            y_f = np.sqrt(np.maximum(rhs_f, 0.0))
            frac = np.abs(y_f - np.rint(y_f))
            near_square = frac <= (1e-15 * y_f + 0.02)
            keep = (rhs_f > -band) & (near_square | (rhs_f <= band))
        for x in survivors[keep].tolist():
            rhs = model.rhs(x)
            if rhs < 0:
                continue
            z = gmpy2.mpz(rhs)
            if gmpy2.is_square(z):
                y = int(gmpy2.isqrt(z))
                P = point_from_two_torsion(curve, (x, y))
                if is_integral_point(P):
                    out.append((int(P[0]), int(P[1])))
    return sorted(out)


def naive_x_scan(curve: WeierstrassCurve, xbound: int):
    """Reference per-x scan with no residue filter (oracle for the sieve)."""
    model = two_torsion_model(curve)
    out = []
    for x in range(-xbound, xbound + 1):
        rhs = model.rhs(x)
        if rhs < 0:
            continue
        z = gmpy2.mpz(rhs)
        if gmpy2.is_square(z):
            P = point_from_two_torsion(curve, (x, int(gmpy2.isqrt(z))))
            if is_integral_point(P):
                out.append((int(P[0]), int(P[1])))
    return sorted(out)


def combination_count(r: int, m: int) -> int:
    """((2m+1)^r - 1) / 2: combinations checked up to sign."""
    return ((2 * m + 1) ** r - 1) // 2


def _walk_combinations(add, mul, neg, generators, m):
    """Yield (coeffs, point) over all nonzero tuples with first nonzero coeff > 0.

    Depth-first with one addition per sibling step; `add`, `mul`, `neg`
    abstract the group so the same walk runs over Q and over F_p.
    """
    r = len(generators)
    if r == 0 or m == 0:
        return

    def rec(i, current, leading_zero, coeffs):
        if i == r:
            if not leading_zero:
                yield tuple(coeffs), current
            return
        g = generators[i]
        if leading_zero:
            coeffs[i] = 0
            yield from rec(i + 1, current, True, coeffs)
            pt = current
            for k in range(1, m + 1):
                pt = add(pt, g)
                coeffs[i] = k
                yield from rec(i + 1, pt, False, coeffs)
        else:
            pt = add(current, mul(-m, g))
            for k in range(-m, m + 1):
                coeffs[i] = k
                yield from rec(i + 1, pt, False, coeffs)
                pt = add(pt, g)

    yield from rec(0, None, True, [0] * r)


def combo_search(curve: WeierstrassCurve, generators, m: int, x_max: int | None = None):
    """Integral points among sum(n_i P_i), |n_i| <= m, up to sign.

    Returns minimal-model points with the completed-square y >= 0 convention.
    """
    gens = [(Fraction(P[0]), Fraction(P[1])) for P in generators]
    for P in gens:
        if not is_on_curve(curve, P):
            raise ValueError(f"generator {P} not on curve")

    def add(P, Q):
        if P is None:
            return Q
        if Q is None:
            return P
        return _add_raw(curve, P, Q)

    def mul(n, P):
        return point_mul(curve, n, P)

    def neg(P):
        return point_neg(curve, P)

    found = {}
    for _, pt in _walk_combinations(add, mul, neg, gens, m):
        if pt is None:
            continue
        if is_integral_point(pt):
            x = int(pt[0])
            if x_max is not None and abs(x) > x_max:
                continue
            found[x] = _canonical_rep(curve, (x, int(pt[1])))
    return sorted(found.values())


def _canonical_rep(curve, P):
    """Choose the representative with nonnegative completed-square y."""
    x, y = P
    if 2 * y + curve.a1 * x + curve.a3 >= 0:
        return (x, y)
    Q = point_neg(curve, (x, y))
    return (int(Q[0]), int(Q[1]))


class InsufficientModuli(ValueError):
    """CRT prime product too small to pin x below the requested bound."""


def _good_primes(curve: WeierstrassCurve, product_min: int):
    delta = abs(curve.discriminant())
    chosen = []
    prod = 1
    for p in small_primes(100000):
        if p < 1000 or delta % p == 0:
            continue
        chosen.append(p)
        prod *= p
        if prod > product_min:
            return chosen
    raise InsufficientModuli(f"prime pool exhausted below product {product_min}")


def _reduce_point(P, p):
    if P is None or P is INFINITY:
        return None
    x, y = Fraction(P[0]), Fraction(P[1])
    if x.denominator % p == 0 or y.denominator % p == 0:
        return None  # reduces to the point at infinity
    xr = x.numerator * pow(x.denominator, -1, p) % p
    yr = y.numerator * pow(y.denominator, -1, p) % p
    return (xr, yr)


def _modp_ops(curve: WeierstrassCurve, p: int):
    a1, a2, a3, a4, a6 = [a % p for a in curve.ainvs()]

    def add(P, Q):
        if P is None:
            return Q
        if Q is None:
            return P
        x1, y1 = P
        x2, y2 = Q
        if x1 == x2 and (y1 + y2 + a1 * x2 + a3) % p == 0:
            return None
        if x1 == x2:
            lam = (3 * x1 * x1 + 2 * a2 * x1 + a4 - a1 * y1) * pow(
                (2 * y1 + a1 * x1 + a3) % p, -1, p
            )
        else:
            lam = (y2 - y1) * pow((x2 - x1) % p, -1, p)
        lam %= p
        x3 = (lam * lam + a1 * lam - a2 - x1 - x2) % p
        y3 = (lam * (x1 - x3) - y1 - a1 * x3 - a3) % p
        return (x3, y3)

    def neg(P):
        if P is None:
            return None
        x, y = P
        return (x, (-y - a1 * x - a3) % p)

    def mul(n, P):
        if n < 0:
            n, P = -n, neg(P)
        R = None
        while n:
            if n & 1:
                R = add(R, P)
            P = add(P, P)
            n >>= 1
        return R

    return add, mul, neg


def combo_search_modular(
    curve: WeierstrassCurve, generators, m: int, x_max: int, primes=None
):
    """combo_search restricted to |x| <= x_max, via reductions mod good primes.

    Combinations whose reduction hits infinity at any prime are recomputed
    exactly; every CRT candidate is verified exactly on the curve.
    """
    gens = [(Fraction(P[0]), Fraction(P[1])) for P in generators]
    if primes is None:
        primes = _good_primes(curve, 2 * x_max)
    else:
        prod = 1
        for p in primes:
            prod *= p
        if prod <= 2 * x_max:
            raise InsufficientModuli(f"prime product {prod} <= {2 * x_max}")
    prod = 1
    for p in primes:
        prod *= p

    per_prime = []
    suspects = set()  # coefficient tuples needing exact treatment
    for p in primes:
        add, mul, neg = _modp_ops(curve, p)
        red_gens = [_reduce_point(P, p) for P in gens]
        if any(g is None for g in red_gens):
            raise InsufficientModuli(f"generator reduces to infinity mod {p}")
        xs = {}
        for coeffs, pt in _walk_combinations(add, mul, neg, red_gens, m):
            if pt is None:
                suspects.add(coeffs)
                xs[coeffs] = None
            else:
                xs[coeffs] = pt[0]
        per_prime.append((p, xs))

    model = two_torsion_model(curve)
    found = {}
    all_coeffs = per_prime[0][1].keys()
    # Precompute CRT weights.
    weights = []
    for p, _ in per_prime:
        Mp = prod // p
        weights.append(Mp * pow(Mp % p, -1, p))
    for coeffs in all_coeffs:
        if coeffs in suspects:
            pt = INFINITY
            for c, g in zip(coeffs, gens):
                pt = _add_raw(curve, pt, point_mul(curve, c, g))
            if pt is not INFINITY and is_integral_point(pt):
                x = int(pt[0])
                if abs(x) <= x_max:
                    found[x] = _canonical_rep(curve, (x, int(pt[1])))
            continue
        acc = 0
        for (p, xs), w in zip(per_prime, weights):
            acc += xs[coeffs] * w
        x = acc % prod
        if x > prod // 2:
            x -= prod
        if abs(x) > x_max:
            continue
        rhs = model.rhs(x)
        if rhs >= 0 and gmpy2.is_square(gmpy2.mpz(rhs)):
            P = point_from_two_torsion(curve, (x, int(gmpy2.isqrt(gmpy2.mpz(rhs)))))
            if is_integral_point(P):
                found[x] = _canonical_rep(curve, (int(P[0]), int(P[1])))
    return sorted(found.values())


@dataclass
class PointInventory:
    curve: WeierstrassCurve
    points: list = field(default_factory=list)  # (x, y), completed-square y >= 0
    x_bound: int = 0
    combo_bound: int = 0

    @property
    def x_count(self) -> int:
        """Number of distinct x-coordinates (the I statistic)."""
        return len({x for x, _ in self.points})


def inventory(
    curve: WeierstrassCurve, x_bound: int, m: int, generators=None
) -> PointInventory:
    """Union of the sieve scan to x_bound and coefficient-<=m combinations."""
    pts = {(x, y) for x, y in sieve_search(curve, x_bound)}
    if generators and m > 0:
        for x, y in combo_search(curve, generators, m):
            pts.add((x, y))
    return PointInventory(
        curve=curve, points=sorted(pts), x_bound=x_bound, combo_bound=m
    )
