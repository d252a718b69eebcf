"""Canonical heights, height pairings and rank lower bounds.

The canonical height is computed as an archimedean part plus non-archimedean
parts.  For a point whose reduction is nonsingular at every prime of the
minimal model, the non-archimedean sum collapses to (1/2) log den(x(P)); we
arrange that situation by first multiplying the point by the exponent of the
component groups (known from the reduction types), then divide the height by
the square of the multiplier.  The archimedean part is a geometrically
convergent series on bounded chart variables, evaluated in 128-bit floats, so
the default precision 1e-8 is comfortable.

When the discriminant cannot be factored the reduction data is unknown; a
doubling-limit fallback delivers whatever precision it can certify and raises
PrecisionFailure if that is not enough.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import log

import gmpy2
import numpy as np

from rankforge.conductor import local_data
from rankforge.curves import (
    INFINITY,
    WeierstrassCurve,
    _add_raw,
    is_on_curve,
    point_mul,
    point_neg,
    torsion_order,
)
from rankforge.factorint import IncompleteFactorization

DEFAULT_EPS = 1e-8
DET_TOLERANCE = 1e-6

_PREC = 128
_SERIES_TERMS = 64


class PrecisionFailure(ArithmeticError):
    """The requested height precision could not be certified."""


class GenerationFailure(ValueError):
    """No tested basis generates all the supplied points."""

    def __init__(self, point, message=""):
        self.point = point
        super().__init__(message or f"point {point} not generated by any tested basis")


def naive_height(P) -> float:
    """log H(x(P)); the doubling limit of this is the canonical height."""
    if P is INFINITY:
        return 0.0
    x = Fraction(P[0])
    h = max(abs(x.numerator), x.denominator, 1)
    return float(gmpy2.log(gmpy2.mpz(h)))


def _shift_b(b2, b4, b6, b8, r):
    """b-invariants of the model translated by x -> x + r."""
    nb2 = b2 + 12 * r
    nb4 = b4 + r * b2 + 6 * r * r
    nb6 = b6 + 2 * r * b4 + r * r * b2 + 4 * r ** 3
    nb8 = b8 + 3 * r * b6 + 3 * r * r * b4 + r ** 3 * b2 + 3 * r ** 4
    return nb2, nb4, nb6, nb8


def archimedean_height(curve: WeierstrassCurve, P) -> float:
    """Local height at the real place, normalized so that the canonical
    height of P is this plus log den(x(P)) whenever P reduces to a
    nonsingular point modulo every prime of the minimal model."""
    if P is INFINITY:
        return 0.0
    with gmpy2.context(precision=_PREC):
        x = Fraction(P[0])
        xr = gmpy2.mpfr(gmpy2.mpq(x.numerator, x.denominator))
        b2, b4, b6, b8 = curve.b_invariants()
        # x -> x - 1 shifted model backs the second chart (t = 1/(x+1)).
        s2, s4, s6, s8 = _shift_b(b2, b4, b6, b8, -1)
        consts = {
            True: tuple(map(gmpy2.mpfr, (b2, b4, b6, b8))),
            False: tuple(map(gmpy2.mpfr, (s2, s4, s6, s8))),
        }
        beta = abs(xr) >= 0.5
        t = 1 / xr if beta else 1 / (xr + 1)
        lead = -gmpy2.log(abs(t)) / 2
        mu = gmpy2.mpfr(0)
        quarter = gmpy2.mpfr(1)
        for _ in range(_SERIES_TERMS):
            c2, c4_, c6_, c8 = consts[beta]
            w = t * (4 + t * (c2 + t * (2 * c4_ + t * c6_)))
            z = 1 - t * t * (c4_ + t * (2 * c6_ + t * c8))
            if abs(w) <= 2 * abs(z):
                zeta = z
            else:
                zeta = z + w if beta else z - w
                beta = not beta
            if zeta == 0:
                raise PrecisionFailure("archimedean series hit a zero")
            mu += quarter * gmpy2.log(abs(zeta))
            t = w / zeta
            quarter /= 4
        return float(2 * lead + mu / 4)


def _component_multiplier(curve: WeierstrassCurve) -> int:
    c = 1
    for ld in local_data(curve):
        e = ld.component_exponent()
        c = c * e // _gcd(c, e)
    return c


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


def canonical_height(curve: WeierstrassCurve, P, eps: float = DEFAULT_EPS) -> float:
    """Neron-Tate height of P on the given minimal model, to within eps."""
    if P is INFINITY:
        return 0.0
    if not is_on_curve(curve, P):
        raise ValueError(f"{P} is not on {curve}")
    if torsion_order(curve, P) is not None:
        return 0.0
    try:
        c = _component_multiplier(curve)
    except IncompleteFactorization:
        return _height_by_doubling(curve, P, eps)
    Q = point_mul(curve, c, P)
    assert Q is not INFINITY
    hQ = archimedean_height(curve, Q) + float(
        gmpy2.log(gmpy2.mpz(Fraction(Q[0]).denominator))
    )
    return hQ / (c * c)


def _height_by_doubling(curve: WeierstrassCurve, P, eps, max_doublings: int = 9):
    """lim naive(2^n P)/4^n; certifiable only to ~C/4^n, so eps may be refused."""
    Q = P
    n = 0
    while n < max_doublings:
        Q2 = _add_raw(curve, Q, Q)
        if Q2 is INFINITY:
            return 0.0
        Q = Q2
        n += 1
    # Height-difference bound: |hhat - naive| <= C with C below (crude but safe).
    b2, b4, b6, b8 = curve.b_invariants()
    C = 2.0 + log(max(abs(b2), abs(b4), abs(b6), abs(b8), 2))
    if C / 4 ** n > eps:
        raise PrecisionFailure(
            f"doubling fallback reaches {C / 4 ** n:.2e}, needed {eps:.2e}"
        )
    return naive_height(Q) / 4 ** n


@dataclass
class GramMatrix:
    matrix: np.ndarray
    eps: float

    def det(self) -> float:
        if self.matrix.size == 0:
            return 1.0
        return float(np.linalg.det(self.matrix))

    def min_eigenvalue(self) -> float:
        if self.matrix.size == 0:
            return 0.0
        return float(np.linalg.eigvalsh(self.matrix)[0])


def height_pairing(curve: WeierstrassCurve, P, Q, eps: float = DEFAULT_EPS) -> float:
    hPQ = canonical_height(curve, _add_raw(curve, P, Q), eps)
    return (hPQ - canonical_height(curve, P, eps) - canonical_height(curve, Q, eps)) / 2


def gram(curve: WeierstrassCurve, points, eps: float = DEFAULT_EPS) -> GramMatrix:
    """Matrix of height pairings, symmetrized by construction."""
    pts = list(points)
    n = len(pts)
    heights = [canonical_height(curve, P, eps) for P in pts]
    M = np.zeros((n, n))
    for i in range(n):
        M[i, i] = heights[i]
    for i in range(n):
        for j in range(i + 1, n):
            s = _add_raw(curve, pts[i], pts[j])
            hs = canonical_height(curve, s, eps)
            M[i, j] = M[j, i] = (hs - heights[i] - heights[j]) / 2
    return GramMatrix(M, eps)


@dataclass
class RankAssessment:
    rank: int
    basis: list
    min_eigenvalue: float
    determinant: float


def _independent_subset(gram_all: np.ndarray, order, det_tol: float) -> list[int]:
    """Greedy maximal subset with positive-definite Gram (processed in order)."""
    chosen: list[int] = []
    for i in order:
        trial = chosen + [i]
        sub = gram_all[np.ix_(trial, trial)]
        if np.linalg.det(sub) > det_tol:
            chosen = trial
    return chosen


def _decompose(
    curve, P, basis, gram_basis: np.ndarray, pairings: np.ndarray
) -> list[int] | None:
    """Integer coefficients n with P = sum n_i B_i up to sign and torsion,
    verified exactly with point arithmetic.

    Torsion tolerance: distinct integral points differing by a torsion point
    have identical height pairings, and the canonical height cannot separate
    them; such points are generated by the basis together with the (finite)
    torsion subgroup, which contributes nothing to rank or regulator.
    """
    if gram_basis.size == 0:
        return None
    try:
        sol = np.linalg.solve(gram_basis, pairings)
    except np.linalg.LinAlgError:
        return None
    cand = [int(round(v)) for v in sol]
    for sign in (1, -1):
        coeffs = [sign * v for v in cand]
        S = INFINITY
        for c, B in zip(coeffs, basis):
            S = _add_raw(curve, S, point_mul(curve, c, B))
        diff = _add_raw(curve, S, point_neg(curve, P))
        if torsion_order(curve, diff) is not None:
            return coeffs
    return None


def select_basis(
    curve: WeierstrassCurve,
    integral_points,
    eps: float = DEFAULT_EPS,
    det_tol: float = DET_TOLERANCE,
    exhaustive_limit: int = 20,
):
    """Pick a maximal independent generating subset with large minimal eigenvalue.

    All non-torsion input points must decompose integrally over the winner;
    subsets of the maximal rank are ranked by minimal Gram eigenvalue and the
    first one that generates everything is returned (exhaustively for small
    pools, greedy-plus-swaps beyond that).
    """
    pts = [P for P in integral_points if P is not INFINITY]
    pts = _dedupe_points(curve, pts)
    free = [P for P in pts if torsion_order(curve, P) is None]
    if not free:
        return [], GramMatrix(np.zeros((0, 0)), eps)
    G = gram(curve, free, eps).matrix
    order = sorted(range(len(free)), key=lambda i: G[i, i])
    base_idx = _independent_subset(G, order, det_tol)
    r = len(base_idx)

    def min_eig(idx):
        return float(np.linalg.eigvalsh(G[np.ix_(idx, idx)])[0])

    candidates: list[list[int]]
    if len(free) <= exhaustive_limit:
        candidates = [
            list(c)
            for c in itertools.combinations(range(len(free)), r)
            if np.linalg.det(G[np.ix_(c, c)]) > det_tol
        ]
    else:
        candidates = _swap_improve(G, base_idx, det_tol)
    candidates.sort(key=min_eig, reverse=True)

    last_failure = None
    for idx in candidates:
        basis = [free[i] for i in idx]
        gb = G[np.ix_(idx, idx)]
        ok = True
        for j, P in enumerate(free):
            if j in idx:
                continue
            pair = G[np.ix_(idx, [j])].ravel()
            if _decompose(curve, P, basis, gb, pair) is None:
                ok = False
                last_failure = P
                break
        if ok:
            return basis, GramMatrix(gb, eps)
    raise GenerationFailure(last_failure)


def _swap_improve(G, base_idx, det_tol, rounds: int = 2) -> list[list[int]]:
    """Local swap search around the greedy subset; returns candidates tried."""
    n = G.shape[0]
    seen = {tuple(sorted(base_idx))}
    best = list(base_idx)

    def min_eig(idx):
        return float(np.linalg.eigvalsh(G[np.ix_(idx, idx)])[0])

    for _ in range(rounds):
        improved = False
        for slot in range(len(best)):
            for j in range(n):
                if j in best:
                    continue
                trial = sorted(best[:slot] + [j] + best[slot + 1 :])
                key = tuple(trial)
                if key in seen:
                    continue
                seen.add(key)
                if np.linalg.det(G[np.ix_(trial, trial)]) <= det_tol:
                    continue
                if min_eig(trial) > min_eig(best):
                    best = trial
                    improved = True
        if not improved:
            break
    usable = [
        list(c)
        for c in seen
        if np.linalg.det(G[np.ix_(list(c), list(c))]) > det_tol
    ]
    return sorted(usable, key=min_eig, reverse=True)


def _dedupe_points(curve, pts):
    seen = set()
    out = []
    for P in pts:
        x, y = Fraction(P[0]), Fraction(P[1])
        neg = point_neg(curve, (x, y))
        key = min((x, y), (neg[0], neg[1]))
        if key not in seen:
            seen.add(key)
            out.append((x, y))
    return out


def rank_lower_bound(
    curve: WeierstrassCurve, integral_points, eps: float = DEFAULT_EPS
) -> RankAssessment:
    basis, gm = select_basis(curve, integral_points, eps)
    return RankAssessment(
        rank=len(basis),
        basis=basis,
        min_eigenvalue=gm.min_eigenvalue(),
        determinant=gm.det(),
    )
