"""Pair search: find curves carrying two independent small integral points.

Two box points (x1, y1), (x2, y2) on y^2 = 4x^3 + b2 x^2 + 2 b4 x + b6 with
x1 != x2 satisfy

    (y2 - y1)(y2 + y1) = (x2 - x1) [2 b4 + b2 (x1 + x2) + 4 (x2^2 + x1 x2 + x1^2)]

so writing x2 - x1 = r t, y2 - y1 = r s, y2 + y1 = t u and z = x1 + x2,
l = r t turns the pair into a factorization problem: s u = W where
W = 2 b4 + b2 z + 3 z^2 + l^2.  The search loops over (b4, r, t, z), factors
each W within a truncation bound |W| <= 2 h^4 / U, reconstructs
y2 = (r s + t u)/2 and tallies the implied b6 in a 2^L-entry counter array
indexed by floor(b6/8) mod 2^L.  Counter classes with enough hits go to a
second phase that recovers the exact b6 values and witnesses with a square
root table modulo 2^(L+3).

Parity schedules per b2 (and per b6 parity when b2 = 0) restrict (r, t, z)
and the shape of the splits (s, u) so that reconstructed y values have the
right parity; the loss is roughly a factor of two of quadruples for curves
that matter.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd, log2

import numpy as np

from rankforge.curves import TwoTorsionModel
from rankforge.search_direct import (
    FAVORABLE_CLASSES,
    B2_VALUES,
    CandidateCurve,
    count_box_points,
)


class DegeneratePair(ValueError):
    """The two points share an x-coordinate."""


@dataclass(frozen=True)
class Quadruple:
    r: int
    s: int
    t: int
    u: int

    @property
    def l(self) -> int:
        return self.r * self.t

    @property
    def w(self) -> int:
        return self.s * self.u


def quadruple_decompose(P1, P2) -> Quadruple:
    """Canonical (r, s, t, u) for a pair: r = gcd(y2-y1, x2-x1), x2 > x1.

    Swapping the points or negating both y's gives the other sign choices,
    so points are ordered by x first; then r >= 1 and t >= 1 while s, u carry
    the remaining signs.
    """
    (x1, y1), (x2, y2) = P1, P2
    if x1 == x2:
        raise DegeneratePair(f"points share x = {x1}")
    if x1 > x2:
        (x1, y1), (x2, y2) = (x2, y2), (x1, y1)
    dx = x2 - x1
    dy = y2 - y1
    r = gcd(abs(dy), dx)
    t = dx // r
    s = dy // r
    assert (y2 + y1) % t == 0  # t | y2+y1 since gcd(s, t) = 1
    u = (y2 + y1) // t
    return Quadruple(r, s, t, u)


def w_value(b2: int, b4: int, z: int, l: int) -> int:
    """W = 2 b4 + b2 z + 3 z^2 + l^2, the quantity factored as s*u."""
    return 2 * b4 + b2 * z + 3 * z * z + l * l


@dataclass(frozen=True)
class ParitySchedule:
    """Loop restrictions for one (b2, b6 parity) case."""

    name: str
    rt_mode: str       # "odd" (r, t odd, r <= t) or "r2mod4" (r = 2 mod 4, t free)
    z_mode: str        # "odd" | "even_eq_l_mod4" | "even_neq_l_mod4"
    split_mode: str    # "odd" | "even22" | "by_t_mod4"

    def rt_pairs(self, h: int):
        if self.rt_mode == "odd":
            for r in range(1, h + 1, 2):
                for t in range(r, h + 1, 2):
                    yield r, t
        else:
            for r in range(2, h + 1, 4):
                for t in range(1, h + 1):
                    if t % 4 == 2 and t < r:
                        continue
                    yield r, t

    def z_ok(self, z: int, l: int) -> bool:
        if self.z_mode == "odd":
            return z % 2 == 1
        if self.z_mode == "even_eq_l_mod4":
            return z % 2 == 0 and (z - l) % 4 == 0
        return z % 2 == 0 and (z - l) % 4 == 2

    def split_ok(self, s: int, u: int, t: int) -> bool:
        if self.split_mode == "odd":
            return s % 2 == 1 and u % 2 == 1
        if self.split_mode == "even22":
            return s % 4 in (2,) and u % 4 in (2,)
        # by_t_mod4: s odd with 4 | u always; both even when t odd;
        # 4 | s with u odd when t = 2 mod 4.
        if s % 2 == 1 and u % 4 == 0:
            return True
        if t % 2 == 1 and s % 2 == 0 and u % 2 == 0:
            return True
        if t % 4 == 2 and s % 4 == 0 and u % 2 == 1:
            return True
        return False


def parity_schedule(b2: int, b6_parity: int) -> ParitySchedule:
    """The documented loop restrictions for each b2 (and b6 parity at b2 = 0)."""
    if b2 not in B2_VALUES:
        raise ValueError(f"b2 must be one of {B2_VALUES}")
    if b2 % 2 == 1:
        return ParitySchedule("odd-b2", "odd", "odd", "odd")
    if b2 in (-4, 4):
        return ParitySchedule("b2=+-4", "r2mod4", "even_neq_l_mod4", "by_t_mod4")
    if b6_parity % 2 == 1:
        return ParitySchedule("b2=0 odd-b6", "r2mod4", "even_eq_l_mod4", "by_t_mod4")
    return ParitySchedule("b2=0 even-b6", "odd", "odd", "even22")


@dataclass(frozen=True)
class PairSearchConfig:
    h: int
    b2: int = 0
    U: int = 1
    L: int | None = None
    classes: object = FAVORABLE_CLASSES
    threshold: int = 10          # phase-2 (exact box point) threshold
    phase1_threshold: int | None = None  # counter hits needed; defaults to threshold
    b4_min: int | None = None
    b4_max: int | None = None
    b6_parity: int | None = None  # needed when b2 = 0 and classes don't pin it
    allow_negative_b6: bool = False

    def __post_init__(self):
        if self.h < 2:
            raise ValueError("h must be at least 2")
        if self.b2 not in B2_VALUES:
            raise ValueError(f"b2 must be one of {B2_VALUES}")
        if self.U < 1:
            raise ValueError("U must be positive")
        if 2 ** (self.level + 3) <= 2 * self.h ** 3:
            raise ValueError("need 2^(L+3) > 2h^3 for unique y recovery")

    @property
    def level(self) -> int:
        if self.L is not None:
            return self.L
        return max(int(round(4 * log2(self.h))), int(log2(2 * self.h ** 3)) - 2)

    @property
    def w_bound(self) -> int:
        return 2 * self.h ** 4 // self.U

    def b4_range(self) -> tuple[int, int]:
        lo = self.b4_min if self.b4_min is not None else -2 * self.h ** 4
        hi = self.b4_max if self.b4_max is not None else 0
        return lo, hi

    def class_set(self):
        if self.classes == "all" or self.classes is None:
            return None
        return {tuple(c) for c in self.classes if c[0] == self.b2 % 8}

    def b6_parities(self) -> list[int]:
        """Which b6 parities to schedule for (only matters when b2 = 0)."""
        cs = self.class_set()
        if self.b6_parity is not None:
            return [self.b6_parity & 1]
        if cs:
            return sorted({c[2] & 1 for c in cs})
        if self.b2 % 2 == 1:
            return [1]  # schedule is parity-independent for odd b2
        if self.b2 in (-4, 4):
            return [1]
        return [0, 1]

    def key(self) -> str:
        cls = self.classes if isinstance(self.classes, str) else sorted(
            tuple(c) for c in self.classes
        )
        return repr(
            (
                "pair",
                self.h,
                self.b2,
                self.U,
                self.level,
                cls,
                self.threshold,
                self.phase1_threshold,
                self.b4_range(),
                self.b6_parity,
            )
        )


class SqrtTable:
    """Square roots modulo 2^k: all y (mod 2^k) with y^2 = a, per residue a."""

    def __init__(self, k: int):
        if k < 3:
            raise ValueError("modulus below 8 is never used")
        self.modulus = 1 << k
        ys = np.arange(self.modulus, dtype=np.int64)
        sq = (ys * ys) & (self.modulus - 1)
        order = np.argsort(sq, kind="stable")
        self._sorted_sq = sq[order]
        self._roots = ys[order]

    def roots(self, residue: int) -> np.ndarray:
        a = residue & (self.modulus - 1)
        lo = np.searchsorted(self._sorted_sq, a, side="left")
        hi = np.searchsorted(self._sorted_sq, a, side="right")
        return self._roots[lo:hi]

    def roots_many(self, residues: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(lo, hi) index ranges into the root array for a residue vector."""
        lo = np.searchsorted(self._sorted_sq, residues, side="left")
        hi = np.searchsorted(self._sorted_sq, residues, side="right")
        return lo, hi

    @property
    def root_array(self) -> np.ndarray:
        return self._roots


def sqrt_table(modulus_log2: int) -> SqrtTable:
    return SqrtTable(modulus_log2)


def _lpf_table(limit: int) -> np.ndarray:
    """Least prime factor for 0..limit."""
    lpf = np.zeros(limit + 1, dtype=np.int64)
    lpf[1] = 1
    for p in range(2, limit + 1):
        if lpf[p] == 0:
            lpf[p : limit + 1 : p][lpf[p : limit + 1 : p] == 0] = p
    return lpf


def _divisors_from_lpf(w: int, lpf: np.ndarray) -> list[int]:
    divs = [1]
    while w > 1:
        p = int(lpf[w])
        e = 0
        while w % p == 0:
            w //= p
            e += 1
        divs = [d * p ** k for d in divs for k in range(e + 1)]
    return divs


def divisor_splits(W: int, constraint=None, t: int = 1, lpf: np.ndarray | None = None):
    """All ordered sign-aware splits (s, u) with s*u = W, optionally filtered
    by a ParitySchedule split constraint for loop variable t."""
    if W == 0:
        raise ValueError("W = 0 admits no factorization")
    aw = abs(W)
    if lpf is not None and aw < len(lpf):
        divs = _divisors_from_lpf(aw, lpf)
    else:
        divs = _divisors_slow(aw)
    out = []
    for d in divs:
        for s in (d, -d):
            u = W // s
            if constraint is None or constraint.split_ok(s, u, t):
                out.append((s, u))
    out.sort()
    return out


def _divisors_slow(n: int) -> list[int]:
    out = []
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            if d != n // d:
                out.append(n // d)
        d += 1
    return out


def _b4_allowed_pair(cfg: PairSearchConfig, b4: int, class_set) -> bool:
    if cfg.b2 % 2 == 0 and b4 % 2 != 0:
        return False
    if class_set is not None and not any(b4 % 8 == c[1] for c in class_set):
        return False
    return True


def phase1_counts(cfg: PairSearchConfig, b4: int, lpf: np.ndarray) -> np.ndarray:
    """Counter array over floor(b6/8) mod 2^L for one b4 slice."""
    L = cfg.level
    size = 1 << L
    counts = np.zeros(size, dtype=np.uint32)
    h = cfg.h
    h2, h3 = h * h, 2 * h ** 3
    wb = cfg.w_bound
    b2 = cfg.b2
    hits: list[int] = []
    for par in cfg.b6_parities():
        sched = parity_schedule(b2, par)
        for r, t in sched.rt_pairs(h):
            l = r * t
            # 2 x2 = z + l runs over the even values of [-2h^2, 2h^2]
            for x2 in range(-h2, h2 + 1):
                z = 2 * x2 - l
                if not sched.z_ok(z, l):
                    continue
                W = w_value(b2, b4, z, l)
                if W == 0 or abs(W) > wb:
                    continue
                for s, u in divisor_splits(W, sched, t, lpf):
                    rs, tu = r * s, t * u
                    if (rs + tu) % 2 != 0:
                        continue
                    y2 = (rs + tu) // 2
                    if y2 < 0 or y2 > h3:
                        continue
                    b6 = y2 * y2 - ((4 * x2 + b2) * x2 + 2 * b4) * x2
                    if b6 < 0 and not cfg.allow_negative_b6:
                        continue
                    hits.append((b6 >> 3) & (size - 1))
    if hits:
        idx, c = np.unique(np.asarray(hits, dtype=np.int64), return_counts=True)
        counts[idx] += c.astype(np.uint32)
    return counts


def verify_classes(
    cfg: PairSearchConfig,
    b4: int,
    b6_residues,
    table: SqrtTable,
) -> dict[int, list]:
    """Exact box points per b6 for every b6 in one of the residue classes
    mod 2^(L+3); y values above 2h^3 are ignored, and since 2^(L+3) > 2h^3
    each root residue lifts to at most one admissible y.  Runs all requested
    classes of a b4 slice in one vectorized pass (about h^2 work per class).
    """
    res = np.asarray(sorted(set(int(r) for r in b6_residues)), dtype=np.int64)
    if res.size == 0:
        return {}
    h = cfg.h
    h2, h3 = h * h, 2 * h ** 3
    M = table.modulus
    b2 = cfg.b2
    b6_cap = 4 * h ** 6
    xs = np.arange(-h2, h2 + 1, dtype=np.int64)
    px = ((4 * xs + b2) * xs + 2 * b4) * xs
    A = (px[:, None] + res[None, :]) & (M - 1)
    flat = A.ravel()
    lo, hi = table.roots_many(flat)
    nz = np.nonzero(hi > lo)[0]
    if nz.size == 0:
        return {}
    starts = lo[nz].astype(np.int64)
    counts = (hi[nz] - lo[nz]).astype(np.int64)
    # vectorized concatenation of [start_i, start_i + count_i) ranges
    total = int(counts.sum())
    steps = np.ones(total, dtype=np.int64)
    head = np.cumsum(counts)[:-1]
    steps[0] = starts[0]
    if head.size:
        steps[head] = starts[1:] - (starts[:-1] + counts[:-1]) + 1
    pos = np.cumsum(steps)
    src = np.repeat(nz, counts)
    ys = table.root_array[pos]
    keep = ys <= h3
    ys, src = ys[keep], src[keep]
    xi = src // res.size
    b6s = ys * ys - px[xi]
    ok = b6s <= b6_cap
    if not cfg.allow_negative_b6:
        ok &= b6s >= 0
    tally: dict[int, list] = {}
    for x, y, b6 in zip(xs[xi[ok]].tolist(), ys[ok].tolist(), b6s[ok].tolist()):
        tally.setdefault(int(b6), []).append((int(x), int(y)))
    return tally


def verify_class(
    cfg: PairSearchConfig,
    b4: int,
    b6_residue: int,
    table: SqrtTable,
) -> list[tuple[int, int, tuple]]:
    """Single-class wrapper: (b6, exact count, witnesses) triples."""
    tally = verify_classes(cfg, b4, [b6_residue], table)
    return [(b6, len(pts), tuple(pts)) for b6, pts in sorted(tally.items())]


def _admissible_b6_parities(cfg: PairSearchConfig, b4: int) -> set[int]:
    """b6 parities consistent with an integral model for this b4, limited to
    the parities the configured schedules can produce."""
    if cfg.b2 % 2 == 1:
        return {b4 & 1}  # odd b2 links b6 parity to b4 parity
    return set(cfg.b6_parities())


def _promoted_residues(cfg: PairSearchConfig, b4: int, counts: np.ndarray, class_set):
    """Full residues mod 2^(L+3) worth verifying, from promoted counters."""
    th = cfg.phase1_threshold if cfg.phase1_threshold is not None else cfg.threshold
    idx = np.nonzero(counts >= th)[0]
    if class_set is not None:
        j_set = sorted({c[2] for c in class_set if c[1] == b4 % 8})
    else:
        # b6 is a square mod 4 and must be parity-consistent with b4
        pars = _admissible_b6_parities(cfg, b4)
        j_set = [j for j in range(8) if j % 4 in (0, 1) and (j & 1) in pars]
    return [8 * int(k) + j for k in idx.tolist() for j in j_set]


def run_pair_slice(
    cfg: PairSearchConfig, lo: int, hi: int, lpf=None, table=None
) -> list[CandidateCurve]:
    class_set = cfg.class_set()
    if class_set is not None and not class_set:
        return []
    if lpf is None:
        lpf = _lpf_table(cfg.w_bound)
    if table is None:
        table = SqrtTable(cfg.level + 3)
    out = []
    for b4 in range(lo, hi + 1):
        if not _b4_allowed_pair(cfg, b4, class_set):
            continue
        counts = phase1_counts(cfg, b4, lpf)
        residues = _promoted_residues(cfg, b4, counts, class_set)
        for b6, pts in sorted(verify_classes(cfg, b4, residues, table).items()):
            count = len(pts)
            if count < cfg.threshold:
                continue
            if class_set is not None and not any(
                (b4 % 8, b6 % 8) == (c[1], c[2]) for c in class_set
            ):
                continue
            model = TwoTorsionModel(cfg.b2, b4, b6)
            if model.discriminant() == 0:
                continue
            for x, y in pts:
                assert y * y == model.rhs(x)
            out.append(CandidateCurve(cfg.b2, b4, b6, count, tuple(pts)))
    return out


def run_pair(
    cfg: PairSearchConfig,
    workers: int = 1,
    progress=None,
    partitions=None,
):
    """Stream candidates over the configured b4 range (deterministic order)."""
    from rankforge.search_direct import partition_b4_range

    lo, hi = cfg.b4_range()
    if partitions is None:
        partitions = partition_b4_range(lo, hi, max(workers, 1) * 8)
    if workers > 1:
        import multiprocessing as mp

        with mp.Pool(workers) as pool:
            results = pool.starmap(
                _worker_pair, [(cfg, plo, phi) for plo, phi in partitions]
            )
        for (plo, phi), res in zip(partitions, results):
            if progress:
                progress(plo, phi)
            yield from res
    else:
        lpf = _lpf_table(cfg.w_bound)
        table = SqrtTable(cfg.level + 3)
        for plo, phi in partitions:
            yield from run_pair_slice(cfg, plo, phi, lpf, table)
            if progress:
                progress(plo, phi)


def _worker_pair(cfg, lo, hi):
    return run_pair_slice(cfg, lo, hi)


# ---------------------------------------------------------------------------
# Statistics and the small-h oracle.


def minimal_box_h(model: TwoTorsionModel) -> int:
    """Smallest h whose search box covers the curve's b4 (|2 b4| <= 4 h^4)."""
    h = 2
    while 4 * h ** 4 < abs(2 * model.b4):
        h += 1
    return h


def pair_statistics(model: TwoTorsionModel, h: int | None = None, U: int = 1) -> dict:
    """Quadruple statistics for one curve: how many pairs of box points have
    canonical r, t <= h, and what fraction of those pass |W| <= 2h^4/U.

    The default box is slightly above the smallest one containing the curve,
    which is where the search first encounters it; the fractions vary
    significantly from curve to curve and with the box.
    """
    if h is None:
        h = minimal_box_h(model) + 2
    pts = count_box_points(h, model.b2, model.b4, model.b6)
    pairs = 0
    rt_ok = 0
    w_ok = 0
    wb = 2 * h ** 4 // U
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if pts[i][0] == pts[j][0]:
                continue
            pairs += 1
            q = quadruple_decompose(pts[i], pts[j])
            if 1 <= q.r <= h and 1 <= q.t <= h:
                rt_ok += 1
                if abs(q.w) <= wb and q.w != 0:
                    w_ok += 1
    return {
        "h": h,
        "box_points": len(pts),
        "pairs": pairs,
        "rt_within_h": rt_ok,
        "rt_fraction": rt_ok / pairs if pairs else 0.0,
        "w_caught": w_ok,
        "w_fraction": w_ok / rt_ok if rt_ok else 0.0,
    }


def _compliant(cfg: PairSearchConfig, P1, P2) -> bool:
    """Does the canonical quadruple of (P1, P2) obey every documented
    restriction (schedule parities, r <= t <= h, |W| bound, W != 0)?"""
    q = quadruple_decompose(P1, P2)
    if not (1 <= q.r <= q.t <= cfg.h):
        return False
    if q.w == 0 or abs(q.w) > cfg.w_bound:
        return False
    # b6 parity is y + b2*x mod 2, fetchable from either point.
    b6_parity = (P1[1] + cfg.b2 * P1[0]) & 1
    sched = parity_schedule(cfg.b2, b6_parity)
    if sched.rt_mode == "odd" and not (q.r % 2 == 1 and q.t % 2 == 1):
        return False
    if sched.rt_mode == "r2mod4" and q.r % 4 != 2:
        return False
    z = P1[0] + P2[0]
    if not sched.z_ok(z, q.l):
        return False
    return sched.split_ok(q.s, q.u, q.t)


def compliant_pair_oracle(cfg: PairSearchConfig) -> set[tuple[int, int, int]]:
    """Curves owning a box-point pair whose canonical quadruple obeys the
    documented restrictions; every such curve must surface in phase-1 counts.

    Enumerates, per b4 slice, all box points grouped by their b6 value and
    checks each pair symbolically.  Small h only.
    """
    class_set = cfg.class_set()
    lo, hi = cfg.b4_range()
    h = cfg.h
    h2, h3 = h * h, 2 * h ** 3
    b6_cap = 4 * h ** 6
    xs = np.arange(-h2, h2 + 1, dtype=np.int64)
    ys = np.arange(0, h3 + 1, dtype=np.int64)
    sq = ys * ys
    out = set()
    for b4 in range(lo, hi + 1):
        if not _b4_allowed_pair(cfg, b4, class_set):
            continue
        pars = _admissible_b6_parities(cfg, b4)
        px = ((4 * xs + cfg.b2) * xs + 2 * b4) * xs
        b6_grid = sq[:, None] - px[None, :]
        yi, xi = np.nonzero((b6_grid >= 0) & (b6_grid <= b6_cap))
        vals = b6_grid[yi, xi]
        order = np.argsort(vals, kind="stable")
        vals, yi, xi = vals[order], ys[yi[order]], xs[xi[order]]
        start = 0
        n = len(vals)
        while start < n:
            end = start
            while end < n and vals[end] == vals[start]:
                end += 1
            if end - start >= 2:
                b6 = int(vals[start])
                ok_class = (
                    class_set is None
                    or (b4 % 8, b6 % 8) in {(c[1], c[2]) for c in class_set}
                )
                if ok_class and (b6 & 1) in pars:
                    pts = [(int(xi[k]), int(yi[k])) for k in range(start, end)]
                    if _has_compliant_pair(cfg, pts):
                        if TwoTorsionModel(cfg.b2, b4, b6).discriminant() != 0:
                            out.add((cfg.b2, b4, b6))
            start = end
    return out


def _has_compliant_pair(cfg: PairSearchConfig, pts) -> bool:
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if pts[i][0] == pts[j][0]:
                continue
            if _compliant(cfg, pts[i], pts[j]):
                return True
    return False
