"""Direct search: loop over (b4, x, y), tally the implied b6 values.

For a fixed b2 in {-4,-3,0,1,4,5} and height parameter h, every integral
point (x, y) with |x| <= h^2, 0 <= y <= 2h^3 on some curve
y^2 = 4x^3 + b2 x^2 + 2 b4 x + b6 determines b6 = y^2 - 4x^3 - b2 x^2 - 2 b4 x.
Curves with many small integral points therefore show up as repeated b6
values inside a b4 slice.  Parity bookkeeping (which (x, y) parities are
possible for which (b4, b6) parities) and the favorable residue classes of
(b2, b4, b6) mod 8 cut the work by a large constant factor.

Counting is done with sort-and-count over the generated slice rather than a
direct-indexed array: a slice generates O(h^5) values spread over an O(h^6)
range.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from rankforge.curves import TwoTorsionModel, isqrt_exact

# (b2, b4, b6) mod 8 classes that empirically produce most record curves.
FAVORABLE_CLASSES = (
    (1, 1, 1),
    (1, 3, 1),
    (5, 2, 4),
    (5, 0, 0),
    (0, 2, 1),
    (0, 0, 0),
    (4, 0, 1),
)

B2_VALUES = (-4, -3, 0, 1, 4, 5)

REJECT = "reject"
Y_EVEN = "y even"
Y_ODD = "y odd"
Y_EQ_X = "y = x mod 2"
Y_NEQ_X = "y != x mod 2"


def allowed_xy_parity(b2_parity: int, b4_parity: int, b6_parity: int) -> str:
    """Which (x, y) parity classes can produce the given invariant parities.

    The four consistent rows correspond to (a1, a3) in {0,1}^2; combinations
    off the table (an odd b4 with even b6, or any odd b4 with even b2) admit
    no integral model and are rejected.
    """
    b2_parity, b4_parity, b6_parity = b2_parity & 1, b4_parity & 1, b6_parity & 1
    if b2_parity == 0:
        if b4_parity == 1:
            return REJECT
        return Y_ODD if b6_parity else Y_EVEN
    if b4_parity != b6_parity:
        return REJECT
    return Y_NEQ_X if b4_parity else Y_EQ_X


def mod8_favorable(b2: int, b4: int, b6: int, classes=FAVORABLE_CLASSES) -> bool:
    """Membership of (b2, b4, b6) mod 8 in the configured class set."""
    if classes == "all" or classes is None:
        return True
    return (b2 % 8, b4 % 8, b6 % 8) in {tuple(c) for c in classes}


@dataclass(frozen=True)
class SearchConfig:
    h: int
    b2: int = 0
    classes: object = FAVORABLE_CLASSES  # iterable of mod-8 triples, or "all"
    threshold: int = 10
    b4_min: int | None = None  # default -2 h^4
    b4_max: int | None = None  # default 0
    allow_positive_b4: bool = False
    allow_negative_b6: bool = False

    def __post_init__(self):
        if self.h < 2:
            raise ValueError("h must be at least 2")
        if self.b2 not in B2_VALUES:
            raise ValueError(f"b2 must be one of {B2_VALUES}")

    @property
    def x_bound(self) -> int:
        return self.h ** 2

    @property
    def y_bound(self) -> int:
        return 2 * self.h ** 3

    def b4_range(self) -> tuple[int, int]:
        lo = self.b4_min if self.b4_min is not None else -2 * self.h ** 4
        hi = self.b4_max if self.b4_max is not None else (
            2 * self.h ** 4 if self.allow_positive_b4 else 0
        )
        return lo, hi

    def class_set(self):
        if self.classes == "all" or self.classes is None:
            return None
        return {tuple(c) for c in self.classes if c[0] == self.b2 % 8}

    def key(self) -> str:
        cls = self.classes if isinstance(self.classes, str) else sorted(
            tuple(c) for c in self.classes
        )
        return repr(
            (
                "direct",
                self.h,
                self.b2,
                cls,
                self.threshold,
                self.b4_range(),
                self.allow_positive_b4,
                self.allow_negative_b6,
            )
        )


@dataclass(frozen=True)
class CandidateCurve:
    b2: int
    b4: int
    b6: int
    count: int
    witnesses: tuple = ()

    def model(self) -> TwoTorsionModel:
        return TwoTorsionModel(self.b2, self.b4, self.b6)

    def record(self) -> dict:
        return {"b2": self.b2, "two_b4": 2 * self.b4, "b6": self.b6, "count": self.count}


def _b4_allowed(cfg: SearchConfig, b4: int, class_set) -> bool:
    if cfg.b2 % 2 == 0 and b4 % 2 != 0:
        return False
    if class_set is not None and not any(b4 % 8 == c[1] for c in class_set):
        return False
    return True


def _b6_residues(cfg: SearchConfig, b4: int, class_set):
    """Allowed b6 residues mod 8 for this b4 slice, or None for parity-only."""
    if class_set is None:
        return None
    return {c[2] for c in class_set if c[1] == b4 % 8}


def _slice_b6_values(cfg: SearchConfig, b4: int, y_parity: int | None = None) -> np.ndarray:
    """All b6 values generated by box points over this b4 slice (with parity
    couplings respected), as an int64 array."""
    h2, h3 = cfg.x_bound, cfg.y_bound
    xs = np.arange(-h2, h2 + 1, dtype=np.int64)
    ys = np.arange(0, h3 + 1, dtype=np.int64)
    b2 = cfg.b2
    px = ((4 * xs + b2) * xs + 2 * b4) * xs  # 4x^3 + b2 x^2 + 2 b4 x
    if b2 % 2 == 0:
        if y_parity is not None:
            ys = ys[(ys & 1) == y_parity]
        vals = (ys * ys)[:, None] - px[None, :]
        return vals.ravel()
    # Odd b2: y must match x parity for even b6 (b4 even) and differ for odd
    # b6 (b4 odd); either way the admissible grid is parity-coupled.
    want_same = b4 % 2 == 0
    out = []
    for xpar in (0, 1):
        ypar = xpar if want_same else 1 - xpar
        xs_p = xs[(xs & 1) == xpar]
        ys_p = ys[(ys & 1) == ypar]
        vals = (ys_p * ys_p)[:, None] - px[(xs & 1) == xpar][None, :]
        out.append(vals.ravel())
    return np.concatenate(out)


def _winners(cfg: SearchConfig, b4: int, class_set) -> list[tuple[int, int]]:
    residues = _b6_residues(cfg, b4, class_set)
    y_parity = None
    if cfg.b2 % 2 == 0 and residues is not None:
        parities = {r & 1 for r in residues}
        if len(parities) == 1:
            y_parity = parities.pop()  # b6 parity equals y parity when b2 is even
    vals = _slice_b6_values(cfg, b4, y_parity)
    if not cfg.allow_negative_b6:
        vals = vals[vals >= 0]
    if residues is not None:
        m8 = vals % 8
        mask = np.zeros(vals.shape, dtype=bool)
        for r in residues:
            mask |= m8 == r
        vals = vals[mask]
    if vals.size == 0:
        return []
    uniq, counts = np.unique(vals, return_counts=True)
    sel = counts >= cfg.threshold
    return [(int(b6), int(c)) for b6, c in zip(uniq[sel], counts[sel])]


def count_box_points(cfg_or_h, b2: int, b4: int, b6: int) -> list[tuple[int, int]]:
    """Exact box points (x, y) of a single curve: |x| <= h^2, 0 <= y <= 2h^3."""
    h = cfg_or_h.h if isinstance(cfg_or_h, SearchConfig) else cfg_or_h
    h2, h3 = h * h, 2 * h ** 3
    if 12 * h ** 6 + abs(b2) * h ** 4 + 2 * abs(b4) * h ** 2 + abs(b6) < 2 ** 52:
        # Everything fits comfortably in int64; verification stays exact.
        xs = np.arange(-h2, h2 + 1, dtype=np.int64)
        rhs = ((4 * xs + b2) * xs + 2 * b4) * xs + b6
        ok = rhs >= 0
        ys = np.zeros_like(rhs)
        ys[ok] = np.sqrt(rhs[ok].astype(np.float64)).astype(np.int64)
        # float sqrt may land one off in either direction
        hit = ok & ((ys * ys == rhs) | ((ys + 1) ** 2 == rhs) | ((ys - 1) ** 2 == rhs))
        pts = []
        for x, r, y0 in zip(xs[hit].tolist(), rhs[hit].tolist(), ys[hit].tolist()):
            y = next(y0 + d for d in (0, 1, -1) if (y0 + d) ** 2 == r)
            if 0 <= y <= h3:
                pts.append((x, y))
        return pts
    pts = []
    for x in range(-h2, h2 + 1):
        rhs = ((4 * x + b2) * x + 2 * b4) * x + b6
        y = isqrt_exact(rhs)
        if y is not None and y <= h3:
            pts.append((x, y))
    return pts


def _emit_slice(cfg: SearchConfig, b4: int, class_set) -> list[CandidateCurve]:
    out = []
    for b6, count in _winners(cfg, b4, class_set):
        model = TwoTorsionModel(cfg.b2, b4, b6)
        if model.discriminant() == 0:
            continue  # degenerate b6 (e.g. square families) hit the counter vacuously
        witnesses = tuple(count_box_points(cfg, cfg.b2, b4, b6))
        assert len(witnesses) == count, (b4, b6, count, len(witnesses))
        for x, y in witnesses:
            assert y * y == model.rhs(x)
        out.append(CandidateCurve(cfg.b2, b4, b6, count, witnesses))
    return out


def partition_b4_range(lo: int, hi: int, parts: int) -> list[tuple[int, int]]:
    """Split [lo, hi] into contiguous chunks (inclusive bounds)."""
    n = hi - lo + 1
    parts = max(1, min(parts, n))
    step = (n + parts - 1) // parts
    return [(lo + i * step, min(lo + (i + 1) * step - 1, hi)) for i in range(parts)]


def run_direct_slice(cfg: SearchConfig, lo: int, hi: int) -> list[CandidateCurve]:
    """Process the b4 sub-range [lo, hi]; workers call this independently."""
    class_set = cfg.class_set()
    if class_set is not None and not class_set:
        return []
    out = []
    for b4 in range(lo, hi + 1):
        if not _b4_allowed(cfg, b4, class_set):
            continue
        out.extend(_emit_slice(cfg, b4, class_set))
    return out


def run_direct(
    cfg: SearchConfig,
    workers: int = 1,
    progress=None,
    partitions: Iterable[tuple[int, int]] | None = None,
) -> Iterator[CandidateCurve]:
    """Stream candidates over the configured b4 range (deterministic order)."""
    lo, hi = cfg.b4_range()
    if partitions is None:
        partitions = partition_b4_range(lo, hi, max(workers, 1) * 8)
    if workers > 1:
        import multiprocessing as mp

        with mp.Pool(workers) as pool:
            results = pool.starmap(
                _worker_direct, [(cfg, plo, phi) for plo, phi in partitions]
            )
        for (plo, phi), res in zip(partitions, results):
            if progress:
                progress(plo, phi)
            yield from res
    else:
        for plo, phi in partitions:
            yield from run_direct_slice(cfg, plo, phi)
            if progress:
                progress(plo, phi)


def _worker_direct(cfg, lo, hi):
    return run_direct_slice(cfg, lo, hi)


def naive_direct_oracle(cfg: SearchConfig) -> list[CandidateCurve]:
    """Independent all-(b4, b6) enumeration: for every admissible pair, count
    box points by per-x square testing (vectorized over b6), and emit pairs
    reaching the threshold.  Small h only."""
    class_set = cfg.class_set()
    lo, hi = cfg.b4_range()
    h2, h3 = cfg.x_bound, cfg.y_bound
    spread = 8 * cfg.h ** 6 + abs(cfg.b2) * cfg.h ** 4 + 2 * max(abs(lo), abs(hi)) * h2
    b6_lo = -spread if cfg.allow_negative_b6 else 0
    b6_hi = 4 * cfg.h ** 6 + spread + 1
    out = []
    ys = np.arange(0, h3 + 1, dtype=np.int64)
    sq = ys * ys
    for b4 in range(lo, hi + 1):
        if not _b4_allowed(cfg, b4, class_set):
            continue
        counts = np.zeros(b6_hi - b6_lo, dtype=np.int32)
        residues = _b6_residues(cfg, b4, class_set)
        for x in range(-h2, h2 + 1):
            px = ((4 * x + cfg.b2) * x + 2 * b4) * x
            # box points of (b4, b6) at this x have y^2 = px + b6; the y
            # values are distinct, so the fancy-indexed += never collides.
            vals = sq - px
            ok = (vals >= b6_lo) & (vals < b6_hi)
            counts[vals[ok] - b6_lo] += 1
        idx = np.nonzero(counts >= cfg.threshold)[0]
        for i in idx.tolist():
            b6 = i + b6_lo
            if allowed_xy_parity(cfg.b2, b4, b6) == REJECT:
                continue
            if residues is not None and b6 % 8 not in residues:
                continue
            if TwoTorsionModel(cfg.b2, b4, b6).discriminant() == 0:
                continue
            pts = count_box_points(cfg, cfg.b2, b4, b6)
            out.append(CandidateCurve(cfg.b2, b4, b6, len(pts), tuple(pts)))
    return out
