"""Record tables (best five per rank by conductor and by |discriminant|),
growth-rate fits and the conditional upper bound on rank.

log N of the per-rank minimum grows roughly linearly in r when plotted
against x = log N / log log N; the fits here reproduce that analysis.  The
conditional bound r <= (1/2) x (1 + log(8e)/log log N) holds for every
record and is implemented without the lower-order error term.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from rankforge.conductor import conductor
from rankforge.curves import WeierstrassCurve
from rankforge.records_data import (
    CONDUCTOR_RECORDS,
    DISCRIMINANT_RECORDS,
    LOG_CONDUCTOR_COMPARISON,
    LOW_RANK_CONDUCTORS,
)

TABLE_SIZE = 5


class InsufficientData(ValueError):
    """Too few (or degenerate) samples for a regression."""


class DomainError(ValueError):
    """Argument outside the formula's domain (needs log log N > 1)."""


@dataclass(frozen=True)
class CurveDossier:
    curve: tuple
    conductor: int
    abs_disc: int
    delta_over_n: int
    x_count: int            # the I statistic
    rank_lb: int
    provenance: dict = field(default_factory=dict)

    def to_json(self) -> str:
        d = {
            "curve": list(self.curve),
            "conductor": str(self.conductor),
            "abs_disc": str(self.abs_disc),
            "delta_over_n": str(self.delta_over_n),
            "I": self.x_count,
            "rank_lb": self.rank_lb,
            "provenance": self.provenance,
        }
        return json.dumps(d, sort_keys=True)

    @staticmethod
    def from_json(line: str) -> "CurveDossier":
        d = json.loads(line)
        return CurveDossier(
            curve=tuple(d["curve"]),
            conductor=int(d["conductor"]),
            abs_disc=int(d["abs_disc"]),
            delta_over_n=int(d["delta_over_n"]),
            x_count=int(d["I"]),
            rank_lb=int(d["rank_lb"]),
            provenance=d.get("provenance", {}),
        )


def verify_dossier(dossier: CurveDossier) -> bool:
    """Recompute N and |delta| for the dossier's curve and compare."""
    E = WeierstrassCurve(*dossier.curve)
    if abs(E.discriminant()) != dossier.abs_disc:
        return False
    N, don = conductor(E)
    return N == dossier.conductor and don == dossier.delta_over_n


@dataclass
class RecordTable:
    """Per rank: the five budget entries of smallest N and of smallest |delta|."""

    by_conductor: dict = field(default_factory=dict)
    by_discriminant: dict = field(default_factory=dict)

    def update(self, dossier: CurveDossier, verify: bool = False) -> "RecordTable":
        if verify and not verify_dossier(dossier):
            raise ValueError(f"dossier fails re-verification: {dossier}")
        r = dossier.rank_lb
        for table, key in (
            (self.by_conductor, lambda d: d.conductor),
            (self.by_discriminant, lambda d: d.abs_disc),
        ):
            rows = table.setdefault(r, [])
            if any(d.curve == dossier.curve for d in rows):
                continue
            rows.append(dossier)
            rows.sort(key=key)
            del rows[TABLE_SIZE:]
        return self

    def minima(self) -> dict[int, int]:
        return {
            r: rows[0].conductor
            for r, rows in sorted(self.by_conductor.items())
            if rows
        }

    def log_conductor_row(self) -> dict[int, float]:
        return {r: math.log(n) for r, n in self.minima().items()}


def update_records(table: RecordTable, dossier: CurveDossier, verify=False) -> RecordTable:
    return table.update(dossier, verify=verify)


def bundled_table() -> RecordTable:
    """RecordTable preloaded with the bundled rows (no re-verification here;
    the test suite re-verifies every row)."""
    t = RecordTable()
    for ai, N, don, I, r in CONDUCTOR_RECORDS:
        E = WeierstrassCurve(*ai)
        t.update(
            CurveDossier(tuple(ai), N, N * don, don, I, r, {"source": "bundled"})
        )
    for ai, absD, I, r in DISCRIMINANT_RECORDS:
        E = WeierstrassCurve(*ai)
        # conductor not printed for this table; recompute lazily when needed
        t.by_discriminant.setdefault(r, [])
        rows = t.by_discriminant[r]
        if not any(d.curve == tuple(ai) for d in rows):
            rows.append(
                CurveDossier(tuple(ai), 0, absD, 0, I, r, {"source": "bundled"})
            )
            rows.sort(key=lambda d: d.abs_disc)
            del rows[TABLE_SIZE:]
    return t


def lognew_row(table: RecordTable, ranks=(6, 7, 8, 9, 10, 11)) -> list[float]:
    row = table.log_conductor_row()
    return [row[r] for r in ranks]


def record_dataset(ranks=range(1, 12)) -> list[tuple[int, int]]:
    """(rank, minimal known N) pairs from the low-rank literature values plus
    the bundled record table."""
    minima = dict(LOW_RANK_CONDUCTORS)
    minima.update(bundled_table().minima())
    return [(r, minima[r]) for r in ranks if r in minima]


def _x_of(n: int) -> float:
    return math.log(n) / math.log(math.log(n))


@dataclass(frozen=True)
class GrowthFit:
    model: str
    params: tuple
    ranks: tuple
    residual: float


def growth_fit(records, model: str = "linear", rank_range=(5, 11)) -> GrowthFit:
    """Least-squares fit of rank against x = log N / log log N.

    linear: r = slope * x + intercept.
    power:  log r = exponent * log x + c (the exponent is params[0]); the
            inverse regression (log x on log r) is reported as params[2].

    records: iterable of (rank, N).  The default window is ranks 5..11, the
    range the searched records cover; the fit is meaningless below 3 points.
    """
    data = sorted(
        (r, n) for r, n in records if rank_range[0] <= r <= rank_range[1] and r > 0
    )
    if len(data) < 3:
        raise InsufficientData(f"{len(data)} usable points")
    xs = [_x_of(n) for _, n in data]
    rs = [float(r) for r, _ in data]
    if model == "linear":
        slope, intercept, res = _least_squares(xs, rs)
        return GrowthFit("linear", (slope, intercept), tuple(r for r, _ in data), res)
    if model == "power":
        lx = [math.log(x) for x in xs]
        lr = [math.log(r) for r in rs]
        exponent, c, res = _least_squares(lx, lr)
        inv_exponent, _, _ = _least_squares(lr, lx)
        return GrowthFit(
            "power", (exponent, c, inv_exponent), tuple(r for r, _ in data), res
        )
    raise ValueError(f"unknown model {model!r}")


def _least_squares(xs, ys):
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    if sxx == 0:
        raise InsufficientData("degenerate fit: all x identical")
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = my - slope * mx
    res = sum((y - slope * x - intercept) ** 2 for x, y in zip(xs, ys))
    return slope, intercept, res


_E_E = math.exp(math.e)


def grh_bsd_bound(n: int) -> float:
    """Conditional rank bound (1/2)(log N/log log N)(1 + log(8e)/log log N)."""
    if n <= _E_E:
        raise DomainError(f"N must exceed e^e, got {n}")
    lln = math.log(math.log(n))
    return 0.5 * (math.log(n) / lln) * (1 + math.log(8 * math.e) / lln)


def plot_data(records=None, sqrt_scale: float | None = None) -> str:
    """CSV of (rank, x, linear fit, sqrt-law reference) rows for plotting."""
    if records is None:
        records = record_dataset()
    records = sorted(records)
    header = "rank,log_n_over_loglog_n,linear_fit,sqrt_reference"
    if not records:
        return header + "\n"
    fit = growth_fit(records) if len(records) >= 3 else None
    if sqrt_scale is None:
        rmax, nmax = max(records)
        sqrt_scale = rmax / math.sqrt(_x_of(nmax))
    lines = [header]
    for r, n in records:
        x = _x_of(n)
        lin = fit.params[0] * x + fit.params[1] if fit else float("nan")
        lines.append(
            f"{r},{x:.6f},{lin:.6f},{sqrt_scale * math.sqrt(x):.6f}"
        )
    return "\n".join(lines) + "\n"


def render_tables(table: RecordTable) -> str:
    """Markdown rendering of the three summary tables."""
    out = ["## Low conductor records", ""]
    out.append("| curve | N | |delta|/N | I | rank |")
    out.append("|---|---|---|---|---|")
    for r in sorted(table.by_conductor):
        for d in table.by_conductor[r]:
            out.append(
                f"| {list(d.curve)} | {d.conductor} | {d.delta_over_n} | {d.x_count} | {r} |"
            )
    out.append("")
    out.append("## Low absolute discriminant records")
    out.append("")
    out.append("| curve | |delta| | I | rank |")
    out.append("|---|---|---|---|")
    for r in sorted(table.by_discriminant):
        for d in table.by_discriminant[r]:
            out.append(f"| {list(d.curve)} | {d.abs_disc} | {d.x_count} | {r} |")
    out.append("")
    out.append("## log N of rank records (old vs current table)")
    out.append("")
    out.append("| rank | old | current |")
    out.append("|---|---|---|")
    row = table.log_conductor_row()
    for r, old in zip(
        LOG_CONDUCTOR_COMPARISON["ranks"], LOG_CONDUCTOR_COMPARISON["old"]
    ):
        cur = f"{row[r]:.3f}" if r in row else "-"
        out.append(f"| {r} | {old:.3f} | {cur} |")
    return "\n".join(out) + "\n"


def load_dossiers(path) -> list[CurveDossier]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(CurveDossier.from_json(line))
    return out
