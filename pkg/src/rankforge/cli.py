"""Command line interface.

Subcommands: search-direct, search-pair, points, rank, records, fit, verify.
Exit code 0 on success, 2 when some candidates failed a verification stage.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from rankforge.curves import parse_curve
from rankforge.heights import rank_lower_bound
from rankforge.pipeline import search_candidates
from rankforge.points import inventory, sieve_search
from rankforge.records import (
    CurveDossier,
    RecordTable,
    bundled_table,
    growth_fit,
    load_dossiers,
    plot_data,
    record_dataset,
    render_tables,
)
from rankforge.search_direct import FAVORABLE_CLASSES, SearchConfig
from rankforge.search_pair import PairSearchConfig


def _parse_classes(text: str):
    if text in ("all", "any"):
        return "all"
    if text in ("favorable", "default"):
        return FAVORABLE_CLASSES
    out = []
    for part in text.split(";"):
        trip = tuple(int(v) for v in part.split(","))
        if len(trip) != 3:
            raise argparse.ArgumentTypeError(f"bad class triple {part!r}")
        out.append(trip)
    return tuple(out)


def _add_search_common(p):
    p.add_argument("--h", type=int, required=True, help="height parameter")
    p.add_argument("--b2", type=int, default=0, choices=(-4, -3, 0, 1, 4, 5))
    p.add_argument("--classes", type=_parse_classes, default=FAVORABLE_CLASSES,
                   help='"0,2,1" or "0,2,1;0,0,0" or "all" or "favorable"')
    p.add_argument("--threshold", type=int, default=10)
    p.add_argument("--b4-min", type=int, default=None)
    p.add_argument("--b4-max", type=int, default=None)
    p.add_argument("--out", default=None, help="candidate JSONL path (default stdout)")
    p.add_argument("--checkpoint", default=None, help="manifest path for resume")
    p.add_argument("--workers", type=int, default=1)


def _emit_candidates(cands, path):
    fh = open(path, "w") if path else sys.stdout
    try:
        for c in sorted(cands, key=lambda c: (c.b4, c.b6)):
            fh.write(json.dumps(c.record()) + "\n")
    finally:
        if path:
            fh.close()


def _cmd_search_direct(args) -> int:
    cfg = SearchConfig(
        h=args.h, b2=args.b2, classes=args.classes, threshold=args.threshold,
        b4_min=args.b4_min, b4_max=args.b4_max,
    )
    cands = search_candidates(cfg, manifest_path=args.checkpoint, workers=args.workers)
    _emit_candidates(cands, args.out)
    return 0


def _cmd_search_pair(args) -> int:
    cfg = PairSearchConfig(
        h=args.h, b2=args.b2, U=args.U, L=args.L, classes=args.classes,
        threshold=args.threshold, b4_min=args.b4_min, b4_max=args.b4_max,
    )
    cands = search_candidates(cfg, manifest_path=args.checkpoint, workers=args.workers)
    _emit_candidates(cands, args.out)
    if args.stats:
        stats = {
            "candidates": len(cands),
            "h": args.h, "U": args.U, "L": cfg.level,
        }
        with open(args.stats, "w") as fh:
            json.dump(stats, fh)
    return 0


def _cmd_points(args) -> int:
    curve = parse_curve(args.curve)
    gens = None
    if args.m > 0:
        seed = sieve_search(curve, min(args.xbound, 10 ** 5))
        assessment = rank_lower_bound(
            curve, [(Fraction(x), Fraction(y)) for x, y in seed]
        )
        gens = assessment.basis
    inv = inventory(curve, args.xbound, args.m, generators=gens)
    fh = open(args.out, "w") if args.out else sys.stdout
    try:
        for x, y in inv.points:
            fh.write(json.dumps({"x": x, "y": y}) + "\n")
        fh.write(json.dumps({"I": inv.x_count, "xbound": inv.x_bound, "m": inv.combo_bound}) + "\n")
    finally:
        if args.out:
            fh.close()
    return 0


def _cmd_rank(args) -> int:
    curve = parse_curve(args.curve)
    pts = []
    if args.points:
        with open(args.points) as fh:
            for line in fh:
                d = json.loads(line)
                if "x" in d:
                    pts.append((Fraction(d["x"]), Fraction(d["y"])))
    else:
        pts = [(Fraction(x), Fraction(y)) for x, y in sieve_search(curve, args.xbound)]
    a = rank_lower_bound(curve, pts)
    json.dump(
        {
            "rank_lb": a.rank,
            "regulator": a.determinant,
            "min_eigenvalue": a.min_eigenvalue,
            "basis": [[str(p[0]), str(p[1])] for p in a.basis],
        },
        sys.stdout,
    )
    print()
    return 0


def _cmd_records(args) -> int:
    table = bundled_table() if args.bundled else RecordTable()
    if args.load:
        for d in load_dossiers(args.load):
            table.update(d, verify=args.verify)
    text = render_tables(table)
    if args.emit:
        with open(args.emit, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_fit(args) -> int:
    rank_range = tuple(int(v) for v in args.ranks.split(":"))
    data = record_dataset()
    lin = growth_fit(data, "linear", rank_range)
    pw = growth_fit(data, "power", rank_range)
    csv = plot_data(data)
    if args.emit:
        with open(args.emit, "w") as fh:
            fh.write(csv)
    json.dump(
        {
            "slope": lin.params[0],
            "intercept": lin.params[1],
            "power_exponent": pw.params[0],
            "power_exponent_inverse_regression": pw.params[2],
            "ranks": list(lin.ranks),
        },
        sys.stdout,
    )
    print()
    return 0


def _cmd_verify(args) -> int:
    curve = parse_curve(args.curve)
    from rankforge.conductor import conductor

    N, don = conductor(curve)
    seed = sieve_search(curve, min(args.xbound, 10 ** 5))
    assessment = rank_lower_bound(
        curve, [(Fraction(x), Fraction(y)) for x, y in seed]
    )
    inv = inventory(curve, args.xbound, args.m, generators=assessment.basis)
    dossier = CurveDossier(
        curve=curve.ainvs(),
        conductor=N,
        abs_disc=abs(curve.discriminant()),
        delta_over_n=don,
        x_count=inv.x_count,
        rank_lb=assessment.rank,
        provenance={"source": "verify", "xbound": args.xbound, "m": args.m},
    )
    print(dossier.to_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rankforge")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("search-direct", help="single-point slice search")
    _add_search_common(p)
    p.set_defaults(func=_cmd_search_direct)

    p = sub.add_parser("search-pair", help="point-pair factorization search")
    _add_search_common(p)
    p.add_argument("--U", type=int, default=1, help="W truncation divisor")
    p.add_argument("--L", type=int, default=None, help="log2 of counter array size")
    p.add_argument("--stats", default=None, help="JSON stats sidecar path")
    p.set_defaults(func=_cmd_search_pair)

    p = sub.add_parser("points", help="enumerate integral points")
    p.add_argument("--curve", required=True)
    p.add_argument("--xbound", type=lambda s: int(float(s)), default=10 ** 9)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_points)

    p = sub.add_parser("rank", help="rank lower bound from integral points")
    p.add_argument("--curve", required=True)
    p.add_argument("--points", default=None, help="points JSONL (else sieve)")
    p.add_argument("--xbound", type=lambda s: int(float(s)), default=10 ** 5)
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("records", help="maintain/render record tables")
    p.add_argument("--load", default=None, help="dossier JSONL")
    p.add_argument("--emit", default=None, help="markdown output path")
    p.add_argument("--bundled", action="store_true", help="start from bundled tables")
    p.add_argument("--verify", action="store_true", help="re-verify loaded dossiers")
    p.set_defaults(func=_cmd_records)

    p = sub.add_parser("fit", help="growth-rate fits and plot data")
    p.add_argument("--emit", default=None, help="CSV output path")
    p.add_argument("--ranks", default="5:11", help="rank window lo:hi")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("verify", help="re-derive a dossier from a bare curve")
    p.add_argument("--curve", required=True)
    p.add_argument("--xbound", type=lambda s: int(float(s)), default=10 ** 6)
    p.add_argument("--m", type=int, default=2)
    p.set_defaults(func=_cmd_verify)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
