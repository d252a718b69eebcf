"""Acceptance suite: every criterion at its stated tolerance.

Each criterion is one test named test_criterion_<n>_...; the conftest summary
hook prints one pass/fail line per criterion at the end of the run.  The
whole module takes on the order of ten minutes, dominated by the full h=12
search sweep and the 10^9 point scans.
"""

import random
import time
import warnings
from fractions import Fraction

import pytest

from rankforge.conductor import conductor
from rankforge.curves import (
    SingularCurve,
    WeierstrassCurve,
    point_mul,
    point_neg,
    two_torsion_model,
    _add_raw,
)
from rankforge.heights import canonical_height, rank_lower_bound
from rankforge.pipeline import resume, run_pipeline, search_candidates
from rankforge.points import inventory, sieve_search
from rankforge.records import (
    bundled_table,
    growth_fit,
    grh_bsd_bound,
    lognew_row,
    record_dataset,
)
from rankforge.records_data import (
    CONDUCTOR_RECORDS,
    DISCRIMINANT_RECORDS,
    LOG_CONDUCTOR_COMPARISON,
    MESTRE_RANK14,
)
from rankforge.search_direct import (
    SearchConfig,
    naive_direct_oracle,
    run_direct,
)
from rankforge.search_pair import (
    PairSearchConfig,
    compliant_pair_oracle,
    pair_statistics,
    run_pair,
)


def test_criterion_1_table_invariants():
    """All 35 conductor-table rows reproduce N and |delta|/N exactly; all 30
    discriminant-table rows reproduce |delta| exactly; under two minutes."""
    t0 = time.time()
    for ainvs, N, don, _, _ in CONDUCTOR_RECORDS:
        E = WeierstrassCurve(*ainvs)
        assert conductor(E) == (N, don), ainvs
        assert abs(E.discriminant()) == N * don, ainvs
    for ainvs, abs_delta, _, _ in DISCRIMINANT_RECORDS:
        assert abs(WeierstrassCurve(*ainvs).discriminant()) == abs_delta, ainvs
    assert time.time() - t0 < 120


def test_criterion_2_log_conductor_row():
    row = lognew_row(bundled_table())
    expected = (22.370, 26.670, 33.151, 38.008, 43.768, 51.246)
    assert LOG_CONDUCTOR_COMPARISON["new"] == expected
    for got, want in zip(row, expected):
        assert abs(got - want) <= 1e-3, (got, want)


def test_criterion_3_search_reproduction():
    """Full h=12 direct sweep emits the rank-5 record's two-torsion model;
    the pipeline carries it to a dossier with N = 19047851 and r = 5."""
    cfg = SearchConfig(h=12, b2=0, classes=((0, 2, 1),), threshold=10)
    emitted = {(c.b4, c.b6) for c in run_direct(cfg, workers=2)}
    assert (-158, 1369) in emitted

    window = SearchConfig(h=12, b2=0, classes=((0, 2, 1),), threshold=10,
                          b4_min=-160, b4_max=-150)
    res = run_pipeline(window, x_bound=10 ** 5, combo_bound=2, min_count=20)
    dossier = {d.curve: d for d in res.dossiers}[(0, 0, 1, -79, 342)]
    assert dossier.conductor == 19047851
    assert dossier.rank_lb == 5


def test_criterion_4_oracle_equivalence():
    """Direct search equals the per-curve enumeration oracle at h = 6, and
    the pair search finds every curve possessing a restriction-compliant
    pair of box points."""
    dcfg = SearchConfig(h=6, b2=1, classes="all", threshold=8)
    mine = sorted((c.b4, c.b6, c.count) for c in run_direct(dcfg))
    oracle = sorted((c.b4, c.b6, c.count) for c in naive_direct_oracle(dcfg))
    assert mine == oracle and mine

    for b2 in (1, 0):
        pcfg = PairSearchConfig(h=6, b2=b2, U=1, L=10, threshold=2,
                                phase1_threshold=1)
        found = {(c.b2, c.b4, c.b6) for c in run_pair(pcfg)}
        compliant = compliant_pair_oracle(pcfg)
        assert compliant and compliant <= found, sorted(compliant - found)[:5]


def test_criterion_5_catch_rates():
    """Mean fraction of canonical quadruples with r, t <= h is 18% +- 10
    points over the five rank-6 record curves; the W-truncation catch rate
    at U = 1 is 83% +- 10 points.  Wide tolerances: the fractions swing
    noticeably from curve to curve."""
    rank6 = [row for row in CONDUCTOR_RECORDS if row[4] == 6]
    rt, w = [], []
    for ainvs, *_ in rank6:
        model = two_torsion_model(WeierstrassCurve(*ainvs))
        stats = pair_statistics(model, U=1)
        rt.append(stats["rt_fraction"])
        w.append(stats["w_fraction"])
    rt_mean = sum(rt) / len(rt)
    w_mean = sum(w) / len(w)
    assert abs(rt_mean - 0.18) <= 0.10, rt
    assert abs(w_mean - 0.83) <= 0.10, w


def _inventory_count(ainvs, x_bound, m):
    E = WeierstrassCurve(*ainvs)
    seed = [(Fraction(x), Fraction(y)) for x, y in sieve_search(E, 10 ** 5)]
    basis = rank_lower_bound(E, seed).basis
    return inventory(E, x_bound, m, generators=basis).x_count


def test_criterion_6_integral_point_counts():
    got = _inventory_count([0, 0, 1, -79, 342], 10 ** 9, 3)
    assert got >= 39, got
    if got > 39:
        warnings.warn(f"improved I for the rank-5 record: {got} > 39")
    got6 = _inventory_count([0, 0, 1, -277, 4566], 10 ** 9, 3)
    assert got6 >= 49, got6
    if got6 > 49:
        warnings.warn(f"improved I for the rank-6 curve: {got6} > 49")


@pytest.mark.stretch
@pytest.mark.skip(reason="stretch reproduction: 10^12 scan takes hours")
def test_criterion_6_stretch_mestre():
    E = WeierstrassCurve(*MESTRE_RANK14)
    pts = sieve_search(E, 10 ** 12)
    assert len({x for x, _ in pts}) >= 311


def test_criterion_7_rank_lower_bounds():
    for want in (5, 6, 7, 8):
        ainvs = next(r[0] for r in CONDUCTOR_RECORDS if r[4] == want)
        E = WeierstrassCurve(*ainvs)
        pts = [(Fraction(x), Fraction(y)) for x, y in sieve_search(E, 10 ** 6)]
        a = rank_lower_bound(E, pts)
        assert a.rank == want, (ainvs, a.rank)
        assert a.determinant > 1e-6


def test_criterion_8_growth_fit():
    data = record_dataset()  # ranks 1..11: low-rank minima plus the table
    lin = growth_fit(data, "linear")
    assert abs(lin.params[0] - 0.865) <= 0.05
    assert abs(lin.params[1] + 0.126) <= 0.10
    power = growth_fit(data, "power")
    assert abs(power.params[0] - 0.975) <= 0.05
    for r, n in data:
        assert grh_bsd_bound(n) >= r, (r, n)
    # verification runs in well under a second; no timing assert needed


def test_criterion_9_property_suites(tmp_path):
    # curve identities on 10^4 random curves
    rng = random.Random(1234)
    checked = 0
    while checked < 10 ** 4:
        try:
            E = WeierstrassCurve(
                rng.randint(0, 1),
                rng.randint(-1, 1),
                rng.randint(0, 1),
                rng.randint(-10 ** 6, 10 ** 6),
                rng.randint(-10 ** 9, 10 ** 9),
            )
        except SingularCurve:
            continue
        checked += 1
        b2, b4, b6, b8 = E.b_invariants()
        c4, c6 = E.c_invariants()
        assert 4 * b8 == b2 * b6 - b4 * b4
        assert c4 ** 3 - c6 * c6 == 1728 * E.discriminant()

    # height quadraticity and the parallelogram law at eps = 1e-8
    eps = 1e-8
    E = WeierstrassCurve(0, 1, 1, -2, 0)
    P, Q = (Fraction(0), Fraction(0)), (Fraction(1), Fraction(0))
    hP, hQ = canonical_height(E, P, eps), canonical_height(E, Q, eps)
    for n in range(2, 9):
        hn = canonical_height(E, point_mul(E, n, P), eps)
        assert abs(hn - n * n * hP) < n * n * eps
    S, D = _add_raw(E, P, Q), _add_raw(E, P, point_neg(E, Q))
    lhs = canonical_height(E, S, eps) + canonical_height(E, D, eps)
    assert abs(lhs - 2 * hP - 2 * hQ) < 8 * eps

    # pipeline determinism under interruption and resume at h = 6
    cfg = SearchConfig(h=6, b2=0, classes="all", threshold=10)
    knobs = dict(x_bound=10 ** 4, combo_bound=0, min_count=18)
    straight = run_pipeline(cfg, **knobs)
    assert straight.dossiers
    path = str(tmp_path / "ckpt")
    search_candidates(cfg, manifest_path=path, stop_after=2)
    resumed = resume(cfg, path, **knobs)
    assert [d.curve for d in straight.dossiers] == [d.curve for d in resumed.dossiers]
