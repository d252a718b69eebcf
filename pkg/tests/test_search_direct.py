import random

import pytest

from rankforge.curves import TwoTorsionModel
from rankforge.search_direct import (
    FAVORABLE_CLASSES,
    REJECT,
    SearchConfig,
    Y_EQ_X,
    Y_EVEN,
    Y_NEQ_X,
    Y_ODD,
    allowed_xy_parity,
    count_box_points,
    mod8_favorable,
    naive_direct_oracle,
    partition_b4_range,
    run_direct,
    run_direct_slice,
)


def test_parity_rule_rows():
    assert allowed_xy_parity(0, 0, 0) == Y_EVEN
    assert allowed_xy_parity(0, 0, 1) == Y_ODD
    assert allowed_xy_parity(1, 0, 0) == Y_EQ_X
    assert allowed_xy_parity(1, 1, 1) == Y_NEQ_X
    # odd b2 with even b4 forces even b6
    assert allowed_xy_parity(1, 0, 1) == REJECT
    assert allowed_xy_parity(1, 1, 0) == REJECT
    # odd b4 cannot pair with even b2
    assert allowed_xy_parity(0, 1, 0) == REJECT
    assert allowed_xy_parity(0, 1, 1) == REJECT


def test_mod8_favorable():
    assert mod8_favorable(0, -158, 1369)  # class (0, 2, 1)
    assert not mod8_favorable(1, 2, 4)
    assert mod8_favorable(5, 0, 0)
    assert mod8_favorable(12345, 0, 0, classes="all")


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(h=1, b2=0)
    with pytest.raises(ValueError):
        SearchConfig(h=5, b2=2)
    cfg = SearchConfig(h=5, b2=0)
    assert cfg.b4_range() == (-1250, 0)
    assert cfg.x_bound == 25 and cfg.y_bound == 250


def test_count_box_points_record():
    pts = count_box_points(12, 0, -158, 1369)
    assert len(pts) == 23
    for x, y in pts:
        assert y * y == TwoTorsionModel(0, -158, 1369).rhs(x)
        assert abs(x) <= 144 and 0 <= y <= 3456


def test_oracle_equality_h6_b2_1():
    cfg = SearchConfig(h=6, b2=1, classes="all", threshold=8)
    mine = sorted((c.b4, c.b6, c.count) for c in run_direct(cfg))
    oracle = sorted((c.b4, c.b6, c.count) for c in naive_direct_oracle(cfg))
    assert mine == oracle
    assert len(mine) > 0


def test_oracle_equality_h6_spec_example_window():
    # the low-threshold variant on a b4 window (the full range is the same
    # comparison repeated; see the slow marker below)
    cfg = SearchConfig(h=6, b2=1, classes="all", threshold=3, b4_min=-400, b4_max=0)
    mine = sorted((c.b4, c.b6, c.count) for c in run_direct(cfg))
    oracle = sorted((c.b4, c.b6, c.count) for c in naive_direct_oracle(cfg))
    assert mine == oracle


@pytest.mark.slow
def test_oracle_equality_h6_full_threshold3():
    cfg = SearchConfig(h=6, b2=1, classes="all", threshold=3)
    mine = sorted((c.b4, c.b6, c.count) for c in run_direct(cfg))
    oracle = sorted((c.b4, c.b6, c.count) for c in naive_direct_oracle(cfg))
    assert mine == oracle


def test_oracle_equality_h6_b2_0_favorable():
    cfg = SearchConfig(h=6, b2=0, classes=FAVORABLE_CLASSES, threshold=4)
    mine = sorted((c.b4, c.b6, c.count) for c in run_direct(cfg))
    oracle = sorted((c.b4, c.b6, c.count) for c in naive_direct_oracle(cfg))
    assert mine == oracle


def test_unreachable_threshold_empty():
    cfg = SearchConfig(h=2, b2=0, classes="all", threshold=10 ** 6)
    assert list(run_direct(cfg)) == []


def test_witness_soundness_and_count():
    cfg = SearchConfig(h=6, b2=0, classes="all", threshold=6, b4_min=-300, b4_max=0)
    for cand in run_direct(cfg):
        model = cand.model()
        assert len(cand.witnesses) == cand.count
        for x, y in cand.witnesses:
            assert y * y == model.rhs(x)
            assert abs(x) <= cfg.x_bound and 0 <= y <= cfg.y_bound
        assert model.discriminant() != 0


def test_determinism_across_workers_and_partitions():
    cfg = SearchConfig(h=5, b2=0, classes="all", threshold=5)
    lo, hi = cfg.b4_range()
    serial = sorted((c.b4, c.b6, c.count) for c in run_direct(cfg, workers=1))
    twoproc = sorted((c.b4, c.b6, c.count) for c in run_direct(cfg, workers=2))
    assert serial == twoproc
    # scrambled partition order
    parts = partition_b4_range(lo, hi, 7)
    random.Random(5).shuffle(parts)
    scrambled = sorted(
        (c.b4, c.b6, c.count) for c in run_direct(cfg, partitions=parts)
    )
    assert serial == scrambled


def test_h12_record_slice():
    cfg = SearchConfig(h=12, b2=0, classes=((0, 2, 1),), threshold=10)
    cands = run_direct_slice(cfg, -158, -158)
    hits = [(c.b4, c.b6) for c in cands]
    assert (-158, 1369) in hits


def test_positive_b4_flag():
    cfg = SearchConfig(h=4, b2=0, classes="all", threshold=4, allow_positive_b4=True)
    assert cfg.b4_range() == (-512, 512)
