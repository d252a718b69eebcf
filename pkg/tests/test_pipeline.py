import pytest

from rankforge.pipeline import (
    ConfigMismatch,
    RunManifest,
    config_hash,
    new_manifest,
    resume,
    run_pipeline,
    search_candidates,
    verify_candidate,
)
from rankforge.search_direct import CandidateCurve, SearchConfig
from rankforge.search_pair import PairSearchConfig

CFG = SearchConfig(h=6, b2=1, classes="all", threshold=9)


def _key(cands):
    return sorted((c.b4, c.b6, c.count) for c in cands)


def test_interrupt_resume_matches_uninterrupted(tmp_path):
    base = _key(search_candidates(CFG))
    path = str(tmp_path / "ckpt")
    search_candidates(CFG, manifest_path=path, stop_after=3)
    m = RunManifest.load(path)
    assert sum(p["done"] for p in m.partitions) == 3
    assert not m.complete()
    resumed = _key(search_candidates(CFG, manifest_path=path))
    assert resumed == base
    assert RunManifest.load(path).complete()


def test_resume_config_mismatch(tmp_path):
    path = str(tmp_path / "ckpt")
    search_candidates(CFG, manifest_path=path, stop_after=1)
    other = SearchConfig(h=7, b2=1, classes="all", threshold=9)
    with pytest.raises(ConfigMismatch):
        search_candidates(other, manifest_path=path)
    with pytest.raises(ConfigMismatch):
        resume(other, path)


def test_resume_completed_is_noop(tmp_path):
    path = str(tmp_path / "ckpt")
    first = _key(search_candidates(CFG, manifest_path=path))
    again = _key(search_candidates(CFG, manifest_path=path))
    assert first == again


def test_manifest_hash_stability():
    assert config_hash(CFG) == config_hash(SearchConfig(h=6, b2=1, classes="all", threshold=9))
    assert config_hash(CFG) != config_hash(SearchConfig(h=6, b2=1, classes="all", threshold=8))
    m = new_manifest(CFG)
    lo, hi = CFG.b4_range()
    assert m.partitions[0]["lo"] == lo
    assert m.partitions[-1]["hi"] == hi


def test_pair_config_checkpoint(tmp_path):
    cfg = PairSearchConfig(h=5, b2=1, U=1, L=8, classes="all",
                           threshold=2, phase1_threshold=1,
                           b4_min=-300, b4_max=0)
    path = str(tmp_path / "ckpt")
    base = _key(search_candidates(cfg))
    search_candidates(cfg, manifest_path=path, stop_after=2)
    assert _key(search_candidates(cfg, manifest_path=path)) == base


def test_verify_candidate_record():
    cand = CandidateCurve(0, -158, 1369, 23)
    d = verify_candidate(cand, x_bound=10 ** 5, combo_bound=2)
    assert d.curve == (0, 0, 1, -79, 342)
    assert d.conductor == 19047851
    assert d.delta_over_n == 1
    assert d.rank_lb == 5


def test_pipeline_end_to_end_windowed():
    cfg = SearchConfig(h=12, b2=0, classes=((0, 2, 1),), threshold=10,
                       b4_min=-160, b4_max=-150)
    res = run_pipeline(cfg, x_bound=10 ** 5, combo_bound=2, min_count=20)
    assert not res.failures
    by_curve = {d.curve: d for d in res.dossiers}
    record = by_curve[(0, 0, 1, -79, 342)]
    assert record.conductor == 19047851
    assert record.rank_lb == 5
    assert res.table.minima()[5] == 19047851


def test_pipeline_dedup_by_minimal_model():
    # the same minimal curve reached from two different two-torsion triples
    # (the second is the 12^4 / 12^6 rescale of the first)
    cfg = SearchConfig(h=12, b2=0, classes=((0, 2, 1),), threshold=10,
                       b4_min=-160, b4_max=-150)
    cands = [
        CandidateCurve(0, -158, 1369, 23),
        CandidateCurve(0, -158 * 12 ** 4, 1369 * 12 ** 6, 23),
    ]
    res = run_pipeline(cfg, x_bound=10 ** 4, combo_bound=0, candidates=cands)
    assert len(res.dossiers) == 1
    assert res.dossiers[0].curve == (0, 0, 1, -79, 342)


def test_pipeline_logs_failures(monkeypatch):
    cfg = SearchConfig(h=12, b2=0, classes=((0, 2, 1),), threshold=10,
                       b4_min=-160, b4_max=-155)
    import rankforge.pipeline as pl
    from rankforge.factorint import IncompleteFactorization, Factorization

    def explode(*a, **k):
        raise IncompleteFactorization(Factorization(cofactor=10 ** 30))

    monkeypatch.setattr(pl, "verify_candidate", explode)
    res = pl.run_pipeline(cfg, min_count=20)
    assert res.dossiers == []
    assert res.failures and res.failures[0].stage == "conductor"


def test_pipeline_deterministic_under_interrupt(tmp_path):
    cfg = SearchConfig(h=6, b2=0, classes="all", threshold=10)
    knobs = dict(x_bound=10 ** 4, combo_bound=0, min_count=18)
    straight = run_pipeline(cfg, **knobs)
    assert straight.dossiers
    path = str(tmp_path / "ckpt")
    search_candidates(cfg, manifest_path=path, stop_after=2)
    resumed = resume(cfg, path, **knobs)
    assert [d.curve for d in straight.dossiers] == [d.curve for d in resumed.dossiers]
    assert [d.conductor for d in straight.dossiers] == [
        d.conductor for d in resumed.dossiers
    ]
