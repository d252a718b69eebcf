"""End-to-end flow: search -> candidate dedup -> minimal model -> conductor
-> integral point inventory -> rank lower bound -> record table.

Runs are resumable: a manifest records the configuration hash and, per b4
partition, whether it completed.  Resuming with a different configuration is
refused; resuming a finished manifest is a no-op.  Candidates that fail any
verification stage are logged with the failing stage, never dropped silently.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from fractions import Fraction

from rankforge.conductor import conductor
from rankforge.curves import SingularCurve, curve_from_b
from rankforge.factorint import IncompleteFactorization
from rankforge.heights import GenerationFailure, rank_lower_bound
from rankforge.points import inventory, sieve_search
from rankforge.records import CurveDossier, RecordTable
from rankforge.search_direct import (
    CandidateCurve,
    SearchConfig,
    partition_b4_range,
    run_direct_slice,
)
from rankforge.search_pair import PairSearchConfig, run_pair_slice


class ConfigMismatch(ValueError):
    """Manifest belongs to a different configuration."""


@dataclass
class RunManifest:
    """Partition ledger for a search run.

    Candidates of completed partitions live inside the manifest so that a
    checkpoint write is a single atomic file replacement; fine at desk scale,
    where a run emits at most a few hundred thousand records.
    """

    config_hash: str
    partitions: list = field(default_factory=list)
    # partition: {"lo", "hi", "done", "cands": [[b4, b6, count], ...]}

    def to_json(self) -> str:
        return json.dumps(
            {"config_hash": self.config_hash, "partitions": self.partitions}
        )

    @staticmethod
    def from_json(text: str) -> "RunManifest":
        d = json.loads(text)
        return RunManifest(d["config_hash"], d["partitions"])

    @staticmethod
    def load(path: str) -> "RunManifest":
        with open(path) as fh:
            return RunManifest.from_json(fh.read())

    def save(self, path: str):
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            fh.write(self.to_json())
        os.replace(tmp, path)

    def complete(self) -> bool:
        return all(p["done"] for p in self.partitions)

    def candidate_count(self) -> int:
        return sum(len(p.get("cands", [])) for p in self.partitions)


def config_hash(cfg) -> str:
    return hashlib.sha256(cfg.key().encode()).hexdigest()[:16]


def new_manifest(cfg, parts: int = 8) -> RunManifest:
    lo, hi = cfg.b4_range()
    partitions = [
        {"lo": plo, "hi": phi, "done": False}
        for plo, phi in partition_b4_range(lo, hi, parts)
    ]
    return RunManifest(config_hash(cfg), partitions)


def _slice_runner(cfg):
    if isinstance(cfg, SearchConfig):
        return run_direct_slice
    if isinstance(cfg, PairSearchConfig):
        return run_pair_slice
    raise TypeError(f"unknown config type {type(cfg)}")


def search_candidates(
    cfg,
    manifest: RunManifest | None = None,
    manifest_path: str | None = None,
    stop_after: int | None = None,
    workers: int = 1,
) -> list[CandidateCurve]:
    """Run (or continue) a search, checkpointing after each partition.

    Returns candidates of every completed partition, including ones finished
    by earlier calls.  stop_after limits how many partitions this call
    processes, which is how tests exercise interruption; the checkpoint makes
    the next call pick up exactly where this one stopped.
    """
    if manifest is None and manifest_path and os.path.exists(manifest_path):
        manifest = RunManifest.load(manifest_path)
    if manifest is None:
        manifest = new_manifest(cfg)
    if manifest.config_hash != config_hash(cfg):
        raise ConfigMismatch("manifest was created by a different configuration")
    runner = _slice_runner(cfg)
    processed = 0
    pending = [p for p in manifest.partitions if not p["done"]]
    if stop_after is not None:
        pending = pending[:stop_after]
    if workers > 1 and len(pending) > 1:
        import multiprocessing as mp

        with mp.Pool(workers) as pool:
            results = pool.starmap(
                runner, [(cfg, p["lo"], p["hi"]) for p in pending]
            )
        for part, res in zip(pending, results):
            part["cands"] = [[c.b4, c.b6, c.count] for c in res]
            part["done"] = True
        if manifest_path:
            manifest.save(manifest_path)
    else:
        for part in pending:
            res = runner(cfg, part["lo"], part["hi"])
            part["cands"] = [[c.b4, c.b6, c.count] for c in res]
            part["done"] = True
            processed += 1
            if manifest_path:
                manifest.save(manifest_path)
    out = []
    for part in manifest.partitions:
        if part["done"]:
            out.extend(
                CandidateCurve(cfg.b2, b4, b6, count)
                for b4, b6, count in part.get("cands", [])
            )
    return out


@dataclass
class StageFailure:
    candidate: CandidateCurve
    stage: str
    reason: str


@dataclass
class PipelineResult:
    dossiers: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    table: RecordTable = field(default_factory=RecordTable)


def verify_candidate(
    cand: CandidateCurve,
    x_bound: int = 10 ** 6,
    combo_bound: int = 3,
    provenance: dict | None = None,
) -> CurveDossier:
    """Candidate -> verified dossier (minimal model, N, |delta|, I, rank)."""
    curve = curve_from_b(cand.model())
    N, don = conductor(curve)
    seed_pts = sieve_search(curve, min(x_bound, 10 ** 5))
    pts = [(Fraction(x), Fraction(y)) for x, y in seed_pts]
    assessment = rank_lower_bound(curve, pts)
    inv = inventory(curve, x_bound, combo_bound, generators=assessment.basis)
    return CurveDossier(
        curve=curve.ainvs(),
        conductor=N,
        abs_disc=abs(curve.discriminant()),
        delta_over_n=don,
        x_count=inv.x_count,
        rank_lb=assessment.rank,
        provenance=provenance or {},
    )


def run_pipeline(
    cfg,
    x_bound: int = 10 ** 6,
    combo_bound: int = 3,
    manifest_path: str | None = None,
    min_count: int | None = None,
    max_dossiers: int | None = None,
    dossier_sink=None,
    candidates=None,
) -> PipelineResult:
    """Search, dedup by minimal model, verify each candidate, update records.

    min_count post-filters candidates on hit count (useful to focus on the
    strongest curves when a low search threshold floods the stream);
    max_dossiers caps verification work, taking candidates by descending
    count.  Neither affects which candidates the search itself emits.
    An explicit candidate list skips the search stage entirely.
    """
    cands = (
        list(candidates)
        if candidates is not None
        else search_candidates(cfg, manifest_path=manifest_path)
    )
    if min_count:
        cands = [c for c in cands if c.count >= min_count]
    cands.sort(key=lambda c: (-c.count, c.b4, c.b6))
    if max_dossiers is not None:
        cands = cands[:max_dossiers]
    prov_base = {"search": cfg.key()}
    result = PipelineResult()
    seen = set()
    for cand in cands:
        try:
            curve = curve_from_b(cand.model())
        except SingularCurve as exc:
            result.failures.append(StageFailure(cand, "minimal-model", str(exc)))
            continue
        key = curve.ainvs()
        if key in seen:
            continue
        seen.add(key)
        try:
            dossier = verify_candidate(
                cand,
                x_bound=x_bound,
                combo_bound=combo_bound,
                provenance=dict(prov_base, count=cand.count),
            )
        except IncompleteFactorization as exc:
            result.failures.append(StageFailure(cand, "conductor", str(exc)))
            continue
        except GenerationFailure as exc:
            result.failures.append(StageFailure(cand, "rank", str(exc)))
            continue
        result.dossiers.append(dossier)
        result.table.update(dossier)
        if dossier_sink:
            dossier_sink(dossier)
        if max_dossiers is not None and len(result.dossiers) >= max_dossiers:
            break
    return result


def resume(cfg, manifest_path: str, **kwargs) -> PipelineResult:
    """Continue an interrupted run; output equals an uninterrupted run."""
    if not os.path.exists(manifest_path):
        raise FileNotFoundError(manifest_path)
    manifest = RunManifest.load(manifest_path)
    if manifest.config_hash != config_hash(cfg):
        raise ConfigMismatch("manifest was created by a different configuration")
    return run_pipeline(cfg, manifest_path=manifest_path, **kwargs)
