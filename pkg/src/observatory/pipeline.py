"""Stage orchestration: ingest → normalize → enrich → integrate → score → stats.

Each stage reads the previous layer file and writes its own, so any stage can
be re-run in isolation. All run timestamps derive from the input records
(the latest retrieved_at), which keeps re-runs over unchanged inputs
byte-identical.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import storage
from .config import RunConfig
from .disambiguate import (
    BaselineTextProxy,
    MergedTool,
    build_blocks,
    detect_conflicts,
    load_state,
    merge_blockset,
    persist_state,
    reconcile,
    rescue,
    resolve_with_proxy,
)
from .enrich import (
    EnrichmentStore,
    LiveTransport,
    StubTransport,
    check_service,
    fetch_publication,
)
from .errors import (
    MissingUpstreamLayer,
    NotFound,
    RateLimited,
    TransportFailure,
)
from .ingest import (
    DEFAULT_RETRIEVED_AT,
    RawRecord,
    extract_repo_candidates,
    ingest_repo_document,
    parse_dump,
)
from .normalize import Instance, cleanse, normalize_url
from .score import ScoringContext, fair_profile, load_scoring_config, name_type_counts
from .stats import collection_tags, compute_stats

STAGES = ("ingest", "normalize", "enrich", "integrate", "score", "stats")


@dataclass
class PipelineReport:
    counts: dict[str, int] = field(default_factory=dict)
    durations: dict[str, float] = field(default_factory=dict)
    snapshot_id: str = ""

    def to_dict(self) -> dict:
        return {
            "counts": dict(sorted(self.counts.items())),
            "durations": {k: round(v, 3) for k, v in sorted(self.durations.items())},
            "snapshot_id": self.snapshot_id,
        }


class Layers:
    """Paths of the layer files inside one state directory."""

    def __init__(self, state_dir: str | Path):
        self.state_dir = Path(state_dir)
        self.raw = self.state_dir / "raw.jsonl"
        self.rejects = self.state_dir / "rejects.jsonl"
        self.normalized = self.state_dir / "normalized.jsonl"
        self.enrichment = self.state_dir / "enrichment.jsonl"
        self.blocks = self.state_dir / "blocks.json"
        self.merged = self.state_dir / "merged.jsonl"
        self.profiles = self.state_dir / "profiles.jsonl"
        self.stats_dir = self.state_dir / "stats"
        self.issues_dir = self.state_dir / "issues"
        self.report = self.state_dir / "report.json"
        self.lock = self.state_dir / ".lock"


def make_transport(config: RunConfig):
    if config.transport_mode == "live":
        return LiveTransport(per_host_budget=config.per_host_budget)
    fixture = {}
    if config.transport_fixture:
        with open(config.transport_fixture, encoding="utf-8") as handle:
            fixture = json.load(handle)
    return StubTransport(fixture)


def run_timestamp(instances: list[Instance]) -> str:
    """Deterministic run clock: the latest retrieval time among the inputs."""
    stamps = [i.retrieved_at for i in instances if i.retrieved_at]
    return max(stamps) if stamps else DEFAULT_RETRIEVED_AT


def run(config: RunConfig, stages: tuple[str, ...] = STAGES, strict: bool = False) -> PipelineReport:
    """Execute the requested stages in order and write the run report.

    Stage order is fixed; asking for a later stage without its upstream layer
    on disk raises MissingUpstreamLayer. With strict=True, leftover unresolved
    conflicts make the run fail (CLI exit code 3).
    """
    for stage in stages:
        if stage not in STAGES:
            raise ValueError(f"unknown stage {stage!r}")
    ordered = [s for s in STAGES if s in stages]
    layers = Layers(config.state_dir)
    layers.state_dir.mkdir(parents=True, exist_ok=True)

    report = PipelineReport()
    lock = _acquire_lock(layers.lock)
    try:
        for stage in ordered:
            started = time.monotonic()
            _STAGE_FUNCS[stage](config, layers, report)
            report.durations[stage] = time.monotonic() - started
        storage.write_document(layers.report, {"schema": "observatory-report/1",
                                               **report.to_dict()})
    finally:
        _release_lock(lock)

    if strict and report.counts.get("remaining_conflict", 0) > 0:
        raise UnresolvedConflicts(report.counts["remaining_conflict"])
    return report


class UnresolvedConflicts(Exception):
    """Raised under --strict when conflicts survive the automated resolution."""


def _acquire_lock(path: Path):
    import os

    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise RuntimeError(f"another run holds the state lock: {path}")
    os.write(fd, str(os.getpid()).encode())
    os.close(fd)
    return path


def _release_lock(path: Path):
    path.unlink(missing_ok=True)


def _require(path: Path, producer: str) -> None:
    if not path.exists():
        raise MissingUpstreamLayer(f"{path} missing; run the {producer} stage first")


# --- stages -----------------------------------------------------------------


def _stage_ingest(config: RunConfig, layers: Layers, report: PipelineReport) -> None:
    records: list[RawRecord] = []
    rejects = []
    for kind in sorted(config.sources, key=lambda k: k.value):
        with open(config.sources[kind], "rb") as handle:
            parsed, rejected = parse_dump(kind, handle.read())
        records.extend(parsed)
        rejects.extend(rejected)

    if config.repo_documents:
        with open(config.repo_documents, encoding="utf-8") as handle:
            repo_docs = json.load(handle)
        normalized_docs = {}
        for url, doc in repo_docs.items():
            normalized_docs[normalize_url(url, config.code_hosts).normalized] = (url, doc)
        mined: dict[str, RawRecord] = {}
        for record in records:
            for candidate in extract_repo_candidates(record):
                root = normalize_url(candidate, config.code_hosts).normalized
                if root in normalized_docs and root not in mined:
                    raw_url, doc = normalized_docs[root]
                    mined[root] = ingest_repo_document(raw_url, doc)
        records.extend(mined[root] for root in sorted(mined))

    storage.write_records(layers.raw, storage.RAW_SCHEMA, [r.to_dict() for r in records])
    storage.write_records(
        layers.rejects, storage.RAW_SCHEMA, [r.to_dict() for r in rejects]
    )
    report.counts["raw"] = len(records)
    report.counts["rejected"] = len(rejects)


def _stage_normalize(config: RunConfig, layers: Layers, report: PipelineReport) -> None:
    _require(layers.raw, "ingest")
    tables = config.tables()
    records = [RawRecord.from_dict(d) for d in storage.read_records(layers.raw, storage.RAW_SCHEMA)]
    instances = [cleanse(record, tables) for record in records]
    storage.write_records(
        layers.normalized, storage.NORMALIZED_SCHEMA, [i.to_dict() for i in instances]
    )
    report.counts["normalized"] = len(instances)


def _load_instances(layers: Layers) -> list[Instance]:
    _require(layers.normalized, "normalize")
    return [
        Instance.from_dict(d)
        for d in storage.read_records(layers.normalized, storage.NORMALIZED_SCHEMA)
    ]


def _stage_enrich(config: RunConfig, layers: Layers, report: PipelineReport) -> None:
    instances = _load_instances(layers)
    transport = make_transport(config)
    store = EnrichmentStore.load(layers.enrichment) if layers.enrichment.exists() else EnrichmentStore()
    stamp = run_timestamp(instances)

    checks = 0
    for instance in instances:
        for result in check_service(instance, transport, config.timeout_s, stamp):
            store.put_availability(result)
            checks += 1
        for pub_id in instance.publication_ids:
            for provider in ("europepmc", "semanticscholar"):
                try:
                    fetch_publication(
                        pub_id, provider, transport, store,
                        fetched_at=stamp, retries=config.retries, backoff_s=0.01,
                    )
                except (NotFound, RateLimited, TransportFailure):
                    continue
    store.save(layers.enrichment)
    report.counts["availability_checks"] = checks
    report.counts["publications_fetched"] = len(store.publications)


def _stage_integrate(config: RunConfig, layers: Layers, report: PipelineReport) -> None:
    instances = _load_instances(layers)
    by_key = {i.key: i for i in instances}
    stamp = run_timestamp(instances)

    blockset = build_blocks(instances)
    reused = 0
    if layers.blocks.exists():
        blockset = reconcile(blockset, load_state(layers.blocks))
        reused = sum(1 for b in blockset.blocks.values() if b.resolutions)
    persist_state(blockset, layers.blocks)

    conflicted = detect_conflicts(blockset)
    persist_state(blockset, layers.blocks)

    for block_id in conflicted:
        block = blockset.blocks[block_id]
        rescue(block, by_key, config.source_priority, decided_at=stamp)
        persist_state(blockset, layers.blocks)

    proxy = BaselineTextProxy(tau_same=config.tau_same, tau_diff=config.tau_diff)
    for block_id in conflicted:
        block = blockset.blocks[block_id]
        if block.status != "conflict":
            continue
        resolve_with_proxy(
            block, by_key, proxy, decided_at=stamp,
            failure_action=config.proxy_failure_action,
        )
        persist_state(blockset, layers.blocks)

    tools = merge_blockset(blockset, by_key, config.source_priority)
    storage.write_records(layers.merged, storage.MERGED_SCHEMA, [t.to_dict() for t in tools])

    by_status: dict[str, int] = {}
    for block in blockset.blocks.values():
        by_status[block.status] = by_status.get(block.status, 0) + 1
    report.counts.update(
        {
            "blocks": len(blockset.blocks),
            "conflicts": len(blockset.blocks) - by_status.get("clean", 0),
            "rescued": by_status.get("rescued", 0),
            "proxy_resolved": by_status.get("proxy_resolved", 0),
            "escalated": by_status.get("escalated", 0),
            "human_resolved": by_status.get("human_resolved", 0),
            "reused_resolutions": reused,
            "remaining_conflict": by_status.get("conflict", 0),
            "merged": len(tools),
        }
    )


def _load_merged(layers: Layers) -> list[MergedTool]:
    _require(layers.merged, "integrate")
    return [
        MergedTool.from_dict(d)
        for d in storage.read_records(layers.merged, storage.MERGED_SCHEMA)
    ]


def _scoring_context(layers: Layers, tools: list[MergedTool]) -> ScoringContext:
    availability = None
    if layers.enrichment.exists():
        store = EnrichmentStore.load(layers.enrichment)
        availability = store.availability
    return ScoringContext(
        name_type_counts=name_type_counts(tools), availability=availability
    )


def _stage_score(config: RunConfig, layers: Layers, report: PipelineReport) -> None:
    tools = _load_merged(layers)
    scoring = load_scoring_config(config.scoring_config)
    ctx = _scoring_context(layers, tools)
    stamp = max((t.retrieved_at for t in tools), default=DEFAULT_RETRIEVED_AT)
    profiles = [fair_profile(t, scoring, ctx, computed_at=stamp) for t in tools]
    storage.write_records(
        layers.profiles, storage.PROFILES_SCHEMA, [p.to_dict() for p in profiles]
    )
    report.counts["profiles"] = len(profiles)


def _stage_stats(config: RunConfig, layers: Layers, report: PipelineReport) -> None:
    from .score import FairProfile

    tools = _load_merged(layers)
    _require(layers.profiles, "score")
    profiles = [
        FairProfile.from_dict(d)
        for d in storage.read_records(layers.profiles, storage.PROFILES_SCHEMA)
    ]
    stamp = max((t.retrieved_at for t in tools), default=DEFAULT_RETRIEVED_AT)
    layers.stats_dir.mkdir(parents=True, exist_ok=True)
    written = 0
    for tag in ["all"] + collection_tags(tools):
        snapshot = compute_stats(tools, profiles, tag, snapshot_at=stamp)
        # one document per (collection, snapshot_at): successive runs grow a
        # history series; identical inputs rewrite the same file byte for byte
        path = layers.stats_dir / f"{_safe_tag(tag)}@{_safe_tag(stamp)}.json"
        storage.write_document(path, snapshot.to_dict())
        written += 1
    merged_bytes = layers.merged.read_bytes()
    import hashlib

    report.snapshot_id = hashlib.sha256(merged_bytes).hexdigest()[:12]
    report.counts["stats_snapshots"] = written


def _safe_tag(tag: str) -> str:
    import re

    return re.sub(r"[^A-Za-z0-9._-]+", "_", tag) or "_"


_STAGE_FUNCS = {
    "ingest": _stage_ingest,
    "normalize": _stage_normalize,
    "enrich": _stage_enrich,
    "integrate": _stage_integrate,
    "score": _stage_score,
    "stats": _stage_stats,
}


# --- issue export / decision apply -------------------------------------------


def export_issues(config: RunConfig, out_dir: str | Path | None = None) -> list[Path]:
    """Write one review document per escalated block; returns written paths."""
    layers = Layers(config.state_dir)
    _require(layers.blocks, "integrate")
    blockset = load_state(layers.blocks)
    instances = {i.key: i for i in _load_instances(layers)}
    from .disambiguate import render_issue

    out = Path(out_dir) if out_dir else layers.issues_dir
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for block in blockset.sorted_blocks():
        if block.status != "escalated":
            continue
        path = out / f"issue-{block.block_id}.md"
        storage.atomic_write_text(path, render_issue(block, instances))
        written.append(path)
    return written


def apply_decisions(config: RunConfig, decisions_dir: str | Path) -> int:
    """Apply every decision-* file in a directory; returns how many applied."""
    from .disambiguate import apply_decision

    layers = Layers(config.state_dir)
    _require(layers.blocks, "integrate")
    blockset = load_state(layers.blocks)
    instances = _load_instances(layers)
    stamp = run_timestamp(instances)

    applied = 0
    for path in sorted(Path(decisions_dir).glob("decision-*")):
        with open(path, encoding="utf-8") as handle:
            decision = json.load(handle)
        apply_decision(blockset, decision, state_path=layers.blocks, decided_at=stamp)
        applied += 1

    if applied:
        by_key = {i.key: i for i in instances}
        tools = merge_blockset(blockset, by_key, config.source_priority)
        storage.write_records(
            layers.merged, storage.MERGED_SCHEMA, [t.to_dict() for t in tools]
        )
    return applied
