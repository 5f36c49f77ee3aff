"""HTTP API over the merged collection, stats snapshots, and draft evaluation.

Read endpoints serve an immutable in-memory snapshot loaded from the layer
files; swapping a snapshot is a single attribute assignment, so concurrent
readers never see torn state. Chart endpoints return exactly the numbers in
the persisted stats documents. Draft evaluation is stateless.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import yaml
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, ConfigDict, ValidationError

from . import storage
from .config import RunConfig
from .disambiguate import MergedTool, tool_slug
from .enrich import EnrichmentStore
from .errors import (
    EmptyName,
    MissingAuthors,
    MissingName,
    MixedWeightsVersion,
    NoRepository,
    NotFound,
    ObservatoryError,
    UnreadableDocument,
)
from .exporters import EXPORT_FORMATS, pr_payload, write_dry_run
from .ingest import DocLink, PubId, SourceKind, ingest_repo_document
from .normalize import Tables, cleanse, normalize_url
from .pipeline import Layers, make_transport
from .score import (
    FairProfile,
    ScoringConfig,
    ScoringContext,
    fair_profile,
    indicator_guidance,
    load_scoring_config,
)
from .stats import CollectionStats

DEFAULT_PAGE_SIZE = 50
MAX_PAGE_SIZE = 500

CHART_IDS = ("completeness", "scoreboard", "licenses", "sources", "types")
_CHART_FIELDS = {
    "completeness": "field_completeness",
    "scoreboard": "scoreboard",
    "licenses": "license_distribution",
    "sources": "source_breakdown",
    "types": "type_distribution",
}


class Snapshot:
    """Immutable view of one pipeline run's outputs."""

    def __init__(
        self,
        tools: list[MergedTool],
        profiles: dict[str, FairProfile],
        stats: dict[str, CollectionStats],
        availability: dict | None = None,
    ):
        self.tools = sorted(tools, key=lambda t: t.tool_id)
        self.by_id = {t.tool_id: t for t in self.tools}
        self.profiles = profiles
        self.stats = stats
        self.availability = availability or {}

    @classmethod
    def load(cls, state_dir: str | Path) -> "Snapshot":
        layers = Layers(state_dir)
        tools = [
            MergedTool.from_dict(d)
            for d in storage.read_records(layers.merged, storage.MERGED_SCHEMA)
        ]
        profiles = {}
        if layers.profiles.exists():
            for d in storage.read_records(layers.profiles, storage.PROFILES_SCHEMA):
                profile = FairProfile.from_dict(d)
                profiles[profile.tool_id] = profile
        stats = {}
        if layers.stats_dir.exists():
            # the store is a history series; serve the latest per collection
            for path in sorted(layers.stats_dir.glob("*.json")):
                doc = storage.read_document(path, storage.STATS_SCHEMA)
                snapshot = CollectionStats.from_dict(doc)
                current = stats.get(snapshot.collection)
                if current is None or snapshot.snapshot_at >= current.snapshot_at:
                    stats[snapshot.collection] = snapshot
        availability = {}
        if layers.enrichment.exists():
            availability = EnrichmentStore.load(layers.enrichment).availability
        return cls(tools, profiles, stats, availability)


class DraftMetadata(BaseModel):
    """User-editable tool metadata; unknown fields are rejected."""

    model_config = ConfigDict(extra="forbid")

    name: str
    type: str
    description: str | None = None
    webpages: list[str] = []
    repositories: list[str] = []
    licenses: list[str] = []
    input_formats: list[str] = []
    output_formats: list[str] = []
    authors: list[str] = []
    publication_ids: list[dict[str, str]] = []
    documentation: list[dict[str, str]] = []
    download_links: list[str] = []
    version_strings: list[str] = []
    dependencies: list[str] = []
    collections: list[str] = []
    sources: list[list[str]] = []
    # facts a user can assert that registries cannot provide
    tests_present: bool | None = None
    registration_required: bool | None = None
    dependencies_declared: bool | None = None


def draft_to_tool(draft: DraftMetadata, tables: Tables) -> MergedTool:
    """Run a draft through the normal cleansing path and shape it as a tool."""
    from .ingest import RawRecord

    name = draft.name.strip()
    if not name:
        raise EmptyName("draft name")
    record = RawRecord(
        source=SourceKind.biotools,  # placeholder; drafts carry explicit sources
        source_id="draft",
        name_raw=name,
        type_raw=draft.type,
        description=draft.description,
        webpages=list(draft.webpages),
        repositories=list(draft.repositories),
        licenses_raw=list(draft.licenses),
        input_formats_raw=list(draft.input_formats),
        output_formats_raw=list(draft.output_formats),
        authors_raw=list(draft.authors),
        publication_ids=[
            PubId(kind=p.get("kind", ""), value=p.get("value", ""))
            for p in draft.publication_ids
            if p.get("kind") in ("doi", "pmid", "pmcid") and p.get("value")
        ],
        documentation=[
            DocLink(label=d.get("label", ""), url=d.get("url", ""))
            for d in draft.documentation
            if d.get("url")
        ],
        download_links=list(draft.download_links),
        version_strings=list(draft.version_strings),
        dependencies=list(draft.dependencies),
        tests_declared=draft.tests_present,
        collections=list(draft.collections),
    )
    instance = cleanse(record, tables)
    merged = MergedTool(
        tool_id=tool_slug(instance.canonical_name, instance.software_type),
        canonical_name=instance.canonical_name,
        software_type=instance.software_type,
        description=instance.description,
        urls=instance.urls,
        licenses=instance.licenses,
        input_formats=instance.input_formats,
        output_formats=instance.output_formats,
        agents=instance.agents,
        publication_ids=instance.publication_ids,
        documentation=instance.documentation,
        download_links=instance.download_links,
        version_strings=instance.version_strings,
        dependencies=instance.dependencies,
        tests_declared=instance.tests_declared,
        collections=instance.collections,
        sources=[tuple(s) for s in draft.sources if len(s) == 2],
        field_provenance={},
        retrieved_at=instance.retrieved_at,
    )
    return merged


def tool_to_draft(tool: MergedTool) -> dict:
    """Prefill a draft from a merged tool (inverse of draft_to_tool, lossy)."""
    return {
        "name": tool.canonical_name,
        "type": tool.software_type.value,
        "description": tool.description,
        "webpages": [u.raw for u in tool.urls if u.kind == "webpage"],
        "repositories": [u.raw for u in tool.urls if u.kind != "webpage"],
        "licenses": [l.spdx_id or l.raw for l in tool.licenses],
        "input_formats": [t.raw for t in tool.input_formats],
        "output_formats": [t.raw for t in tool.output_formats],
        "authors": [
            a.name + (f" <{a.email}>" if a.email else "") for a in tool.agents
        ],
        "publication_ids": [p.to_dict() for p in tool.publication_ids],
        "documentation": [d.to_dict() for d in tool.documentation],
        "download_links": list(tool.download_links),
        "version_strings": list(tool.version_strings),
        "dependencies": list(tool.dependencies),
        "collections": list(tool.collections),
        "sources": [list(s) for s in tool.sources],
        "tests_present": tool.tests_declared,
        "registration_required": None,
        "dependencies_declared": bool(tool.dependencies) or None,
    }


def parse_upload(content: str) -> dict:
    """Sniff an uploaded CFF / JSON-LD / raw-record document into a draft."""
    text = content.strip()
    if not text:
        raise UnreadableDocument("empty upload")
    if text.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UnreadableDocument(f"upload: {exc}") from exc
        if "@context" in data:
            return _draft_from_jsonld(data)
        if "name_raw" in data:
            return _draft_from_raw(data)
        raise UnreadableDocument("upload: unrecognized JSON document")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise UnreadableDocument(f"upload: {exc}") from exc
    if isinstance(data, dict) and "cff-version" in data:
        return _draft_from_cff(data)
    raise UnreadableDocument("upload: unrecognized document")


def _draft_from_cff(data: dict) -> dict:
    authors = []
    for author in data.get("authors", []):
        if "name" in author:
            authors.append(author["name"])
        else:
            name = " ".join(
                p for p in (author.get("given-names"), author.get("family-names")) if p
            )
            if author.get("email"):
                name += f" <{author['email']}>"
            if name:
                authors.append(name)
    draft = {
        "name": data.get("title", ""),
        "type": "undefined",
        "description": data.get("abstract"),
        "webpages": [u for u in [data.get("url")] if u],
        "repositories": [u for u in [data.get("repository-code")] if u],
        "licenses": [l for l in [data.get("license")] if l],
        "authors": authors,
        "version_strings": [str(v) for v in [data.get("version")] if v],
    }
    return draft


def _draft_from_jsonld(data: dict) -> dict:
    license_value = data.get("license") or ""
    if license_value.startswith("https://spdx.org/licenses/"):
        license_value = license_value.rsplit("/", 1)[-1]
    authors = []
    for author in data.get("author", []) or []:
        if isinstance(author, dict) and author.get("name"):
            name = author["name"]
            if author.get("email"):
                name += f" <{author['email']}>"
            authors.append(name)
    return {
        "name": data.get("name", ""),
        "type": data.get("applicationCategory", "undefined"),
        "description": data.get("description"),
        "webpages": [u for u in [data.get("url")] if u],
        "repositories": [u for u in [data.get("codeRepository")] if u],
        "licenses": [license_value] if license_value else [],
        "authors": authors,
        "version_strings": [str(v) for v in [data.get("softwareVersion")] if v],
    }


def _draft_from_raw(data: dict) -> dict:
    return {
        "name": data.get("name_raw", ""),
        "type": data.get("type_raw", "undefined"),
        "description": data.get("description"),
        "webpages": list(data.get("webpages", [])),
        "repositories": list(data.get("repositories", [])),
        "licenses": list(data.get("licenses_raw", [])),
        "input_formats": list(data.get("input_formats_raw", [])),
        "output_formats": list(data.get("output_formats_raw", [])),
        "authors": list(data.get("authors_raw", [])),
        "documentation": list(data.get("documentation", [])),
        "download_links": list(data.get("download_links", [])),
        "version_strings": list(data.get("version_strings", [])),
        "dependencies": list(data.get("dependencies", [])),
        "collections": list(data.get("collections", [])),
    }


def _error(status: int, code: str, message: str, details: Any = None) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"code": code, "message": message, "details": details},
    )


def evaluate_draft(
    draft: DraftMetadata,
    tables: Tables,
    scoring: ScoringConfig,
    availability: dict | None = None,
) -> dict:
    """Score a draft and spell out, per weak indicator, what would raise it."""
    tool = draft_to_tool(draft, tables)
    ctx = ScoringContext(
        name_type_counts=None,
        availability=availability,
        assertions={
            "tests_present": bool(draft.tests_present),
            "registration_required": bool(draft.registration_required),
            "dependencies_declared": bool(draft.dependencies_declared),
        },
    )
    profile = fair_profile(tool, scoring, ctx)
    guidance = []
    for spec in scoring.indicators:
        score = profile.indicators[spec.id]
        if score.value < 1.0:
            missing = indicator_guidance(tool, spec, ctx)
            guidance.append(
                {
                    "indicator": spec.id,
                    "principle": spec.principle,
                    "weight": spec.weight,
                    "value": score.value,
                    "missing": missing,
                }
            )
    weights = {
        spec.id: {"weight": spec.weight, "principle": spec.principle}
        for spec in scoring.indicators
    }
    return {"profile": profile.to_dict(), "guidance": guidance, "weights": weights}


def create_app(
    config: RunConfig,
    snapshot: Snapshot | None = None,
    tables: Tables | None = None,
) -> FastAPI:
    app = FastAPI(title="software-observatory", version="1")
    app.state.config = config
    app.state.snapshot = snapshot
    app.state.tables = tables or config.tables()
    app.state.scoring = load_scoring_config(config.scoring_config)
    app.state.transport = make_transport(config)
    app.state.repo_documents = {}
    if config.repo_documents and Path(config.repo_documents).exists():
        with open(config.repo_documents, encoding="utf-8") as handle:
            raw_docs = json.load(handle)
        for url, doc in raw_docs.items():
            root = normalize_url(url, config.code_hosts).normalized
            app.state.repo_documents[root] = (url, doc)

    if config.cors_origin:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=[config.cors_origin] if config.cors_origin != "*" else ["*"],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(ObservatoryError)
    async def observatory_error_handler(request: Request, exc: ObservatoryError):
        if isinstance(exc, NotFound):
            return _error(404, "not_found", str(exc))
        if isinstance(exc, MixedWeightsVersion):
            return _error(409, "weights_version_mismatch", str(exc))
        return _error(400, type(exc).__name__, str(exc))

    def _snapshot() -> Snapshot:
        if app.state.snapshot is None:
            raise NotFound("no snapshot loaded; run the pipeline first")
        return app.state.snapshot

    @app.get("/v1/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/v1/collections")
    def collections():
        snap = _snapshot()
        return {"collections": sorted(snap.stats)}

    @app.get("/v1/tools")
    def list_tools(collection: str = "all", page: int = 1, page_size: int = DEFAULT_PAGE_SIZE):
        snap = _snapshot()
        if page < 1:
            return _error(400, "bad_page", "page starts at 1")
        page_size = max(1, min(int(page_size), MAX_PAGE_SIZE))
        tools = snap.tools
        if collection != "all":
            tools = [t for t in tools if collection in t.collections]
        start = (page - 1) * page_size
        items = tools[start : start + page_size]
        return {
            "total": len(tools),
            "page": page,
            "page_size": page_size,
            "items": [t.to_dict() for t in items],
        }

    @app.get("/v1/tools/{tool_id}")
    def get_tool(tool_id: str):
        snap = _snapshot()
        tool = snap.by_id.get(tool_id)
        if tool is None:
            raise NotFound(f"tool {tool_id!r}")
        payload = tool.to_dict()
        profile = snap.profiles.get(tool_id)
        if profile is not None:
            payload["profile"] = profile.to_dict()
        return payload

    @app.get("/v1/stats/{collection}")
    def get_stats(collection: str):
        snap = _snapshot()
        stats = snap.stats.get(collection)
        if stats is None:
            raise NotFound(f"no stats snapshot for collection {collection!r}")
        return stats.to_dict()

    @app.get("/v1/charts/{collection}/{chart_id}")
    def get_chart(collection: str, chart_id: str):
        snap = _snapshot()
        if chart_id not in CHART_IDS:
            raise NotFound(f"unknown chart {chart_id!r}")
        stats = snap.stats.get(collection)
        if stats is None:
            raise NotFound(f"no stats snapshot for collection {collection!r}")
        return {
            "collection": collection,
            "chart_id": chart_id,
            "snapshot_at": stats.snapshot_at,
            "data": getattr(stats, _CHART_FIELDS[chart_id]),
        }

    @app.post("/v1/evaluate")
    async def evaluate(request: Request):
        body = await request.json()
        weights_version = body.pop("weights_version", None)
        if weights_version and weights_version != app.state.scoring.version:
            return _error(
                409,
                "weights_version_mismatch",
                f"server scores with {app.state.scoring.version!r}",
            )
        try:
            draft = DraftMetadata.model_validate(body)
        except ValidationError as exc:
            return _error(400, "validation_error", "invalid draft", exc.errors())
        snap = app.state.snapshot
        availability = snap.availability if snap else None
        return evaluate_draft(draft, app.state.tables, app.state.scoring, availability)

    @app.post("/v1/fetch-metadata")
    async def fetch_metadata(request: Request):
        body = await request.json()
        kind = body.get("kind")
        ref = body.get("ref", "")
        if kind == "observatory":
            snap = _snapshot()
            tool = snap.by_id.get(ref)
            if tool is None:
                raise NotFound(f"tool {ref!r}")
            return {"draft": tool_to_draft(tool), "origin": "observatory"}
        if kind == "repo":
            root = normalize_url(ref, app.state.config.code_hosts).normalized
            entry = app.state.repo_documents.get(root)
            if entry is None and hasattr(app.state.transport, "fetch_repo_document"):
                entry = (ref, app.state.transport.fetch_repo_document(ref))
            if entry is None:
                raise NotFound(f"repository {ref!r} not in the mining fixture")
            record = ingest_repo_document(entry[0], entry[1])
            return {"draft": _draft_from_raw(record.to_dict()), "origin": "repo"}
        if kind == "upload":
            return {"draft": parse_upload(ref), "origin": "upload"}
        return _error(400, "bad_selector", f"unknown selector kind {kind!r}")

    def _resolve_tool(body: dict) -> MergedTool:
        tool_id = body.get("tool_id")
        if tool_id:
            snap = _snapshot()
            tool = snap.by_id.get(tool_id)
            if tool is None:
                raise NotFound(f"tool {tool_id!r}")
            return tool
        draft = DraftMetadata.model_validate(body.get("draft") or {})
        return draft_to_tool(draft, app.state.tables)

    @app.post("/v1/export/{format}")
    async def export(format: str, request: Request):
        if format not in EXPORT_FORMATS:
            raise NotFound(f"unknown export format {format!r}")
        body = await request.json()
        try:
            tool = _resolve_tool(body)
        except ValidationError as exc:
            return _error(400, "validation_error", "invalid draft", exc.errors())
        try:
            content = EXPORT_FORMATS[format](tool)
        except (MissingAuthors, MissingName) as exc:
            return _error(400, type(exc).__name__, str(exc))
        media = "application/ld+json" if format == "masmp" else "text/yaml"
        return Response(content=content, media_type=f"{media}; charset=utf-8")

    @app.post("/v1/pr")
    async def pull_request(request: Request):
        body = await request.json()
        dry_run = bool(body.get("dry_run", True))
        format = body.get("format", "cff")
        if format not in EXPORT_FORMATS:
            raise NotFound(f"unknown export format {format!r}")
        try:
            tool = _resolve_tool(body)
        except ValidationError as exc:
            return _error(400, "validation_error", "invalid draft", exc.errors())
        repo = body.get("repo", "")
        if not repo:
            repos = [u.normalized for u in tool.urls if u.kind == "repository"]
            if not repos:
                return _error(400, "NoRepository", "tool has no repository URL")
            repo = repos[0]
        try:
            change = pr_payload(tool, format, repo, dry_run=dry_run)
        except NoRepository as exc:
            return _error(400, "NoRepository", str(exc))
        except (MissingAuthors, MissingName) as exc:
            return _error(400, type(exc).__name__, str(exc))
        if dry_run:
            out_dir = Path(app.state.config.state_dir) / "out" / "pr" / tool.tool_id
            write_dry_run(change, out_dir)
            return {"submitted": False, "dry_run": True, "change": change.to_dict()}
        if not hasattr(app.state.transport, "submit_change_request"):
            return _error(
                503, "transport_disabled",
                "live pull-request submission is not available on this transport",
            )
        receipt = app.state.transport.submit_change_request(change.to_dict())
        return {"submitted": True, "dry_run": False, "receipt": receipt}

    if config.ui_dist and Path(config.ui_dist).exists():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(config.ui_dist), html=True), name="ui")

    return app
