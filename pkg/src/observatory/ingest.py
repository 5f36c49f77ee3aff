"""Parse per-source metadata dumps into raw records.

Each source has a documented interchange schema (see docs/sources.md): a
top-level JSON array of entries. Malformed entries are rejected with a
machine-readable report instead of aborting the batch. GitHub repositories
are not a registry; their records come from repository documents mined by
following links found in the primary records.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .errors import UnknownSource, UnreadableDocument
from .storage import parse_rfc3339


class SourceKind(str, Enum):
    biotools = "biotools"
    bioconda = "bioconda"
    bioconductor = "bioconductor"
    toolshed = "toolshed"
    sourceforge = "sourceforge"
    galaxy_eu = "galaxy_eu"
    github = "github"


#: Sources that count as community registries (GitHub is mined, not registered).
REGISTRY_SOURCES = frozenset(
    {
        SourceKind.biotools,
        SourceKind.bioconda,
        SourceKind.bioconductor,
        SourceKind.toolshed,
        SourceKind.sourceforge,
        SourceKind.galaxy_eu,
    }
)

#: Default priority used when merging fields from several sources.
DEFAULT_SOURCE_PRIORITY = (
    SourceKind.biotools,
    SourceKind.bioconductor,
    SourceKind.bioconda,
    SourceKind.toolshed,
    SourceKind.galaxy_eu,
    SourceKind.sourceforge,
    SourceKind.github,
)

#: Used when neither the entry nor the caller supplies a retrieval time.
#: Fixed so that identical dumps always produce identical records.
DEFAULT_RETRIEVED_AT = "2025-01-01T00:00:00Z"

PUBLICATION_ID_KINDS = ("doi", "pmid", "pmcid")


@dataclass(frozen=True)
class PubId:
    kind: str
    value: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value}

    @classmethod
    def from_dict(cls, data: dict) -> "PubId":
        return cls(kind=data["kind"], value=data["value"])


@dataclass(frozen=True)
class DocLink:
    label: str
    url: str

    def to_dict(self) -> dict:
        return {"label": self.label, "url": self.url}

    @classmethod
    def from_dict(cls, data: dict) -> "DocLink":
        return cls(label=data.get("label", ""), url=data["url"])


@dataclass(frozen=True)
class RejectReport:
    source: SourceKind
    index: int
    reason: str

    def to_dict(self) -> dict:
        return {"source": self.source.value, "index": self.index, "reason": self.reason}


@dataclass
class RawRecord:
    source: SourceKind
    source_id: str
    name_raw: str
    type_raw: str = ""
    description: str | None = None
    webpages: list[str] = field(default_factory=list)
    repositories: list[str] = field(default_factory=list)
    licenses_raw: list[str] = field(default_factory=list)
    input_formats_raw: list[str] = field(default_factory=list)
    output_formats_raw: list[str] = field(default_factory=list)
    authors_raw: list[str] = field(default_factory=list)
    publication_ids: list[PubId] = field(default_factory=list)
    documentation: list[DocLink] = field(default_factory=list)
    download_links: list[str] = field(default_factory=list)
    version_strings: list[str] = field(default_factory=list)
    dependencies: list[str] = field(default_factory=list)
    tests_declared: bool | None = None
    collections: list[str] = field(default_factory=list)
    retrieved_at: str = DEFAULT_RETRIEVED_AT

    def to_dict(self) -> dict:
        return {
            "source": self.source.value,
            "source_id": self.source_id,
            "name_raw": self.name_raw,
            "type_raw": self.type_raw,
            "description": self.description,
            "webpages": list(self.webpages),
            "repositories": list(self.repositories),
            "licenses_raw": list(self.licenses_raw),
            "input_formats_raw": list(self.input_formats_raw),
            "output_formats_raw": list(self.output_formats_raw),
            "authors_raw": list(self.authors_raw),
            "publication_ids": [p.to_dict() for p in self.publication_ids],
            "documentation": [d.to_dict() for d in self.documentation],
            "download_links": list(self.download_links),
            "version_strings": list(self.version_strings),
            "dependencies": list(self.dependencies),
            "tests_declared": self.tests_declared,
            "collections": list(self.collections),
            "retrieved_at": self.retrieved_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RawRecord":
        return cls(
            source=SourceKind(data["source"]),
            source_id=data["source_id"],
            name_raw=data["name_raw"],
            type_raw=data.get("type_raw", ""),
            description=data.get("description"),
            webpages=list(data.get("webpages", [])),
            repositories=list(data.get("repositories", [])),
            licenses_raw=list(data.get("licenses_raw", [])),
            input_formats_raw=list(data.get("input_formats_raw", [])),
            output_formats_raw=list(data.get("output_formats_raw", [])),
            authors_raw=list(data.get("authors_raw", [])),
            publication_ids=[PubId.from_dict(p) for p in data.get("publication_ids", [])],
            documentation=[DocLink.from_dict(d) for d in data.get("documentation", [])],
            download_links=list(data.get("download_links", [])),
            version_strings=list(data.get("version_strings", [])),
            dependencies=list(data.get("dependencies", [])),
            tests_declared=data.get("tests_declared"),
            collections=list(data.get("collections", [])),
            retrieved_at=data.get("retrieved_at", DEFAULT_RETRIEVED_AT),
        )


def parse_dump(
    source: SourceKind | str, document: bytes | str
) -> tuple[list[RawRecord], list[RejectReport]]:
    """Parse one source dump into raw records plus reject reports.

    Every well-formed entry yields at least one record (bio.tools entries
    expand to one record per tool type); malformed entries become reject
    reports and never abort the batch.
    """
    try:
        source = SourceKind(source)
    except ValueError as exc:
        raise UnknownSource(str(source)) from exc
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise UnreadableDocument(f"{source.value}: not UTF-8 ({exc})") from exc
    try:
        entries = json.loads(document)
    except json.JSONDecodeError as exc:
        raise UnreadableDocument(f"{source.value}: not valid JSON ({exc})") from exc
    if not isinstance(entries, list):
        raise UnreadableDocument(f"{source.value}: expected a top-level array")

    parser = _ENTRY_PARSERS[source]
    records: list[RawRecord] = []
    rejects: list[RejectReport] = []
    seen_ids: set[str] = set()
    for index, entry in enumerate(entries):
        if not isinstance(entry, dict):
            rejects.append(RejectReport(source, index, "entry is not an object"))
            continue
        try:
            parsed = parser(entry)
        except _EntryReject as reject:
            rejects.append(RejectReport(source, index, str(reject)))
            continue
        if any(r.source_id in seen_ids for r in parsed):
            rejects.append(RejectReport(source, index, "duplicate source_id"))
            continue
        seen_ids.update(r.source_id for r in parsed)
        records.extend(parsed)
    return records, rejects


def extract_repo_candidates(record: RawRecord) -> list[str]:
    """Return the record's URLs that live on a recognized code-hosting domain.

    Scans webpages, repositories, and documentation links, in that order.
    Unparseable URLs are skipped; duplicates (by normalized repository root)
    are removed while preserving first occurrence.
    """
    from . import normalize  # host list lives with the URL rules

    candidates: list[str] = []
    seen: set[str] = set()
    urls = list(record.webpages) + list(record.repositories)
    urls += [doc.url for doc in record.documentation]
    for url in urls:
        try:
            ref = normalize.normalize_url(url)
        except Exception:
            continue
        if ref.host_class is None:
            continue
        if ref.normalized in seen:
            continue
        seen.add(ref.normalized)
        candidates.append(url)
    return candidates


def ingest_repo_document(repo_url: str, repo_document: bytes | str | dict) -> RawRecord:
    """Turn one mined repository document into a raw record.

    The document carries the fields a code-host API exposes without scraping:
    declared license, README text, contributor names, and topics. The record's
    source_id is the normalized repository path; its description is the first
    README paragraph.
    """
    from . import normalize

    if isinstance(repo_document, (bytes, str)):
        if isinstance(repo_document, bytes):
            try:
                repo_document = repo_document.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise UnreadableDocument(f"{repo_url}: not UTF-8 ({exc})") from exc
        try:
            repo_document = json.loads(repo_document)
        except json.JSONDecodeError as exc:
            raise UnreadableDocument(f"{repo_url}: not valid JSON ({exc})") from exc
    if not isinstance(repo_document, dict):
        raise UnreadableDocument(f"{repo_url}: expected an object")

    try:
        ref = normalize.normalize_url(repo_url)
    except Exception as exc:
        raise UnreadableDocument(f"{repo_url}: unparseable repository URL") from exc
    if ref.host_class is None:
        raise UnreadableDocument(f"{repo_url}: not a recognized code host")

    repo_path = ref.normalized
    name = repo_path.rsplit("/", 1)[-1]
    readme = (repo_document.get("readme") or "").strip()
    description = readme.split("\n\n", 1)[0].strip() or None

    webpages = []
    homepage = (repo_document.get("homepage") or "").strip()
    if homepage:
        webpages.append(homepage)

    try:
        retrieved = _retrieved_at(repo_document)
    except ValueError as exc:
        raise UnreadableDocument(f"{repo_url}: invalid retrieved_at") from exc

    return RawRecord(
        source=SourceKind.github,
        source_id=repo_path,
        name_raw=name,
        type_raw=str(repo_document.get("type", "")),
        description=description,
        webpages=webpages,
        repositories=[repo_url],
        licenses_raw=_strings(repo_document.get("license")),
        authors_raw=_dedup(_strings(repo_document.get("contributors"))),
        version_strings=_strings(repo_document.get("latest_release")),
        collections=_strings(repo_document.get("topics")),
        retrieved_at=retrieved,
    )


# --- per-source entry parsers ----------------------------------------------


class _EntryReject(Exception):
    """Internal: entry-level rejection reason."""


def _require_name(entry: dict, key: str) -> str:
    name = entry.get(key)
    if not isinstance(name, str) or not name.strip():
        raise _EntryReject("missing name")
    return name


def _strings(value: Any) -> list[str]:
    if value is None:
        return []
    if isinstance(value, str):
        return [value] if value.strip() else []
    if isinstance(value, list):
        return [item for item in value if isinstance(item, str) and item.strip()]
    return []


def _dedup(values: list[str]) -> list[str]:
    out: list[str] = []
    seen: set[str] = set()
    for value in values:
        if value not in seen:
            seen.add(value)
            out.append(value)
    return out


def _doc_links(value: Any, label_key: str = "type", url_key: str = "url") -> list[DocLink]:
    links = []
    for item in value or []:
        if isinstance(item, dict) and isinstance(item.get(url_key), str):
            links.append(DocLink(label=str(item.get(label_key, "")), url=item[url_key]))
    return links


def _pub_ids(publications: Any) -> list[PubId]:
    ids = []
    for pub in publications or []:
        if not isinstance(pub, dict):
            continue
        for kind in PUBLICATION_ID_KINDS:
            value = pub.get(kind)
            if isinstance(value, str) and value.strip():
                ids.append(PubId(kind=kind, value=value.strip()))
    return ids


def _retrieved_at(entry: dict) -> str:
    value = entry.get("retrieved_at")
    if isinstance(value, str) and value.strip():
        parse_rfc3339(value)  # ValueError propagates as a reject upstream
        return value.strip()
    return DEFAULT_RETRIEVED_AT


def _parse_biotools(entry: dict) -> list[RawRecord]:
    name = _require_name(entry, "name")
    base_id = str(entry.get("biotoolsID") or name).strip()
    types = _strings(entry.get("toolType"))
    type_raw = types[0] if types else ""
    webpages = _strings(entry.get("homepage"))
    repositories = []
    for link in entry.get("link") or []:
        if not isinstance(link, dict) or not isinstance(link.get("url"), str):
            continue
        if str(link.get("type", "")).lower() == "repository":
            repositories.append(link["url"])
        else:
            webpages.append(link["url"])
    try:
        retrieved = _retrieved_at(entry)
    except ValueError:
        raise _EntryReject("invalid retrieved_at timestamp")

    # multi-type tools appear as one dump entry per type; keep ids distinct
    source_id = f"{base_id}/{type_raw}" if type_raw else base_id
    return [
        RawRecord(
            source=SourceKind.biotools,
            source_id=source_id,
            name_raw=name,
            type_raw=type_raw,
            description=entry.get("description"),
            webpages=_dedup(webpages),
            repositories=_dedup(repositories),
            licenses_raw=_strings(entry.get("license")),
            input_formats_raw=_strings(entry.get("input")),
            output_formats_raw=_strings(entry.get("output")),
            authors_raw=_dedup(
                [
                    credit.get("name", "")
                    for credit in entry.get("credit") or []
                    if isinstance(credit, dict) and credit.get("name")
                ]
            ),
            publication_ids=_pub_ids(entry.get("publication")),
            documentation=_doc_links(entry.get("documentation")),
            download_links=_dedup(
                [
                    item.get("url", "")
                    for item in entry.get("download") or []
                    if isinstance(item, dict) and item.get("url")
                ]
            ),
            version_strings=_strings(entry.get("version")),
            dependencies=_strings(entry.get("dependencies")),
            tests_declared=entry.get("tests"),
            collections=_strings(entry.get("collectionID")),
            retrieved_at=retrieved,
        )
    ]


def _parse_bioconda(entry: dict) -> list[RawRecord]:
    name = _require_name(entry, "package")
    try:
        retrieved = _retrieved_at(entry)
    except ValueError:
        raise _EntryReject("invalid retrieved_at timestamp")
    publication_ids = []
    for identifier in _strings(entry.get("identifiers")):
        kind, _, value = identifier.partition(":")
        if kind in PUBLICATION_ID_KINDS and value:
            publication_ids.append(PubId(kind=kind, value=value))
    documentation = []
    if isinstance(entry.get("doc_url"), str) and entry["doc_url"].strip():
        documentation.append(DocLink(label="documentation", url=entry["doc_url"]))
    return [
        RawRecord(
            source=SourceKind.bioconda,
            source_id=name,
            name_raw=name,
            type_raw=str(entry.get("type", "cmd")),
            description=entry.get("summary"),
            webpages=_strings(entry.get("home")),
            repositories=_strings(entry.get("dev_url")),
            licenses_raw=_strings(entry.get("license")),
            authors_raw=_dedup(_strings(entry.get("maintainers"))),
            publication_ids=publication_ids,
            documentation=documentation,
            download_links=_strings(entry.get("source_url")),
            version_strings=_strings(entry.get("version")),
            dependencies=_strings(entry.get("depends")),
            tests_declared=entry.get("tests"),
            collections=_strings(entry.get("collections")),
            retrieved_at=retrieved,
        )
    ]


def _parse_bioconductor(entry: dict) -> list[RawRecord]:
    name = _require_name(entry, "Package")
    try:
        retrieved = _retrieved_at(entry)
    except ValueError:
        raise _EntryReject("invalid retrieved_at timestamp")
    description = entry.get("Description") or entry.get("Title")
    return [
        RawRecord(
            source=SourceKind.bioconductor,
            source_id=name,
            name_raw=name,
            type_raw=str(entry.get("type", "lib")),
            description=description,
            webpages=_strings(entry.get("URL")),
            repositories=_strings(entry.get("git_url"))
            or [f"https://bioconductor.org/packages/{name}"],
            licenses_raw=_strings(entry.get("License")),
            input_formats_raw=_strings(entry.get("input_formats")),
            output_formats_raw=_strings(entry.get("output_formats")),
            authors_raw=_dedup(_strings(entry.get("Author"))),
            publication_ids=_pub_ids(entry.get("publication")),
            documentation=_doc_links(entry.get("documentation"), label_key="label"),
            version_strings=_strings(entry.get("Version")),
            dependencies=_strings(entry.get("Depends")),
            collections=_strings(entry.get("biocViews")),
            retrieved_at=retrieved,
        )
    ]


def _parse_toolshed(entry: dict) -> list[RawRecord]:
    name = _require_name(entry, "name")
    try:
        retrieved = _retrieved_at(entry)
    except ValueError:
        raise _EntryReject("invalid retrieved_at timestamp")
    source_id = str(entry.get("id") or name).strip()
    return [
        RawRecord(
            source=SourceKind.toolshed,
            source_id=source_id,
            name_raw=name,
            type_raw=str(entry.get("type", "cmd")),
            description=entry.get("description"),
            webpages=_strings(entry.get("homepage_url")),
            repositories=_strings(entry.get("remote_repository_url")),
            licenses_raw=_strings(entry.get("license")),
            authors_raw=_dedup(_strings(entry.get("owner"))),
            documentation=_doc_links(entry.get("documentation"), label_key="label"),
            version_strings=_strings(entry.get("version")),
            dependencies=_strings(entry.get("requirements")),
            tests_declared=entry.get("tests"),
            collections=_strings(entry.get("category")),
            retrieved_at=retrieved,
        )
    ]


def _parse_sourceforge(entry: dict) -> list[RawRecord]:
    name = _require_name(entry, "name")
    try:
        retrieved = _retrieved_at(entry)
    except ValueError:
        raise _EntryReject("invalid retrieved_at timestamp")
    project = str(entry.get("project") or name).strip().lower()
    return [
        RawRecord(
            source=SourceKind.sourceforge,
            source_id=project,
            name_raw=name,
            type_raw=str(entry.get("type", "")),
            description=entry.get("summary"),
            webpages=_strings(entry.get("homepage")),
            repositories=[f"https://sourceforge.net/projects/{project}"],
            licenses_raw=_strings(entry.get("license")),
            authors_raw=_dedup(_strings(entry.get("developers"))),
            download_links=_strings(entry.get("download_url")),
            version_strings=_strings(entry.get("version")),
            collections=_strings(entry.get("categories")),
            retrieved_at=retrieved,
        )
    ]


def _parse_galaxy_eu(entry: dict) -> list[RawRecord]:
    name = _require_name(entry, "name")
    try:
        retrieved = _retrieved_at(entry)
    except ValueError:
        raise _EntryReject("invalid retrieved_at timestamp")
    source_id = str(entry.get("id") or name).strip()
    return [
        RawRecord(
            source=SourceKind.galaxy_eu,
            source_id=source_id,
            name_raw=name,
            type_raw=str(entry.get("type", "web")),
            description=entry.get("description"),
            webpages=_strings(entry.get("homepage")),
            repositories=_strings(entry.get("repository")),
            licenses_raw=_strings(entry.get("license")),
            input_formats_raw=_strings(entry.get("input_formats")),
            output_formats_raw=_strings(entry.get("output_formats")),
            version_strings=_strings(entry.get("version")),
            collections=_strings(entry.get("panel_section")),
            retrieved_at=retrieved,
        )
    ]


def _parse_github(entry: dict) -> list[RawRecord]:
    repo = entry.get("repo")
    if not isinstance(repo, str) or not repo.strip():
        raise _EntryReject("missing name")
    try:
        return [ingest_repo_document(repo, entry)]
    except UnreadableDocument as exc:
        raise _EntryReject(str(exc))


_ENTRY_PARSERS = {
    SourceKind.biotools: _parse_biotools,
    SourceKind.bioconda: _parse_bioconda,
    SourceKind.bioconductor: _parse_bioconductor,
    SourceKind.toolshed: _parse_toolshed,
    SourceKind.sourceforge: _parse_sourceforge,
    SourceKind.galaxy_eu: _parse_galaxy_eu,
    SourceKind.github: _parse_github,
}
