"""Harmonize names, URLs, licenses, formats, and agents; cleanse raw records.

License and format mapping is exact-after-casefold against curated tables;
similarity matching is deliberately absent (high false-positive rate). The
code-host list and the organization keyword list are configuration, not code.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from urllib.parse import urlsplit

from .errors import EmptyAgent, EmptyName, UnparseableUrl
from .ingest import DocLink, PubId, RawRecord, SourceKind


class SoftwareType(str, Enum):
    cmd = "cmd"
    lib = "lib"
    web = "web"
    rest = "rest"
    sparql = "sparql"
    soap = "soap"
    workbench = "workbench"
    suite = "suite"
    workflow = "workflow"
    plugin = "plugin"
    script = "script"
    db = "db"
    undefined = "undefined"

    @property
    def deployable(self) -> bool:
        return self in DEPLOYABLE_TYPES


#: Types reachable over the network, subject to availability checks.
DEPLOYABLE_TYPES = frozenset(
    {
        SoftwareType.web,
        SoftwareType.rest,
        SoftwareType.sparql,
        SoftwareType.soap,
        SoftwareType.workbench,
        SoftwareType.suite,
    }
)

_TYPE_SYNONYMS = {
    "command-line tool": "cmd",
    "command line tool": "cmd",
    "commandline": "cmd",
    "library": "lib",
    "web application": "web",
    "web service": "rest",
    "web api": "rest",
    "desktop application": "workbench",
    "database portal": "db",
    "database": "db",
    "workflow": "workflow",
    "plug-in": "plugin",
}


def software_type_from_raw(raw: str | None) -> SoftwareType:
    """Map a registry type label onto the closed type set; unknown → undefined."""
    text = (raw or "").strip().lower()
    if not text:
        return SoftwareType.undefined
    text = _TYPE_SYNONYMS.get(text, text)
    try:
        return SoftwareType(text)
    except ValueError:
        return SoftwareType.undefined


# --- URL normalization -------------------------------------------------------


class HostClass(str, Enum):
    repository = "repository"
    repository_like = "repository_like"


#: host → (class, repo-root canonicalizer id). Extensible via run config.
DEFAULT_CODE_HOSTS: dict[str, HostClass] = {
    "github.com": HostClass.repository,
    "gitlab.com": HostClass.repository,
    "bitbucket.org": HostClass.repository,
    "sourceforge.net": HostClass.repository_like,
    "bioconductor.org": HostClass.repository_like,
}

_HOST_RE = re.compile(r"^[a-z0-9]([a-z0-9.-]*[a-z0-9])?(:[0-9]+)?$")


@dataclass(frozen=True)
class UrlRef:
    raw: str
    normalized: str
    kind: str  # repository | repository_like | webpage
    host_class: str | None = None

    def to_dict(self) -> dict:
        return {
            "raw": self.raw,
            "normalized": self.normalized,
            "kind": self.kind,
            "host_class": self.host_class,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "UrlRef":
        return cls(
            raw=data["raw"],
            normalized=data["normalized"],
            kind=data["kind"],
            host_class=data.get("host_class"),
        )


def normalize_url(raw: str, hosts: dict[str, HostClass] | None = None) -> UrlRef:
    """Collapse URL variants into a scheme-less canonical form.

    Rules: strip a leading "git+", prepend "http://" when no scheme is
    present, lowercase the host and drop a leading "www.", drop query and
    fragment, strip trailing "/" and ".git" from the path. On recognized code
    hosts the path is truncated to the repository root (e.g. owner/repo) and
    the ref is classed repository or repository_like; everything else is a
    webpage. Idempotent: normalizing a normalized form is a no-op.
    """
    hosts = DEFAULT_CODE_HOSTS if hosts is None else hosts
    text = (raw or "").strip()
    if not text:
        raise UnparseableUrl("empty URL")
    if text.lower().startswith("git+"):
        text = text[4:]
    if "://" not in text:
        text = "http://" + text
    try:
        parts = urlsplit(text)
    except ValueError as exc:
        raise UnparseableUrl(f"{raw!r}: {exc}") from exc
    host = parts.netloc.rpartition("@")[2].lower()
    if host.startswith("www."):
        host = host[4:]
    if not host or not _HOST_RE.match(host):
        raise UnparseableUrl(f"{raw!r}: bad host {host!r}")

    path = parts.path
    while path.endswith("/"):
        path = path[:-1]
    if path.endswith(".git"):
        path = path[:-4]
    while path.endswith("/"):
        path = path[:-1]

    bare_host = host.partition(":")[0]
    host_class = hosts.get(bare_host)
    kind = "webpage"
    if host_class is not None:
        root = _repo_root(bare_host, path)
        if root is not None:
            path = "/" + root
            kind = host_class.value

    normalized = host + path
    return UrlRef(
        raw=raw,
        normalized=normalized,
        kind=kind,
        host_class=host_class.value if host_class is not None else None,
    )


def _repo_root(host: str, path: str) -> str | None:
    segments = [seg for seg in path.split("/") if seg]
    if host == "sourceforge.net":
        if len(segments) >= 2 and segments[0] in ("projects", "p"):
            return f"projects/{segments[1].lower()}"
        return None
    if host == "bioconductor.org":
        if "packages" in segments:
            name = segments[-1].lower()
            if name.endswith(".html"):
                name = name[:-5]
            if name and name not in ("packages", "release", "devel", "bioc", "html"):
                return f"packages/{name}"
        return None
    # owner/repo hosts: github, gitlab, bitbucket, and config-added ones
    if len(segments) >= 2:
        repo = segments[1].lower()
        if repo.endswith(".git"):
            repo = repo[:-4]
        return f"{segments[0].lower()}/{repo}"
    return None


# --- license mapping ----------------------------------------------------------


@dataclass(frozen=True)
class LicenseRef:
    raw: str
    spdx_id: str | None = None
    family: str = "unknown"  # copyleft | permissive | other | unknown

    def to_dict(self) -> dict:
        return {"raw": self.raw, "spdx_id": self.spdx_id, "family": self.family}

    @classmethod
    def from_dict(cls, data: dict) -> "LicenseRef":
        return cls(
            raw=data["raw"],
            spdx_id=data.get("spdx_id"),
            family=data.get("family", "unknown"),
        )


@dataclass(frozen=True)
class LicenseTable:
    families: dict[str, str]  # spdx_id → family
    synonyms: dict[str, str]  # casefolded synonym → spdx_id

    @property
    def spdx_ids(self) -> frozenset[str]:
        return frozenset(self.families)


def _fold_license(raw: str) -> str:
    return raw.strip().strip(".,;:!?'\"()[]").strip().casefold()


def load_license_table(spdx_list_path: str | Path, synonyms_path: str | Path) -> LicenseTable:
    """Load the SPDX id/family list and the curated synonym table (TSV)."""
    families: dict[str, str] = {}
    for spdx_id, family in _read_tsv(spdx_list_path):
        families[spdx_id] = family
    synonyms: dict[str, str] = {}
    for spdx_id in families:
        synonyms[_fold_license(spdx_id)] = spdx_id
    for spdx_id, synonym in _read_tsv(synonyms_path):
        if spdx_id not in families:
            raise ValueError(f"synonym maps to unknown SPDX id {spdx_id!r}")
        synonyms[_fold_license(synonym)] = spdx_id
    return LicenseTable(families=families, synonyms=synonyms)


def map_license(raw: str, table: LicenseTable) -> LicenseRef:
    """Exact curated lookup; no fuzzy matching. Misses keep family=unknown."""
    spdx_id = table.synonyms.get(_fold_license(raw))
    if spdx_id is None:
        return LicenseRef(raw=raw)
    return LicenseRef(raw=raw, spdx_id=spdx_id, family=table.families[spdx_id])


# --- EDAM term mapping ---------------------------------------------------------


@dataclass(frozen=True)
class TermRef:
    raw: str
    edam_id: str | None = None
    label: str | None = None

    def to_dict(self) -> dict:
        return {"raw": self.raw, "edam_id": self.edam_id, "label": self.label}

    @classmethod
    def from_dict(cls, data: dict) -> "TermRef":
        return cls(raw=data["raw"], edam_id=data.get("edam_id"), label=data.get("label"))


@dataclass(frozen=True)
class EdamTable:
    by_label: dict[str, tuple[str, str]]  # casefolded label → (edam_id, label)


def load_edam_table(path: str | Path) -> EdamTable:
    by_label: dict[str, tuple[str, str]] = {}
    for edam_id, label in _read_tsv(path):
        by_label[label.strip().casefold()] = (edam_id, label)
    return EdamTable(by_label=by_label)


def map_format(raw: str, table: EdamTable) -> TermRef:
    hit = table.by_label.get(raw.strip().casefold())
    if hit is None:
        return TermRef(raw=raw)
    return TermRef(raw=raw, edam_id=hit[0], label=hit[1])


def _read_tsv(path: str | Path) -> list[tuple[str, str]]:
    rows = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{line_no}: expected two tab-separated fields")
            rows.append((parts[0].strip(), parts[1].strip()))
    return rows


# --- names and agents -----------------------------------------------------------

_WS_RE = re.compile(r"\s+")


def normalize_name(raw: str) -> str:
    """Lowercase, strip surrounding whitespace/quotes, collapse inner whitespace.

    Underscores, hyphens, and suffixes survive: distinct names stay distinct.
    """
    text = raw.strip().strip("'\"`").strip()
    if not text:
        raise EmptyName(repr(raw))
    return _WS_RE.sub(" ", text).lower()


DEFAULT_ORG_KEYWORDS = (
    "institute",
    "university",
    "laboratory",
    "lab",
    "team",
    "consortium",
    "centre",
    "center",
    "foundation",
    "inc",
    "gmbh",
    "group",
)


@dataclass(frozen=True)
class Agent:
    name: str
    kind: str  # person | organization
    email: str | None = None

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "email": self.email}

    @classmethod
    def from_dict(cls, data: dict) -> "Agent":
        return cls(name=data["name"], kind=data["kind"], email=data.get("email"))


_EMAIL_ANGLE_RE = re.compile(r"<([^<>@\s]+@[^<>@\s]+)>")
_EMAIL_BARE_RE = re.compile(r"(?<![<\w@])([^\s<>@,;]+@[^\s<>@,;]+\.[^\s<>@,;]+)")


def classify_agent(raw: str, org_keywords: tuple[str, ...] = DEFAULT_ORG_KEYWORDS) -> Agent:
    """Heuristic person/organization split on whole-word keyword hits.

    An e-mail given in angle brackets or bare form is pulled out of the name.
    """
    text = raw.strip()
    if not text:
        raise EmptyAgent(repr(raw))

    email = None
    match = _EMAIL_ANGLE_RE.search(text) or _EMAIL_BARE_RE.search(text)
    if match:
        candidate = match.group(1)
        if candidate.count("@") == 1:
            email = candidate
            text = (text[: match.start()] + text[match.end() :]).strip(" <>,;")
    name = _WS_RE.sub(" ", text).strip()
    if not name and email:
        name = email
    if not name:
        raise EmptyAgent(repr(raw))

    words = {word for word in re.split(r"[^\w]+", name.lower()) if word}
    kind = "organization" if words & set(org_keywords) else "person"
    return Agent(name=name, kind=kind, email=email)


# --- the Instance layer -----------------------------------------------------------


@dataclass
class Instance:
    canonical_name: str
    software_type: SoftwareType
    source: SourceKind
    source_id: str
    urls: list[UrlRef] = field(default_factory=list)
    licenses: list[LicenseRef] = field(default_factory=list)
    input_formats: list[TermRef] = field(default_factory=list)
    output_formats: list[TermRef] = field(default_factory=list)
    agents: list[Agent] = field(default_factory=list)
    description: str | None = None
    publication_ids: list[PubId] = field(default_factory=list)
    documentation: list[DocLink] = field(default_factory=list)
    download_links: list[str] = field(default_factory=list)
    version_strings: list[str] = field(default_factory=list)
    dependencies: list[str] = field(default_factory=list)
    tests_declared: bool | None = None
    collections: list[str] = field(default_factory=list)
    retrieved_at: str = ""
    notes: list[str] = field(default_factory=list)

    @property
    def key(self) -> tuple[str, str, str, str]:
        return (
            self.canonical_name,
            self.software_type.value,
            self.source.value,
            self.source_id,
        )

    def repo_links(self) -> list[UrlRef]:
        return [u for u in self.urls if u.kind in ("repository", "repository_like")]

    def to_dict(self) -> dict:
        return {
            "canonical_name": self.canonical_name,
            "software_type": self.software_type.value,
            "source": self.source.value,
            "source_id": self.source_id,
            "urls": [u.to_dict() for u in self.urls],
            "licenses": [l.to_dict() for l in self.licenses],
            "input_formats": [t.to_dict() for t in self.input_formats],
            "output_formats": [t.to_dict() for t in self.output_formats],
            "agents": [a.to_dict() for a in self.agents],
            "description": self.description,
            "publication_ids": [p.to_dict() for p in self.publication_ids],
            "documentation": [d.to_dict() for d in self.documentation],
            "download_links": list(self.download_links),
            "version_strings": list(self.version_strings),
            "dependencies": list(self.dependencies),
            "tests_declared": self.tests_declared,
            "collections": list(self.collections),
            "retrieved_at": self.retrieved_at,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        return cls(
            canonical_name=data["canonical_name"],
            software_type=SoftwareType(data["software_type"]),
            source=SourceKind(data["source"]),
            source_id=data["source_id"],
            urls=[UrlRef.from_dict(u) for u in data.get("urls", [])],
            licenses=[LicenseRef.from_dict(l) for l in data.get("licenses", [])],
            input_formats=[TermRef.from_dict(t) for t in data.get("input_formats", [])],
            output_formats=[TermRef.from_dict(t) for t in data.get("output_formats", [])],
            agents=[Agent.from_dict(a) for a in data.get("agents", [])],
            description=data.get("description"),
            publication_ids=[PubId.from_dict(p) for p in data.get("publication_ids", [])],
            documentation=[DocLink.from_dict(d) for d in data.get("documentation", [])],
            download_links=list(data.get("download_links", [])),
            version_strings=list(data.get("version_strings", [])),
            dependencies=list(data.get("dependencies", [])),
            tests_declared=data.get("tests_declared"),
            collections=list(data.get("collections", [])),
            retrieved_at=data.get("retrieved_at", ""),
            notes=list(data.get("notes", [])),
        )


@dataclass(frozen=True)
class Tables:
    """Immutable normalization tables, loaded once and shared read-only."""

    licenses: LicenseTable
    edam: EdamTable
    hosts: dict[str, HostClass] = field(default_factory=lambda: dict(DEFAULT_CODE_HOSTS))
    org_keywords: tuple[str, ...] = DEFAULT_ORG_KEYWORDS


def default_tables() -> Tables:
    data_dir = Path(__file__).parent / "data"
    return Tables(
        licenses=load_license_table(
            data_dir / "spdx_licenses.tsv", data_dir / "spdx_synonyms.tsv"
        ),
        edam=load_edam_table(data_dir / "edam_labels.tsv"),
    )


def cleanse(record: RawRecord, tables: Tables) -> Instance:
    """Normalize one raw record into an instance.

    Unparseable URLs are pruned (with a note), every list field is
    deduplicated by its normalized value, and provenance fields pass through
    untouched.
    """
    canonical = normalize_name(record.name_raw)
    software_type = software_type_from_raw(record.type_raw)

    notes: list[str] = []
    urls: list[UrlRef] = []
    seen_urls: set[str] = set()
    for raw_url in list(record.webpages) + list(record.repositories):
        try:
            ref = normalize_url(raw_url, tables.hosts)
        except UnparseableUrl:
            notes.append(f"dropped unparseable url {raw_url!r}")
            continue
        if ref.normalized in seen_urls:
            continue
        seen_urls.add(ref.normalized)
        urls.append(ref)
    urls.sort(key=lambda u: u.normalized)

    licenses: list[LicenseRef] = []
    seen_lic: set[str] = set()
    for raw_license in record.licenses_raw:
        ref = map_license(raw_license, tables.licenses)
        lic_key = ref.spdx_id or _fold_license(ref.raw)
        if not lic_key or lic_key in seen_lic:
            continue
        seen_lic.add(lic_key)
        licenses.append(ref)
    licenses.sort(key=lambda l: (l.spdx_id or "", l.raw.casefold()))

    agents: list[Agent] = []
    seen_agents: set[tuple[str, str]] = set()
    for raw_agent in record.authors_raw:
        try:
            agent = classify_agent(raw_agent, tables.org_keywords)
        except EmptyAgent:
            continue
        agent_key = (agent.name.casefold(), agent.email or "")
        if agent_key in seen_agents:
            continue
        seen_agents.add(agent_key)
        agents.append(agent)
    agents.sort(key=lambda a: (a.name.casefold(), a.email or ""))

    description = (record.description or "").strip() or None

    return Instance(
        canonical_name=canonical,
        software_type=software_type,
        source=record.source,
        source_id=record.source_id,
        urls=urls,
        licenses=licenses,
        input_formats=_map_terms(record.input_formats_raw, tables.edam),
        output_formats=_map_terms(record.output_formats_raw, tables.edam),
        agents=agents,
        description=description,
        publication_ids=_dedup_by(record.publication_ids, lambda p: (p.kind, p.value)),
        documentation=_dedup_by(record.documentation, lambda d: (d.label.casefold(), d.url)),
        download_links=sorted(set(link for link in record.download_links if link.strip())),
        version_strings=_dedup_by([v for v in record.version_strings if v.strip()], str),
        dependencies=sorted(set(dep for dep in record.dependencies if dep.strip())),
        tests_declared=record.tests_declared,
        collections=sorted(set(c.strip() for c in record.collections if c.strip())),
        retrieved_at=record.retrieved_at,
        notes=notes,
    )


def _map_terms(raws: list[str], table: EdamTable) -> list[TermRef]:
    terms: list[TermRef] = []
    seen: set[str] = set()
    for raw in raws:
        ref = map_format(raw, table)
        term_key = ref.edam_id or raw.strip().casefold()
        if not term_key or term_key in seen:
            continue
        seen.add(term_key)
        terms.append(ref)
    terms.sort(key=lambda t: (t.edam_id or "~", t.raw.casefold()))
    return terms


def _dedup_by(values, keyfn):
    out = []
    seen = set()
    for value in sorted(values, key=keyfn):
        k = keyfn(value)
        if k in seen:
            continue
        seen.add(k)
        out.append(value)
    return out
