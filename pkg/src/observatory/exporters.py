"""Serialize merged tools (or evaluator drafts) to CFF, JSON-LD, and PR payloads.

Emission is canonical: the same tool always produces the same bytes, and the
HTTP layer and CLI share these functions so their outputs are identical.
"""

from __future__ import annotations

import json
import re

import yaml

from .disambiguate import MergedTool
from .errors import MissingAuthors, MissingName, NoRepository
from .normalize import DEPLOYABLE_TYPES

CFF_VERSION = "1.2.0"
CFF_MESSAGE = "If you use this software, please cite it using the metadata from this file."
SPDX_URL_PREFIX = "https://spdx.org/licenses/"


def _first_spdx(tool: MergedTool) -> str | None:
    for ref in tool.licenses:
        if ref.spdx_id:
            return ref.spdx_id
    return None


def _with_scheme(normalized: str) -> str:
    return "https://" + normalized


def _first_url(tool: MergedTool, kinds: tuple[str, ...]) -> str | None:
    for ref in tool.urls:
        if ref.kind in kinds:
            return _with_scheme(ref.normalized)
    return None


def _cff_author(agent) -> dict:
    if agent.kind == "organization":
        entry = {"name": agent.name}
    else:
        parts = agent.name.rsplit(" ", 1)
        if len(parts) == 2:
            entry = {"given-names": parts[0], "family-names": parts[1]}
        else:
            entry = {"family-names": agent.name}
    if agent.email:
        entry["email"] = agent.email
    return entry


def to_cff(tool: MergedTool) -> str:
    """Emit a CFF 1.2.0 document (YAML, 2-space indent, trailing newline)."""
    if not tool.canonical_name:
        raise MissingName(tool.tool_id)
    if not tool.agents:
        raise MissingAuthors(tool.tool_id)

    document: dict = {
        "cff-version": CFF_VERSION,
        "message": CFF_MESSAGE,
        "title": tool.canonical_name,
        "authors": [_cff_author(a) for a in tool.agents],
    }
    if tool.version_strings:
        document["version"] = tool.version_strings[0]
    spdx = _first_spdx(tool)
    if spdx:
        document["license"] = spdx
    repo = _first_url(tool, ("repository",))
    if repo:
        document["repository-code"] = repo
    homepage = _first_url(tool, ("webpage", "repository_like"))
    if homepage:
        document["url"] = homepage
    if tool.description:
        document["abstract"] = tool.description
    return yaml.safe_dump(
        document, sort_keys=False, allow_unicode=True, indent=2, default_flow_style=False
    )


_PUBID_URLS = {
    "doi": "https://doi.org/{}",
    "pmid": "https://pubmed.ncbi.nlm.nih.gov/{}",
    "pmcid": "https://www.ncbi.nlm.nih.gov/pmc/articles/{}",
}


def to_masmp(tool: MergedTool) -> str:
    """Emit a schema.org-aligned JSON-LD software profile (sorted keys)."""
    if not tool.canonical_name:
        raise MissingName(tool.tool_id)
    deployable = tool.software_type in DEPLOYABLE_TYPES
    document: dict = {
        "@context": "https://schema.org",
        "@type": "SoftwareApplication" if deployable else "SoftwareSourceCode",
        "name": tool.canonical_name,
        "identifier": tool.tool_id,
        "applicationCategory": tool.software_type.value,
    }
    if tool.description:
        document["description"] = tool.description
    url = _first_url(tool, ("webpage",))
    if url:
        document["url"] = url
    repo = _first_url(tool, ("repository", "repository_like"))
    if repo:
        document["codeRepository"] = repo
    spdx = _first_spdx(tool)
    if spdx:
        document["license"] = SPDX_URL_PREFIX + spdx
    if tool.agents:
        document["author"] = [
            {
                "@type": "Organization" if a.kind == "organization" else "Person",
                "name": a.name,
                **({"email": a.email} if a.email else {}),
            }
            for a in tool.agents
        ]
    if tool.version_strings:
        document["softwareVersion"] = tool.version_strings[0]
    if tool.publication_ids:
        document["citation"] = sorted(
            _PUBID_URLS[p.kind].format(p.value) for p in tool.publication_ids
        )
    if tool.input_formats or tool.output_formats:
        formats = sorted(
            {t.label or t.raw for t in tool.input_formats + tool.output_formats if t.raw}
        )
        if formats:
            document["fileFormat"] = formats
    if tool.collections:
        document["keywords"] = list(tool.collections)
    return json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


EXPORT_FORMATS = {"cff": to_cff, "masmp": to_masmp}
EXPORT_FILENAMES = {"cff": "CITATION.cff", "masmp": "masmp.jsonld"}


class ChangeRequest:
    """A pull-request payload; dry runs never touch any transport."""

    def __init__(self, repo: str, branch: str, files: list[dict], title: str,
                 body: str, dry_run: bool = True):
        self.repo = repo
        self.branch = branch
        self.files = files
        self.title = title
        self.body = body
        self.dry_run = dry_run

    def to_dict(self) -> dict:
        return {
            "repo": self.repo,
            "branch": self.branch,
            "files": [dict(f) for f in self.files],
            "title": self.title,
            "body": self.body,
            "dry_run": self.dry_run,
        }


_REPO_TRIM_RE = re.compile(r"^(https?://)?(www\.)?")


def pr_payload(tool: MergedTool, format: str, repo: str, dry_run: bool = True) -> ChangeRequest:
    """Build the metadata-update pull request for one of the tool's repos."""
    if format not in EXPORT_FORMATS:
        raise KeyError(format)
    wanted = _REPO_TRIM_RE.sub("", repo.strip()).rstrip("/")
    roots = {u.normalized for u in tool.urls if u.kind == "repository"}
    if wanted not in roots:
        raise NoRepository(f"{tool.tool_id}: {repo!r} is not a repository of this tool")

    content = EXPORT_FORMATS[format](tool)
    filename = EXPORT_FILENAMES[format]
    return ChangeRequest(
        repo=wanted,
        branch=f"observatory/metadata-update-{tool.tool_id}",
        files=[{"path": filename, "content": content}],
        title=f"Add {filename} for {tool.canonical_name}",
        body=(
            f"This change adds `{filename}` generated from the consolidated metadata "
            f"for **{tool.canonical_name}** ({tool.software_type.value}).\n\n"
            f"Export format: {format}. Tool id: {tool.tool_id}."
        ),
        dry_run=dry_run,
    )


def write_dry_run(change: ChangeRequest, out_dir) -> list[str]:
    """Materialize a dry-run payload under out/pr/<tool-dir>/ plus request.meta."""
    from pathlib import Path

    from .storage import atomic_write_text, canonical_document

    out_dir = Path(out_dir)
    written = []
    for file_entry in change.files:
        path = out_dir / file_entry["path"]
        atomic_write_text(path, file_entry["content"])
        written.append(str(path))
    meta = {k: v for k, v in change.to_dict().items() if k != "files"}
    meta["files"] = [f["path"] for f in change.files]
    meta_path = out_dir / "request.meta"
    atomic_write_text(meta_path, canonical_document(meta))
    written.append(str(meta_path))
    return written
