"""Group instances into blocks, detect identity conflicts, resolve, and merge.

Two-tier grouping: blocks are connected components under NAME ∪ LINK edges
(same canonical name, or a shared normalized repository / repository-like
link); within a block, subclusters are components under NAMETYPE ∪ LINK.
A block whose members hang together by name alone — two or more subclusters —
is an identity conflict: likely unrelated tools that happen to share a name.

Conflicts are resolved in order by (1) a rescue heuristic promoting
subclusters that share the name plus a source or any URL with the accepted
group, (2) a pluggable agreement proxy voting same/different/unsure on the
remaining subcluster pairs, and (3) human decisions applied from decision
files. Every resolution is appended to the block's audit trail, and the block
state file is re-persisted after each step: it is the source of truth for the
merged collection.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Protocol

from .errors import (
    CorruptState,
    DuplicateKey,
    EmptyGroup,
    PartitionMismatch,
    ProxyFailure,
    UnknownBlock,
)
from .ingest import (
    DEFAULT_SOURCE_PRIORITY,
    DocLink,
    PubId,
    SourceKind,
)
from .normalize import Agent, Instance, LicenseRef, SoftwareType, TermRef, UrlRef
from .storage import BLOCKS_SCHEMA, atomic_write_text, canonical_document, read_document

Key = tuple[str, str, str, str]  # (canonical_name, software_type, source, source_id)


class UnionFind:
    """Disjoint sets over hashable keys; path compression + union by size."""

    def __init__(self):
        self._parent: dict = {}
        self._size: dict = {}

    def find(self, item):
        parent = self._parent.setdefault(item, item)
        self._size.setdefault(item, 1)
        root = item
        while parent != root:
            root = parent
            parent = self._parent[root]
        while self._parent[item] != root:
            self._parent[item], item = root, self._parent[item]
        return root

    def union(self, a, b) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self._size[ra] < self._size[rb]:
            ra, rb = rb, ra
        self._parent[rb] = ra
        self._size[ra] += self._size[rb]

    def groups(self) -> list[list]:
        by_root: dict = {}
        for item in self._parent:
            by_root.setdefault(self.find(item), []).append(item)
        return [sorted(members) for members in by_root.values()]


@dataclass(frozen=True)
class Edge:
    a: Key
    b: Key
    kind: str  # NAME | NAMETYPE | LINK

    def to_dict(self) -> dict:
        return {"a": list(self.a), "b": list(self.b), "kind": self.kind}

    @classmethod
    def from_dict(cls, data: dict) -> "Edge":
        return cls(a=tuple(data["a"]), b=tuple(data["b"]), kind=data["kind"])


@dataclass
class Resolution:
    partition: list[list[Key]]
    method: str  # rescue | proxy | human
    confidence: float
    rationale: str
    decided_at: str
    decided_by: str

    def to_dict(self) -> dict:
        return {
            "partition": [[list(k) for k in group] for group in self.partition],
            "method": self.method,
            "confidence": self.confidence,
            "rationale": self.rationale,
            "decided_at": self.decided_at,
            "decided_by": self.decided_by,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Resolution":
        return cls(
            partition=[[tuple(k) for k in group] for group in data["partition"]],
            method=data["method"],
            confidence=data["confidence"],
            rationale=data.get("rationale", ""),
            decided_at=data.get("decided_at", ""),
            decided_by=data.get("decided_by", ""),
        )


STATUSES = ("clean", "conflict", "rescued", "proxy_resolved", "escalated", "human_resolved")


@dataclass
class Block:
    block_id: str
    members: list[Key]
    edges: list[Edge]
    subclusters: list[list[Key]]
    status: str
    resolutions: list[Resolution] = field(default_factory=list)

    def final_groups(self) -> list[list[Key]]:
        """The partition the merge step must honor.

        Latest resolution wins; otherwise clean blocks merge whole and
        unresolved blocks fall back to their subclusters (conservative:
        never merge across unresolved conflict boundaries).
        """
        if self.resolutions:
            return [sorted(group) for group in self.resolutions[-1].partition]
        if self.status == "clean":
            return [list(self.members)]
        return [list(group) for group in self.subclusters]

    def to_dict(self) -> dict:
        return {
            "block_id": self.block_id,
            "members": [list(k) for k in self.members],
            "edges": [e.to_dict() for e in self.edges],
            "subclusters": [[list(k) for k in group] for group in self.subclusters],
            "status": self.status,
            "resolutions": [r.to_dict() for r in self.resolutions],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Block":
        return cls(
            block_id=data["block_id"],
            members=[tuple(k) for k in data["members"]],
            edges=[Edge.from_dict(e) for e in data.get("edges", [])],
            subclusters=[[tuple(k) for k in g] for g in data["subclusters"]],
            status=data["status"],
            resolutions=[Resolution.from_dict(r) for r in data.get("resolutions", [])],
        )


@dataclass
class BlockSet:
    blocks: dict[str, Block] = field(default_factory=dict)

    def sorted_blocks(self) -> list[Block]:
        return [self.blocks[bid] for bid in sorted(self.blocks)]

    def block_of(self, key: Key) -> Block | None:
        for block in self.blocks.values():
            if key in block.members:
                return block
        return None

    def conflict_rate(self) -> float:
        if not self.blocks:
            return 0.0
        in_conflict = sum(
            1 for b in self.blocks.values() if b.status not in ("clean",)
        )
        return in_conflict / len(self.blocks)


def block_id_for(members: Iterable[Key]) -> str:
    """Stable content hash of the founding membership."""
    canon = json.dumps(sorted([list(k) for k in members]), separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def build_blocks(instances: list[Instance]) -> BlockSet:
    """Connected components under NAME ∪ LINK; subclusters under NAMETYPE ∪ LINK.

    Output is independent of input order: members, edges, and subclusters are
    all sorted, and block ids hash the sorted membership.
    """
    by_key: dict[Key, Instance] = {}
    for instance in instances:
        if instance.key in by_key:
            raise DuplicateKey(str(instance.key))
        by_key[instance.key] = instance

    name_groups: dict[str, list[Key]] = {}
    nametype_groups: dict[tuple[str, str], list[Key]] = {}
    link_groups: dict[str, list[Key]] = {}
    for key, instance in by_key.items():
        name_groups.setdefault(instance.canonical_name, []).append(key)
        nametype_groups.setdefault(
            (instance.canonical_name, instance.software_type.value), []
        ).append(key)
        for ref in instance.repo_links():
            link_groups.setdefault(ref.normalized, []).append(key)

    edges: list[Edge] = []
    for members in name_groups.values():
        edges.extend(_chain(members, "NAME"))
    for members in nametype_groups.values():
        edges.extend(_chain(members, "NAMETYPE"))
    for members in link_groups.values():
        edges.extend(_chain(members, "LINK"))

    block_uf = UnionFind()
    sub_uf = UnionFind()
    for key in by_key:
        block_uf.find(key)
        sub_uf.find(key)
    for edge in edges:
        block_uf.union(edge.a, edge.b)  # NAME and LINK (NAMETYPE implies NAME)
        if edge.kind in ("NAMETYPE", "LINK"):
            sub_uf.union(edge.a, edge.b)

    blockset = BlockSet()
    for members in block_uf.groups():
        member_set = set(members)
        subclusters = sorted(
            [g for g in sub_uf.groups() if g[0] in member_set],
            key=lambda g: g[0],
        )
        block_edges = sorted(
            (e for e in edges if e.a in member_set),
            key=lambda e: (e.kind, e.a, e.b),
        )
        status = "clean" if len(subclusters) == 1 else "conflict"
        block = Block(
            block_id=block_id_for(members),
            members=members,
            edges=block_edges,
            subclusters=subclusters,
            status=status,
        )
        blockset.blocks[block.block_id] = block
    return blockset


def _chain(members: list[Key], kind: str) -> list[Edge]:
    ordered = sorted(members)
    return [Edge(a=ordered[i], b=ordered[i + 1], kind=kind) for i in range(len(ordered) - 1)]


def detect_conflicts(blockset: BlockSet) -> list[str]:
    """Blocks whose members are grouped by name alone: ≥ 2 subclusters."""
    conflicted = []
    for block in blockset.sorted_blocks():
        if len(block.subclusters) >= 2 and not block.resolutions:
            block.status = "conflict"
            conflicted.append(block.block_id)
    return conflicted


def rescue(
    block: Block,
    instances: dict[Key, Instance],
    priority: tuple[SourceKind, ...] = DEFAULT_SOURCE_PRIORITY,
    decided_at: str = "",
) -> Block:
    """Promote likely matches into the accepted subcluster.

    The accepted subcluster is the largest (ties broken by source priority).
    A subcluster is promoted when one of its members shares a canonical name
    with an accepted member and also shares that member's source or any
    normalized URL (webpages count). Repeats to fixpoint; if exactly one
    subcluster survives the block is rescued and the promotion is recorded
    as a resolution.
    """
    if block.status != "conflict":
        return block

    order = {kind: idx for idx, kind in enumerate(priority)}

    def rank(group: list[Key]) -> tuple:
        best_priority = min(order.get(SourceKind(k[2]), len(order)) for k in group)
        return (-len(group), best_priority, group[0])

    groups = [list(g) for g in block.subclusters]
    groups.sort(key=rank)
    accepted = groups[0]
    pending = groups[1:]
    promoted: list[str] = []

    def shares_evidence(key: Key, accepted_keys: list[Key]) -> bool:
        inst = instances[key]
        urls = {u.normalized for u in inst.urls}
        for other_key in accepted_keys:
            other = instances[other_key]
            if inst.canonical_name != other.canonical_name:
                continue
            if inst.source == other.source:
                return True
            if urls & {u.normalized for u in other.urls}:
                return True
        return False

    changed = True
    while changed and pending:
        changed = False
        for group in list(pending):
            if any(shares_evidence(key, accepted) for key in group):
                accepted = sorted(accepted + group)
                pending.remove(group)
                promoted.append("+".join(k[3] for k in sorted(group)))
                changed = True

    if not pending:
        block.subclusters = [sorted(accepted)]
        block.status = "rescued"
        block.resolutions.append(
            Resolution(
                partition=[sorted(accepted)],
                method="rescue",
                confidence=0.9,
                rationale=(
                    "promoted subclusters sharing name plus source or URL: "
                    + "; ".join(promoted)
                ),
                decided_at=decided_at,
                decided_by="rescue-heuristic",
            )
        )
    else:
        block.subclusters = sorted([sorted(accepted)] + [sorted(g) for g in pending],
                                   key=lambda g: g[0])
    return block


# --- agreement proxy ---------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    kind: str  # same | different | unsure
    confidence: float


class AgreementProxy(Protocol):
    name: str

    def compare(self, left: list[Instance], right: list[Instance]) -> Verdict: ...


_TOKEN_RE = re.compile(r"\w+")


class BaselineTextProxy:
    """Deterministic token-Jaccard agreement over the textual evidence.

    Compares the union of descriptions (README-derived for mined records),
    documentation labels, and any webpage titles supplied by enrichment.
    Jaccard ≥ tau_same → same; ≤ tau_diff → different; otherwise unsure.
    An LLM-backed adapter can implement the same interface.
    """

    name = "baseline-jaccard/1"

    def __init__(
        self,
        tau_same: float = 0.5,
        tau_diff: float = 0.15,
        titles: dict[str, str] | None = None,
    ):
        if tau_diff > tau_same:
            raise ValueError("tau_diff must not exceed tau_same")
        self.tau_same = tau_same
        self.tau_diff = tau_diff
        self.titles = titles or {}

    def _tokens(self, group: list[Instance]) -> set[str]:
        parts: list[str] = []
        for inst in group:
            if inst.description:
                parts.append(inst.description)
            parts.extend(doc.label for doc in inst.documentation)
            for ref in inst.urls:
                title = self.titles.get(ref.normalized)
                if title:
                    parts.append(title)
        return {t.lower() for t in _TOKEN_RE.findall(" ".join(parts))}

    def compare(self, left: list[Instance], right: list[Instance]) -> Verdict:
        a, b = self._tokens(left), self._tokens(right)
        if not a and not b:
            return Verdict(kind="unsure", confidence=0.5)
        jaccard = len(a & b) / len(a | b)
        if jaccard >= self.tau_same:
            return Verdict(kind="same", confidence=jaccard)
        if jaccard <= self.tau_diff:
            return Verdict(kind="different", confidence=1.0 - jaccard)
        return Verdict(kind="unsure", confidence=0.5)


def resolve_with_proxy(
    block: Block,
    instances: dict[Key, Instance],
    proxy: AgreementProxy,
    decided_at: str = "",
    failure_action: str = "escalate",  # escalate | leave
) -> Block:
    """Ask the proxy to vote on every subcluster pair of a conflicted block.

    All pairs decided → the "same" verdicts are closed transitively into a
    partition and recorded as a proxy resolution. Any unsure verdict
    escalates the block for human review.
    """
    if block.status != "conflict" or len(block.subclusters) < 2:
        return block

    groups = [list(g) for g in block.subclusters]
    verdicts: dict[tuple[int, int], Verdict] = {}
    try:
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                left = [instances[k] for k in groups[i]]
                right = [instances[k] for k in groups[j]]
                verdicts[(i, j)] = proxy.compare(left, right)
    except ProxyFailure:
        if failure_action == "escalate":
            block.status = "escalated"
        return block

    if any(v.kind == "unsure" for v in verdicts.values()):
        block.status = "escalated"
        return block

    uf = UnionFind()
    for idx in range(len(groups)):
        uf.find(idx)
    for (i, j), verdict in verdicts.items():
        if verdict.kind == "same":
            uf.union(i, j)
    partition = [
        sorted(key for idx in idx_group for key in groups[idx])
        for idx_group in uf.groups()
    ]
    partition.sort(key=lambda g: g[0])

    pair_notes = "; ".join(
        f"({i},{j})={v.kind}@{v.confidence:.3f}" for (i, j), v in sorted(verdicts.items())
    )
    block.resolutions.append(
        Resolution(
            partition=partition,
            method="proxy",
            confidence=min(v.confidence for v in verdicts.values()),
            rationale=f"pairwise verdicts: {pair_notes}",
            decided_at=decided_at,
            decided_by=getattr(proxy, "name", "proxy"),
        )
    )
    block.subclusters = partition
    block.status = "proxy_resolved"
    return block


# --- escalation documents and decisions ---------------------------------------


def render_issue(block: Block, instances: dict[Key, Instance]) -> str:
    """Deterministic review document for one escalated block."""
    lines = [
        "---",
        f"block_id: {block.block_id}",
        f"members: {len(block.members)}",
        f"status: {block.status}",
        "---",
        "",
        f"# Identity conflict {block.block_id}",
        "",
        "| # | name | type | source | links | description |",
        "|---|------|------|--------|-------|-------------|",
    ]
    for idx, key in enumerate(sorted(block.members), 1):
        inst = instances.get(key)
        if inst is None:
            lines.append(f"| {idx} | {key[0]} | {key[1]} | {key[2]}:{key[3]} | — | — |")
            continue
        links = ", ".join(sorted(u.normalized for u in inst.urls)) or "—"
        excerpt = (inst.description or "").replace("\n", " ").replace("|", "\\|")
        if len(excerpt) > 200:
            excerpt = excerpt[:200]
        lines.append(
            f"| {idx} | {inst.canonical_name} | {inst.software_type.value} "
            f"| {key[2]}:{key[3]} | {links} | {excerpt or '—'} |"
        )

    lines += ["", "## Candidate partitions", ""]
    merge_all = [sorted(block.members)]
    keep_split = [sorted(g) for g in block.subclusters]
    for label, partition in (("merge-all", merge_all), ("keep-split", keep_split)):
        rendered = json.dumps(
            [[list(k) for k in group] for group in partition], separators=(",", ":")
        )
        lines.append(f"- {label}: `{rendered}`")

    template = {
        "block_id": block.block_id,
        "partition": [[list(k) for k in group] for group in keep_split],
        "decided_by": "<reviewer>",
        "rationale": "<why>",
    }
    lines += [
        "",
        "## Decision template",
        "",
        "```json",
        json.dumps(template, indent=2, sort_keys=True),
        "```",
        "",
    ]
    return "\n".join(lines)


def apply_decision(
    blockset: BlockSet,
    decision: dict,
    state_path=None,
    decided_at: str = "",
) -> BlockSet:
    """Apply one human decision document and persist the state.

    The decision must reference a known block and its partition must cover
    the block's members exactly (disjoint groups, no omissions).
    """
    block_id = decision.get("block_id")
    block = blockset.blocks.get(block_id)
    if block is None:
        raise UnknownBlock(str(block_id))

    partition = [[tuple(k) for k in group] for group in decision.get("partition", [])]
    flat: list[Key] = [key for group in partition for key in group]
    if len(flat) != len(set(flat)) or set(flat) != set(block.members):
        raise PartitionMismatch(block_id)

    block.resolutions.append(
        Resolution(
            partition=[sorted(g) for g in partition],
            method="human",
            confidence=1.0,
            rationale=str(decision.get("rationale", "")),
            decided_at=str(decision.get("decided_at", "")) or decided_at,
            decided_by=str(decision.get("decided_by", "")) or "reviewer",
        )
    )
    block.subclusters = sorted([sorted(g) for g in partition], key=lambda g: g[0])
    block.status = "human_resolved"
    if state_path is not None:
        persist_state(blockset, state_path)
    return blockset


# --- merging -------------------------------------------------------------------

_SLUG_RE = re.compile(r"[^a-z0-9]+")


def tool_slug(canonical_name: str, software_type: SoftwareType) -> str:
    base = _SLUG_RE.sub("-", canonical_name.lower()).strip("-") or "tool"
    return f"{base}-{software_type.value}"


@dataclass
class MergedTool:
    tool_id: str
    canonical_name: str
    software_type: SoftwareType
    description: str | None
    urls: list[UrlRef]
    licenses: list[LicenseRef]
    input_formats: list[TermRef]
    output_formats: list[TermRef]
    agents: list[Agent]
    publication_ids: list[PubId]
    documentation: list[DocLink]
    download_links: list[str]
    version_strings: list[str]
    dependencies: list[str]
    tests_declared: bool | None
    collections: list[str]
    sources: list[tuple[str, str]]
    field_provenance: dict[str, list[str]]
    retrieved_at: str

    def repo_links(self) -> list[UrlRef]:
        return [u for u in self.urls if u.kind in ("repository", "repository_like")]

    def to_dict(self) -> dict:
        return {
            "tool_id": self.tool_id,
            "canonical_name": self.canonical_name,
            "software_type": self.software_type.value,
            "description": self.description,
            "urls": [u.to_dict() for u in self.urls],
            "licenses": [l.to_dict() for l in self.licenses],
            "input_formats": [t.to_dict() for t in self.input_formats],
            "output_formats": [t.to_dict() for t in self.output_formats],
            "agents": [a.to_dict() for a in self.agents],
            "publication_ids": [p.to_dict() for p in self.publication_ids],
            "documentation": [d.to_dict() for d in self.documentation],
            "download_links": list(self.download_links),
            "version_strings": list(self.version_strings),
            "dependencies": list(self.dependencies),
            "tests_declared": self.tests_declared,
            "collections": list(self.collections),
            "sources": [list(s) for s in self.sources],
            "field_provenance": {k: list(v) for k, v in self.field_provenance.items()},
            "retrieved_at": self.retrieved_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MergedTool":
        return cls(
            tool_id=data["tool_id"],
            canonical_name=data["canonical_name"],
            software_type=SoftwareType(data["software_type"]),
            description=data.get("description"),
            urls=[UrlRef.from_dict(u) for u in data.get("urls", [])],
            licenses=[LicenseRef.from_dict(l) for l in data.get("licenses", [])],
            input_formats=[TermRef.from_dict(t) for t in data.get("input_formats", [])],
            output_formats=[TermRef.from_dict(t) for t in data.get("output_formats", [])],
            agents=[Agent.from_dict(a) for a in data.get("agents", [])],
            publication_ids=[PubId.from_dict(p) for p in data.get("publication_ids", [])],
            documentation=[DocLink.from_dict(d) for d in data.get("documentation", [])],
            download_links=list(data.get("download_links", [])),
            version_strings=list(data.get("version_strings", [])),
            dependencies=list(data.get("dependencies", [])),
            tests_declared=data.get("tests_declared"),
            collections=list(data.get("collections", [])),
            sources=[tuple(s) for s in data.get("sources", [])],
            field_provenance={k: list(v) for k, v in data.get("field_provenance", {}).items()},
            retrieved_at=data.get("retrieved_at", ""),
        )


def merge_group(
    members: list[Instance],
    priority: tuple[SourceKind, ...] = DEFAULT_SOURCE_PRIORITY,
) -> MergedTool:
    """Merge one resolved group into a single tool.

    List fields are deduplicated unions (sorted, so the output is invariant
    under member permutation); scalar fields come from the highest-priority
    source that carries a value. Field provenance records every contributing
    source.
    """
    if not members:
        raise EmptyGroup("merge_group needs at least one instance")

    order = {kind: idx for idx, kind in enumerate(priority)}
    ranked = sorted(members, key=lambda i: (order.get(i.source, len(order)), i.key))
    representative = ranked[0]

    provenance: dict[str, set[str]] = {}

    def contributes(field_name: str, instance: Instance) -> None:
        provenance.setdefault(field_name, set()).add(instance.source.value)

    def union(field_name: str, keyfn) -> list:
        merged = []
        seen = set()
        for inst in ranked:
            values = getattr(inst, field_name)
            if values:
                contributes(field_name, inst)
            for value in values:
                k = keyfn(value)
                if k in seen:
                    continue
                seen.add(k)
                merged.append(value)
        return sorted(merged, key=keyfn)

    def scalar(field_name: str):
        for inst in ranked:
            value = getattr(inst, field_name)
            if value is not None and value != "":
                contributes(field_name, inst)
                return value
        return None

    description = scalar("description")
    tests_declared = scalar("tests_declared")
    contributes("canonical_name", representative)
    contributes("software_type", representative)

    merged = MergedTool(
        tool_id=tool_slug(representative.canonical_name, representative.software_type),
        canonical_name=representative.canonical_name,
        software_type=representative.software_type,
        description=description,
        urls=union("urls", lambda u: u.normalized),
        licenses=union("licenses", lambda l: (l.spdx_id or "~", l.raw.casefold())),
        input_formats=union("input_formats", lambda t: (t.edam_id or "~", t.raw.casefold())),
        output_formats=union("output_formats", lambda t: (t.edam_id or "~", t.raw.casefold())),
        agents=union("agents", lambda a: (a.name.casefold(), a.email or "")),
        publication_ids=union("publication_ids", lambda p: (p.kind, p.value)),
        documentation=union("documentation", lambda d: (d.label.casefold(), d.url)),
        download_links=union("download_links", str),
        version_strings=union("version_strings", str),
        dependencies=union("dependencies", str),
        tests_declared=tests_declared,
        collections=union("collections", str),
        sources=sorted((i.source.value, i.source_id) for i in members),
        field_provenance={},
        retrieved_at=max(i.retrieved_at for i in members),
    )
    merged.field_provenance = {k: sorted(v) for k, v in sorted(provenance.items())}
    return merged


def merge_blockset(
    blockset: BlockSet,
    instances: dict[Key, Instance],
    priority: tuple[SourceKind, ...] = DEFAULT_SOURCE_PRIORITY,
) -> list[MergedTool]:
    """Merge every block's final groups; tool ids are uniquified deterministically."""
    tools: list[MergedTool] = []
    for block in blockset.sorted_blocks():
        for group in block.final_groups():
            tools.append(merge_group([instances[k] for k in group], priority))
    tools.sort(key=lambda t: (t.tool_id, t.sources))
    seen: dict[str, int] = {}
    for tool in tools:
        count = seen.get(tool.tool_id, 0)
        seen[tool.tool_id] = count + 1
        if count:
            tool.tool_id = f"{tool.tool_id}-{count + 1}"
    return tools


# --- persistence ----------------------------------------------------------------


def persist_state(blockset: BlockSet, path) -> None:
    """Canonical, atomic write of the whole block state."""
    document = {
        "schema": BLOCKS_SCHEMA,
        "blocks": [b.to_dict() for b in blockset.sorted_blocks()],
    }
    atomic_write_text(path, canonical_document(document))


def load_state(path) -> BlockSet:
    """Load and validate the block state file; violations raise CorruptState."""
    document = read_document(path, BLOCKS_SCHEMA)
    blockset = BlockSet()
    for data in document.get("blocks", []):
        try:
            block = Block.from_dict(data)
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptState(f"{path}: malformed block ({exc})") from exc
        _validate_block(path, block)
        blockset.blocks[block.block_id] = block
    return blockset


def _validate_block(path, block: Block) -> None:
    members = set(block.members)
    flat = [key for group in block.subclusters for key in group]
    if len(flat) != len(set(flat)) or set(flat) != members:
        raise CorruptState(f"{path}: subclusters of {block.block_id} do not partition members")
    if block.status not in STATUSES:
        raise CorruptState(f"{path}: unknown status {block.status!r}")
    if block.status == "clean" and len(block.subclusters) != 1:
        raise CorruptState(f"{path}: clean block {block.block_id} has split subclusters")
    if block.status not in ("clean", "conflict", "escalated") and not block.resolutions:
        raise CorruptState(f"{path}: {block.block_id} resolved without a resolution")
    for resolution in block.resolutions:
        rflat = [key for group in resolution.partition for key in group]
        if len(rflat) != len(set(rflat)) or set(rflat) != members:
            raise CorruptState(
                f"{path}: resolution partition of {block.block_id} does not cover members"
            )


def reconcile(blockset: BlockSet, previous: BlockSet) -> BlockSet:
    """Carry resolutions forward across runs.

    Block ids hash the founding membership, so a block whose membership is
    unchanged keeps its id; its audit trail and status are adopted wholesale.
    Blocks whose membership changed are new blocks and resolve afresh.
    """
    for block_id, block in blockset.blocks.items():
        old = previous.blocks.get(block_id)
        if old is None:
            continue
        block.resolutions = list(old.resolutions)
        if old.resolutions:
            block.status = old.status
            block.subclusters = [sorted(g) for g in old.resolutions[-1].partition]
        elif old.status == "escalated":
            block.status = "escalated"
    return blockset
