"""Collection-level aggregates behind the Trends, Scoreboard, and Data views.

Stats are computed once at pipeline end and persisted as timestamped
snapshots (one document per collection per run); the HTTP layer serves them
verbatim, never recomputing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .disambiguate import MergedTool
from .errors import EmptyCollection, MixedWeightsVersion
from .score import FairProfile
from .storage import STATS_SCHEMA

#: field name → does this tool carry a nonempty value?
FIELD_ACCESSORS: dict[str, Callable[[MergedTool], bool]] = {
    "description": lambda t: bool(t.description),
    "webpage": lambda t: any(u.kind == "webpage" for u in t.urls),
    "repository": lambda t: bool(t.repo_links()),
    "license": lambda t: bool(t.licenses),
    "spdx_license": lambda t: any(l.spdx_id for l in t.licenses),
    "publication": lambda t: bool(t.publication_ids),
    "documentation": lambda t: bool(t.documentation),
    "authors": lambda t: bool(t.agents),
    "versions": lambda t: bool(t.version_strings),
    "dependencies": lambda t: bool(t.dependencies),
    "testing": lambda t: t.tests_declared is True,
    "download": lambda t: bool(t.download_links),
    "input_formats": lambda t: bool(t.input_formats),
    "output_formats": lambda t: bool(t.output_formats),
}

DEFAULT_COMPLETENESS_FIELDS = tuple(FIELD_ACCESSORS)

LICENSE_GROUPS = ("GPL", "Apache", "MIT", "Artistic", "other", "none")


def completeness(
    tools: list[MergedTool], fields: tuple[str, ...] = DEFAULT_COMPLETENESS_FIELDS
) -> dict[str, float]:
    """Fraction of tools carrying a nonempty value, per requested field."""
    if not tools:
        raise EmptyCollection("completeness needs at least one tool")
    result = {}
    for name in fields:
        accessor = FIELD_ACCESSORS[name]
        result[name] = sum(1 for t in tools if accessor(t)) / len(tools)
    return result


def source_breakdown(tools: list[MergedTool]) -> dict[str, dict[str, int]]:
    """Counts by exact contributing-source set, plus per-source totals.

    The exact-set buckets partition the collection: their counts sum to the
    number of tools. Bucket keys join the sorted source names with '+'.
    """
    exact: dict[str, int] = {}
    per_source: dict[str, int] = {}
    for tool in tools:
        kinds = sorted({src for src, _ in tool.sources})
        bucket = "+".join(kinds) if kinds else "none"
        exact[bucket] = exact.get(bucket, 0) + 1
        for kind in kinds:
            per_source[kind] = per_source.get(kind, 0) + 1
    return {"exact": dict(sorted(exact.items())), "per_source": dict(sorted(per_source.items()))}


def scoreboard(profiles: list[FairProfile]) -> dict[str, dict[str, float]]:
    """Arithmetic mean per indicator and per principle.

    All profiles must share one weights version; mixing versions would
    average incomparable numbers.
    """
    if not profiles:
        return {"indicators": {}, "principles": {}, "overall": 0.0}
    versions = {p.weights_version for p in profiles}
    if len(versions) > 1:
        raise MixedWeightsVersion(", ".join(sorted(versions)))

    indicator_sums: dict[str, float] = {}
    principle_sums: dict[str, float] = {}
    for profile in profiles:
        for indicator_id, score in profile.indicators.items():
            indicator_sums[indicator_id] = indicator_sums.get(indicator_id, 0.0) + score.value
        for principle, value in profile.principles.items():
            principle_sums[principle] = principle_sums.get(principle, 0.0) + value
    n = len(profiles)
    return {
        "indicators": {k: v / n for k, v in sorted(indicator_sums.items())},
        "principles": {k: v / n for k, v in sorted(principle_sums.items())},
        "overall": sum(p.overall for p in profiles) / n,
    }


def _representative_license(tool: MergedTool):
    if not tool.licenses:
        return None
    return sorted(
        tool.licenses, key=lambda l: (l.spdx_id is None, l.spdx_id or "", l.raw.casefold())
    )[0]


def _license_group(license_ref) -> str:
    if license_ref is None:
        return "none"
    spdx = license_ref.spdx_id
    if spdx is None:
        return "other"
    if spdx.startswith("GPL-"):
        return "GPL"
    if spdx.startswith("Apache-"):
        return "Apache"
    if spdx == "MIT":
        return "MIT"
    if spdx.startswith("Artistic-"):
        return "Artistic"
    return "other"


def license_distribution(tools: list[MergedTool]) -> dict[str, dict[str, int]]:
    """Counts by SPDX family and by top-level license group.

    Each tool contributes exactly once to each map (via its representative
    license: the first SPDX-mapped one, else the first raw one), so both maps
    sum to the number of tools, unlicensed included.
    """
    families: dict[str, int] = {}
    groups: dict[str, int] = {}
    for tool in tools:
        rep = _representative_license(tool)
        family = "none" if rep is None else rep.family
        families[family] = families.get(family, 0) + 1
        group = _license_group(rep)
        groups[group] = groups.get(group, 0) + 1
    return {"families": dict(sorted(families.items())), "groups": dict(sorted(groups.items()))}


def type_distribution(tools: list[MergedTool]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for tool in tools:
        key = tool.software_type.value
        counts[key] = counts.get(key, 0) + 1
    return dict(sorted(counts.items()))


@dataclass
class CollectionStats:
    collection: str
    n_tools: int
    field_completeness: dict[str, float]
    source_breakdown: dict[str, dict[str, int]]
    license_distribution: dict[str, dict[str, int]]
    type_distribution: dict[str, int]
    scoreboard: dict[str, dict[str, float] | float]
    snapshot_at: str
    weights_version: str = ""

    def to_dict(self) -> dict:
        return {
            "schema": STATS_SCHEMA,
            "collection": self.collection,
            "n_tools": self.n_tools,
            "field_completeness": self.field_completeness,
            "source_breakdown": self.source_breakdown,
            "license_distribution": self.license_distribution,
            "type_distribution": self.type_distribution,
            "scoreboard": self.scoreboard,
            "snapshot_at": self.snapshot_at,
            "weights_version": self.weights_version,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CollectionStats":
        return cls(
            collection=data["collection"],
            n_tools=data["n_tools"],
            field_completeness=data.get("field_completeness", {}),
            source_breakdown=data.get("source_breakdown", {}),
            license_distribution=data.get("license_distribution", {}),
            type_distribution=data.get("type_distribution", {}),
            scoreboard=data.get("scoreboard", {}),
            snapshot_at=data.get("snapshot_at", ""),
            weights_version=data.get("weights_version", ""),
        )


def filter_by_collection(tools: list[MergedTool], tag: str) -> list[MergedTool]:
    if tag == "all":
        return list(tools)
    return [t for t in tools if tag in t.collections]


def collection_tags(tools: list[MergedTool]) -> list[str]:
    tags = set()
    for tool in tools:
        tags.update(tool.collections)
    return sorted(tags)


def compute_stats(
    tools: list[MergedTool],
    profiles: list[FairProfile],
    collection: str,
    snapshot_at: str,
) -> CollectionStats:
    """One snapshot for one collection tag ("all" means the whole corpus)."""
    subset = filter_by_collection(tools, collection)
    if not subset:
        raise EmptyCollection(collection)
    subset_ids = {t.tool_id for t in subset}
    subset_profiles = [p for p in profiles if p.tool_id in subset_ids]
    board = scoreboard(subset_profiles)
    versions = {p.weights_version for p in subset_profiles}
    return CollectionStats(
        collection=collection,
        n_tools=len(subset),
        field_completeness=completeness(subset),
        source_breakdown=source_breakdown(subset),
        license_distribution=license_distribution(subset),
        type_distribution=type_distribution(subset),
        scoreboard=board,
        snapshot_at=snapshot_at,
        weights_version=sorted(versions)[0] if versions else "",
    )
