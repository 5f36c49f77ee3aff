"""Weighted FAIR indicator scoring for merged tools and evaluator drafts.

The indicator registry is data-driven: ids, per-principle weights, and rule
bindings come from a scoring config document. Interoperability ships with
unequal default weights (I1 0.6, I2 0.1, I3 0.3); the other principles default
to equal weights. Every rule returns a value in [0, 1] together with evidence
strings and, when the value is below 1, the concrete additions that would
raise it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

from .disambiguate import MergedTool
from .enrich import AvailabilityResult
from .errors import (
    MissingIndicator,
    UnknownIndicator,
    WeightSumViolation,
)
from .ingest import REGISTRY_SOURCES, SourceKind
from .normalize import DEPLOYABLE_TYPES, SoftwareType
from .storage import SCORING_SCHEMA, read_document

PRINCIPLES = ("F", "A", "I", "R")
WEIGHT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class IndicatorSpec:
    id: str
    principle: str
    weight: float
    rule_id: str
    paper_named: bool = False


@dataclass(frozen=True)
class ScoringConfig:
    version: str
    indicators: tuple[IndicatorSpec, ...]

    def by_principle(self, principle: str) -> tuple[IndicatorSpec, ...]:
        return tuple(s for s in self.indicators if s.principle == principle)

    def get(self, indicator_id: str) -> IndicatorSpec:
        for spec in self.indicators:
            if spec.id == indicator_id:
                return spec
        raise UnknownIndicator(indicator_id)


def load_scoring_config(path: str | Path | None = None) -> ScoringConfig:
    """Load and validate a scoring config; weight-sum violations refuse to load."""
    if path is None:
        path = Path(__file__).parent / "data" / "scoring.json"
    document = read_document(path, SCORING_SCHEMA)
    indicators = []
    seen = set()
    for item in document.get("indicators", []):
        spec = IndicatorSpec(
            id=item["id"],
            principle=item["principle"],
            weight=float(item["weight"]),
            rule_id=item["rule_id"],
            paper_named=bool(item.get("paper_named", False)),
        )
        if spec.id in seen:
            raise WeightSumViolation(f"duplicate indicator id {spec.id}")
        if spec.principle not in PRINCIPLES:
            raise WeightSumViolation(f"{spec.id}: unknown principle {spec.principle}")
        if not 0.0 <= spec.weight <= 1.0:
            raise WeightSumViolation(f"{spec.id}: weight outside [0,1]")
        if spec.rule_id not in RULES:
            raise UnknownIndicator(f"{spec.id}: unknown rule {spec.rule_id}")
        seen.add(spec.id)
        indicators.append(spec)
    config = ScoringConfig(version=str(document.get("version", "unversioned")),
                           indicators=tuple(indicators))
    for principle in PRINCIPLES:
        specs = config.by_principle(principle)
        if not specs:
            continue
        total = sum(s.weight for s in specs)
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise WeightSumViolation(f"{principle}: weights sum to {total!r}")
    return config


@dataclass
class IndicatorScore:
    id: str
    value: float
    evidence: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"id": self.id, "value": self.value, "evidence": list(self.evidence)}


@dataclass
class FairProfile:
    tool_id: str
    indicators: dict[str, IndicatorScore]
    principles: dict[str, float]
    overall: float
    computed_at: str
    weights_version: str

    def to_dict(self) -> dict:
        return {
            "tool_id": self.tool_id,
            "indicators": {k: v.to_dict() for k, v in sorted(self.indicators.items())},
            "principles": dict(sorted(self.principles.items())),
            "overall": self.overall,
            "computed_at": self.computed_at,
            "weights_version": self.weights_version,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FairProfile":
        return cls(
            tool_id=data["tool_id"],
            indicators={
                k: IndicatorScore(id=v["id"], value=v["value"], evidence=list(v["evidence"]))
                for k, v in data.get("indicators", {}).items()
            },
            principles=dict(data.get("principles", {})),
            overall=data["overall"],
            computed_at=data.get("computed_at", ""),
            weights_version=data.get("weights_version", ""),
        )


@dataclass
class ScoringContext:
    """Collection- and enrichment-level facts a single tool cannot know."""

    name_type_counts: Mapping[tuple[str, str], int] | None = None
    availability: Mapping[str, AvailabilityResult] | None = None  # normalized url → latest
    assertions: Mapping[str, bool] | None = None  # user-supplied facts (drafts)

    def asserted(self, fact: str) -> bool:
        return bool(self.assertions and self.assertions.get(fact))


RuleResult = tuple[float, list[str], list[str]]  # value, evidence, missing


def _rule_unique_identity(tool: MergedTool, ctx: ScoringContext) -> RuleResult:
    counts = ctx.name_type_counts
    key = (tool.canonical_name, tool.software_type.value)
    if counts is None or counts.get(key, 1) <= 1:
        return 1.0, [f"name/type '{key[0]}/{key[1]}' is unique in the collection"], []
    return (
        0.5,
        [f"name/type '{key[0]}/{key[1]}' shared by {counts[key]} tools"],
        ["choose a more distinctive name/type combination"],
    )


def _rule_structured_metadata(tool: MergedTool, ctx: ScoringContext) -> RuleResult:
    value, evidence, missing = 0.0, [], []
    if tool.description:
        value += 0.25
        evidence.append("description present")
    else:
        missing.append("add a description")
    has_edam = any(t.edam_id for t in tool.input_formats + tool.output_formats)
    if has_edam:
        value += 0.25
        evidence.append("at least one format mapped to an ontology term")
    else:
        missing.append("map at least one input or output format to EDAM")
    if tool.software_type != SoftwareType.undefined:
        value += 0.25
        evidence.append(f"software type is {tool.software_type.value}")
    else:
        missing.append("declare a specific software type")
    if tool.urls:
        value += 0.25
        evidence.append("webpage or repository link present")
    else:
        missing.append("add a homepage or repository link")
    return value, evidence, missing


def _rule_discoverability(tool: MergedTool, ctx: ScoringContext) -> RuleResult:
    value, evidence, missing = 0.0, [], []
    if tool.publication_ids:
        value += 0.5
        evidence.append(f"{len(tool.publication_ids)} linked publication(s)")
    else:
        missing.append("link at least one publication (DOI, PMID or PMCID)")
    registries = sorted(
        {src for src, _ in tool.sources if SourceKind(src) in REGISTRY_SOURCES}
    )
    if registries:
        value += 0.5
        evidence.append("registered in " + ", ".join(registries))
    else:
        missing.append("register the software in a community registry")
    return value, evidence, missing


def _latest_availability(tool: MergedTool, ctx: ScoringContext) -> AvailabilityResult | None:
    if not ctx.availability:
        return None
    results = [
        ctx.availability[u.normalized]
        for u in tool.urls
        if u.normalized in ctx.availability
    ]
    if not results:
        return None
    return max(results, key=lambda r: (r.checked_at, r.url.normalized))


def _rule_working_version(tool: MergedTool, ctx: ScoringContext) -> RuleResult:
    if tool.software_type in DEPLOYABLE_TYPES:
        latest = _latest_availability(tool, ctx)
        if latest is not None and latest.ok:
            return 1.0, [f"service URL {latest.url.normalized} responded "
                         f"({latest.http_status})"], []
        if latest is None:
            return 0.0, [], ["no availability check recorded for the service URL"]
        return (
            0.0,
            [],
            [f"service URL {latest.url.normalized} failed its last check "
             f"({latest.failure_kind or latest.http_status})"],
        )
    value, evidence, missing = 0.0, [], []
    if tool.download_links:
        value += 0.5
        evidence.append("download link present")
    else:
        missing.append("add a download link")
    has_install_docs = any("install" in d.label.casefold() for d in tool.documentation)
    if has_install_docs:
        value += 0.5
        evidence.append("installation documentation present")
    else:
        missing.append("add installation documentation")
    return value, evidence, missing


def _rule_e_infrastructure(tool: MergedTool, ctx: ScoringContext) -> RuleResult:
    hosts = {src for src, _ in tool.sources} & {
        SourceKind.toolshed.value,
        SourceKind.galaxy_eu.value,
    }
    if hosts:
        return 1.0, ["available on " + ", ".join(sorted(hosts))], []
    return 0.0, [], ["publish the tool on Galaxy (ToolShed or Galaxy Europe)"]


def _rule_standard_formats(tool: MergedTool, ctx: ScoringContext) -> RuleResult:
    has_input = any(t.edam_id for t in tool.input_formats)
    has_output = any(t.edam_id for t in tool.output_formats)
    if has_input and has_output:
        return 1.0, ["input and output formats mapped to ontology terms"], []
    if has_input or has_output:
        side = "input" if has_input else "output"
        other = "output" if has_input else "input"
        return 0.5, [f"{side} formats mapped to ontology terms"], [
            f"map {other} formats to EDAM"
        ]
    return 0.0, [], ["map input formats to EDAM", "map output formats to EDAM"]


_PROGRAMMATIC_TYPES = frozenset(
    {SoftwareType.lib, SoftwareType.rest, SoftwareType.sparql, SoftwareType.soap}
)


def _rule_software_integration(tool: MergedTool, ctx: ScoringContext) -> RuleResult:
    if tool.software_type in _PROGRAMMATIC_TYPES:
        return 1.0, [f"programmatic interface ({tool.software_type.value})"], []
    e_infra, evidence, _ = _rule_e_infrastructure(tool, ctx)
    if e_infra >= 1.0:
        return 1.0, evidence, []
    return 0.0, [], [
        "expose a programmatic interface (library or API) or publish on Galaxy"
    ]


def _rule_dependency_availability(tool: MergedTool, ctx: ScoringContext) -> RuleResult:
    if tool.dependencies:
        return 1.0, [f"{len(tool.dependencies)} declared dependencies"], []
    if ctx.asserted("dependencies_declared"):
        return 1.0, ["dependencies declared by the submitter"], []
    return 0.0, [], ["declare the tool's dependencies"]


def _rule_usage_documentation(tool: MergedTool, ctx: ScoringContext) -> RuleResult:
    if tool.documentation:
        return 1.0, [f"{len(tool.documentation)} documentation link(s)"], []
    return 0.0, [], ["add usage documentation links"]


def _rule_license_declared(tool: MergedTool, ctx: ScoringContext) -> RuleResult:
    spdx = [l for l in tool.licenses if l.spdx_id]
    if spdx:
        return 1.0, ["license " + ", ".join(sorted(l.spdx_id for l in spdx))], []
    if tool.licenses:
        return (
            0.5,
            ["unnormalized license text: " + ", ".join(sorted(l.raw for l in tool.licenses))],
            ["replace the free-text license with an SPDX identifier"],
        )
    return 0.0, [], ["add a license (SPDX identifier preferred)"]


def _rule_credit(tool: MergedTool, ctx: ScoringContext) -> RuleResult:
    if tool.agents:
        return 1.0, [f"{len(tool.agents)} credited agent(s)"], []
    return 0.0, [], ["credit at least one author or organization"]


def _rule_versioning(tool: MergedTool, ctx: ScoringContext) -> RuleResult:
    value, evidence, missing = 0.0, [], []
    if any(u.kind == "repository" for u in tool.urls):
        value += 0.5
        evidence.append("version-controlled repository linked")
    else:
        missing.append("link a version-controlled repository (e.g. GitHub)")
    if tool.version_strings:
        value += 0.5
        evidence.append("version " + tool.version_strings[0])
    else:
        missing.append("declare a version string")
    return value, evidence, missing


RULES: dict[str, Callable[[MergedTool, ScoringContext], RuleResult]] = {
    "unique_identity": _rule_unique_identity,
    "structured_metadata": _rule_structured_metadata,
    "discoverability": _rule_discoverability,
    "working_version": _rule_working_version,
    "e_infrastructure": _rule_e_infrastructure,
    "standard_formats": _rule_standard_formats,
    "software_integration": _rule_software_integration,
    "dependency_availability": _rule_dependency_availability,
    "usage_documentation": _rule_usage_documentation,
    "license_declared": _rule_license_declared,
    "credit": _rule_credit,
    "versioning": _rule_versioning,
}


def evaluate_indicator(
    tool: MergedTool,
    spec: IndicatorSpec,
    ctx: ScoringContext | None = None,
) -> IndicatorScore:
    ctx = ctx or ScoringContext()
    rule = RULES.get(spec.rule_id)
    if rule is None:
        raise UnknownIndicator(spec.rule_id)
    value, evidence, _ = rule(tool, ctx)
    return IndicatorScore(id=spec.id, value=value, evidence=evidence)


def indicator_guidance(
    tool: MergedTool,
    spec: IndicatorSpec,
    ctx: ScoringContext | None = None,
) -> list[str]:
    """The concrete missing fields that would raise this indicator."""
    ctx = ctx or ScoringContext()
    rule = RULES.get(spec.rule_id)
    if rule is None:
        raise UnknownIndicator(spec.rule_id)
    _, _, missing = rule(tool, ctx)
    return missing


def principle_score(
    scores: list[IndicatorScore],
    specs: tuple[IndicatorSpec, ...],
) -> float:
    """Weighted sum of one principle's indicator values."""
    total_weight = sum(s.weight for s in specs)
    if abs(total_weight - 1.0) > WEIGHT_TOLERANCE:
        raise WeightSumViolation(f"weights sum to {total_weight!r}")
    by_id = {score.id: score for score in scores}
    value = 0.0
    for spec in specs:
        if spec.id not in by_id:
            raise MissingIndicator(spec.id)
        value += spec.weight * by_id[spec.id].value
    return value


def fair_profile(
    tool: MergedTool,
    config: ScoringConfig,
    ctx: ScoringContext | None = None,
    computed_at: str = "",
) -> FairProfile:
    """Evaluate every registered indicator and aggregate principle scores.

    Pure in (tool, enrichment snapshot, config): identical inputs produce
    identical profiles. The overall score is the unweighted mean of the four
    principles (labeled as such in outputs; no aggregate is prescribed
    upstream).
    """
    ctx = ctx or ScoringContext()
    indicators = {
        spec.id: evaluate_indicator(tool, spec, ctx) for spec in config.indicators
    }
    principles = {}
    for principle in PRINCIPLES:
        specs = config.by_principle(principle)
        scores = [indicators[s.id] for s in specs]
        principles[principle] = principle_score(scores, specs) if specs else 0.0
    overall = sum(principles.values()) / len(PRINCIPLES)
    return FairProfile(
        tool_id=tool.tool_id,
        indicators=indicators,
        principles=principles,
        overall=overall,
        computed_at=computed_at,
        weights_version=config.version,
    )


def name_type_counts(tools: list[MergedTool]) -> dict[tuple[str, str], int]:
    counts: dict[tuple[str, str], int] = {}
    for tool in tools:
        key = (tool.canonical_name, tool.software_type.value)
        counts[key] = counts.get(key, 0) + 1
    return counts
