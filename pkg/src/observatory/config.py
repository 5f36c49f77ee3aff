"""Run configuration: paths, tables, priorities, thresholds, transport mode."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .ingest import DEFAULT_SOURCE_PRIORITY, SourceKind
from .normalize import (
    DEFAULT_CODE_HOSTS,
    DEFAULT_ORG_KEYWORDS,
    HostClass,
    Tables,
    load_edam_table,
    load_license_table,
)

_DATA_DIR = Path(__file__).parent / "data"


@dataclass
class RunConfig:
    state_dir: Path
    sources: dict[SourceKind, Path] = field(default_factory=dict)
    repo_documents: Path | None = None
    spdx_licenses: Path = _DATA_DIR / "spdx_licenses.tsv"
    spdx_synonyms: Path = _DATA_DIR / "spdx_synonyms.tsv"
    edam_labels: Path = _DATA_DIR / "edam_labels.tsv"
    scoring_config: Path | None = None
    source_priority: tuple[SourceKind, ...] = DEFAULT_SOURCE_PRIORITY
    code_hosts: dict[str, HostClass] = field(default_factory=lambda: dict(DEFAULT_CODE_HOSTS))
    org_keywords: tuple[str, ...] = DEFAULT_ORG_KEYWORDS
    tau_same: float = 0.5
    tau_diff: float = 0.15
    proxy_failure_action: str = "escalate"
    transport_mode: str = "stub"  # stub | live
    transport_fixture: Path | None = None
    timeout_s: float = 10.0
    per_host_budget: int = 4
    retries: int = 3
    bind: str = "127.0.0.1:8080"
    cors_origin: str = "*"
    ui_dist: Path | None = None

    def tables(self) -> Tables:
        return Tables(
            licenses=load_license_table(self.spdx_licenses, self.spdx_synonyms),
            edam=load_edam_table(self.edam_labels),
            hosts=self.code_hosts,
            org_keywords=self.org_keywords,
        )


def load_config(path: str | Path) -> RunConfig:
    """Load and validate a run config (YAML or JSON).

    Validation is strict: every referenced path must exist, the source
    priority must cover every configured source, and thresholds must be
    ordered. The OBS_TRANSPORT environment variable overrides the configured
    transport mode.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as handle:
        try:
            data = yaml.safe_load(handle) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: not valid YAML/JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at the top level")

    base = path.parent

    def resolve(value) -> Path:
        p = Path(value)
        return p if p.is_absolute() else base / p

    sources: dict[SourceKind, Path] = {}
    for name, dump_path in (data.get("sources") or {}).items():
        try:
            kind = SourceKind(name)
        except ValueError:
            raise ConfigError(f"unknown source kind {name!r}")
        sources[kind] = resolve(dump_path)

    config = RunConfig(
        state_dir=resolve(data.get("state_dir", "state")),
        sources=sources,
    )

    if data.get("repo_documents"):
        config.repo_documents = resolve(data["repo_documents"])
    tables = data.get("tables") or {}
    if tables.get("spdx_licenses"):
        config.spdx_licenses = resolve(tables["spdx_licenses"])
    if tables.get("spdx_synonyms"):
        config.spdx_synonyms = resolve(tables["spdx_synonyms"])
    if tables.get("edam_labels"):
        config.edam_labels = resolve(tables["edam_labels"])
    if data.get("scoring_config"):
        config.scoring_config = resolve(data["scoring_config"])

    if data.get("source_priority"):
        try:
            config.source_priority = tuple(SourceKind(s) for s in data["source_priority"])
        except ValueError as exc:
            raise ConfigError(f"source_priority: {exc}")

    for host, cls in (data.get("code_hosts") or {}).items():
        try:
            config.code_hosts[host.lower()] = HostClass(cls)
        except ValueError:
            raise ConfigError(f"code_hosts: unknown class {cls!r}")
    if data.get("org_keywords"):
        config.org_keywords = tuple(str(k).lower() for k in data["org_keywords"])

    proxy = data.get("proxy") or {}
    config.tau_same = float(proxy.get("tau_same", config.tau_same))
    config.tau_diff = float(proxy.get("tau_diff", config.tau_diff))
    config.proxy_failure_action = proxy.get("failure_action", config.proxy_failure_action)

    transport = data.get("transport") or {}
    config.transport_mode = transport.get("mode", config.transport_mode)
    if transport.get("stub_fixture"):
        config.transport_fixture = resolve(transport["stub_fixture"])
    config.timeout_s = float(transport.get("timeout_s", config.timeout_s))
    config.per_host_budget = int(transport.get("per_host_budget", config.per_host_budget))
    config.retries = int(transport.get("retries", config.retries))

    http = data.get("http") or {}
    config.bind = http.get("bind", config.bind)
    config.cors_origin = http.get("cors_origin", config.cors_origin)
    if http.get("ui_dist"):
        config.ui_dist = resolve(http["ui_dist"])

    env_transport = os.environ.get("OBS_TRANSPORT")
    if env_transport:
        config.transport_mode = env_transport

    validate_config(config)
    return config


def validate_config(config: RunConfig) -> None:
    if not config.sources:
        raise ConfigError("no sources configured")
    for kind, dump_path in config.sources.items():
        if not Path(dump_path).exists():
            raise ConfigError(f"{kind.value} dump not found: {dump_path}")
    for label, table_path in (
        ("spdx_licenses", config.spdx_licenses),
        ("spdx_synonyms", config.spdx_synonyms),
        ("edam_labels", config.edam_labels),
    ):
        if not Path(table_path).exists():
            raise ConfigError(f"{label} table not found: {table_path}")
    if config.repo_documents and not Path(config.repo_documents).exists():
        raise ConfigError(f"repo_documents not found: {config.repo_documents}")
    if config.scoring_config and not Path(config.scoring_config).exists():
        raise ConfigError(f"scoring config not found: {config.scoring_config}")

    needed = set(config.sources)
    if config.repo_documents:
        needed.add(SourceKind.github)
    missing = needed - set(config.source_priority)
    if missing:
        raise ConfigError(
            "source_priority must cover every configured source; missing: "
            + ", ".join(sorted(k.value for k in missing))
        )
    if len(set(config.source_priority)) != len(config.source_priority):
        raise ConfigError("source_priority contains duplicates")

    if not 0.0 <= config.tau_diff <= config.tau_same <= 1.0:
        raise ConfigError("proxy thresholds must satisfy 0 <= tau_diff <= tau_same <= 1")
    if config.proxy_failure_action not in ("escalate", "leave"):
        raise ConfigError(f"unknown proxy failure_action {config.proxy_failure_action!r}")
    if config.transport_mode not in ("stub", "live"):
        raise ConfigError(f"unknown transport mode {config.transport_mode!r}")
    if config.transport_mode == "stub" and config.transport_fixture:
        if not Path(config.transport_fixture).exists():
            raise ConfigError(f"transport fixture not found: {config.transport_fixture}")
