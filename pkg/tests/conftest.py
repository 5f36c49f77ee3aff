from __future__ import annotations

import pytest

from observatory.disambiguate import MergedTool, tool_slug
from observatory.ingest import SourceKind
from observatory.normalize import (
    Instance,
    SoftwareType,
    Tables,
    default_tables,
    normalize_url,
)
from observatory.score import load_scoring_config

FIXTURES = __import__("pathlib").Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def tables() -> Tables:
    return default_tables()


@pytest.fixture(scope="session")
def scoring():
    return load_scoring_config()


def make_instance(
    name: str,
    type_: str = "cmd",
    source: str = "biotools",
    source_id: str | None = None,
    urls: list[str] | None = None,
    description: str | None = None,
    retrieved_at: str = "2025-01-01T00:00:00Z",
    **extra,
) -> Instance:
    """Bare instance factory for block/merge tests; URLs go through the
    normal normalizer so host classes behave exactly as in production."""
    refs = [normalize_url(u) for u in urls or []]
    return Instance(
        canonical_name=name,
        software_type=SoftwareType(type_),
        source=SourceKind(source),
        source_id=source_id or f"{name}-{type_}-{source}",
        urls=refs,
        description=description,
        retrieved_at=retrieved_at,
        **extra,
    )


def make_tool(
    name: str = "toolx",
    type_: str = "cmd",
    sources: list[tuple[str, str]] | None = None,
    **overrides,
) -> MergedTool:
    software_type = SoftwareType(type_)
    base = dict(
        tool_id=tool_slug(name, software_type),
        canonical_name=name,
        software_type=software_type,
        description=None,
        urls=[],
        licenses=[],
        input_formats=[],
        output_formats=[],
        agents=[],
        publication_ids=[],
        documentation=[],
        download_links=[],
        version_strings=[],
        dependencies=[],
        tests_declared=None,
        collections=[],
        sources=sources if sources is not None else [("biotools", name)],
        field_provenance={},
        retrieved_at="2025-01-01T00:00:00Z",
    )
    base.update(overrides)
    return MergedTool(**base)


# --- end-to-end corpus --------------------------------------------------------

E2E_SOURCES = ("biotools", "bioconda", "bioconductor", "toolshed", "sourceforge", "galaxy_eu")


def write_e2e_config(target_dir, state_dir=None, extra: dict | None = None) -> str:
    """Materialize a run-config YAML pointing at the bundled mixed corpus."""
    import yaml

    fixture_dir = FIXTURES / "e2e"
    config = {
        "state_dir": str(state_dir or (target_dir / "state")),
        "sources": {name: str(fixture_dir / f"{name}.json") for name in E2E_SOURCES},
        "repo_documents": str(fixture_dir / "repos.json"),
        "transport": {"mode": "stub", "stub_fixture": str(fixture_dir / "transport.json")},
    }
    config.update(extra or {})
    path = target_dir / "config.yaml"
    path.write_text(yaml.safe_dump(config), encoding="utf-8")
    return str(path)


@pytest.fixture(scope="session")
def e2e_state(tmp_path_factory):
    """One full pipeline run over the mixed corpus, shared by read-only tests."""
    from observatory import pipeline
    from observatory.config import load_config

    tmp = tmp_path_factory.mktemp("e2e")
    config_path = write_e2e_config(tmp)
    config = load_config(config_path)
    report = pipeline.run(config)
    return {"config": config, "config_path": config_path, "report": report}


# --- acceptance reporting -----------------------------------------------------

_ACCEPTANCE_RESULTS: dict[str, str] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or "test_acceptance" not in str(item.fspath):
        return
    label = item.name
    _ACCEPTANCE_RESULTS[label] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for label in sorted(_ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"{_ACCEPTANCE_RESULTS[label]}  {label}")
