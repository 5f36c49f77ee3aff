import pytest

from observatory.enrich import (
    AvailabilityResult,
    EnrichmentStore,
    StubTransport,
    attach_enrichment,
    check_service,
    fetch_publication,
    unavailable_fraction,
)
from observatory.errors import MismatchedIdentity, NotFound, RateLimited
from observatory.ingest import PubId

from conftest import make_instance


def test_fetch_publication_maps_stub_payload():
    transport = StubTransport(
        {"publications": {"europepmc:doi:10.1/x": {"citationCount": 612, "year": 2019}}}
    )
    store = EnrichmentStore()
    meta = fetch_publication(PubId("doi", "10.1/x"), "europepmc", transport, store)
    assert meta.citation_count == 612
    assert meta.year == 2019
    assert meta.provider == "europepmc"


def test_fetch_publication_cache_bypasses_transport():
    transport = StubTransport(
        {"publications": {"europepmc:doi:10.1/x": {"citationCount": 1}}}
    )
    store = EnrichmentStore()
    fetch_publication(PubId("doi", "10.1/x"), "europepmc", transport, store)
    calls_before = len(transport.calls)
    fetch_publication(PubId("doi", "10.1/x"), "europepmc", transport, store)
    assert len(transport.calls) == calls_before


def test_fetch_publication_unknown_id_is_not_found():
    store = EnrichmentStore()
    with pytest.raises(NotFound):
        fetch_publication(PubId("doi", "10.9/none"), "europepmc", StubTransport(), store)


def test_fetch_publication_rate_limit_exhausts_retries():
    transport = StubTransport(
        {"publications": {"europepmc:doi:10.1/x": {"rate_limited": True}}}
    )
    store = EnrichmentStore()
    with pytest.raises(RateLimited):
        fetch_publication(
            PubId("doi", "10.1/x"), "europepmc", transport, store,
            retries=2, backoff_s=0.0,
        )
    assert len(transport.calls) == 3  # initial + 2 retries


def test_publication_counts_are_sanitized():
    transport = StubTransport(
        {
            "publications": {
                "europepmc:doi:10.1/neg": {"citationCount": -3},
                "semanticscholar:doi:10.1/skew": {
                    "citationCount": 5,
                    "citationsPerYear": {"2023": 4, "2024": 4},
                },
            }
        }
    )
    store = EnrichmentStore()
    negative = fetch_publication(PubId("doi", "10.1/neg"), "europepmc", transport, store)
    assert negative.citation_count is None
    skewed = fetch_publication(PubId("doi", "10.1/skew"), "semanticscholar", transport, store)
    assert skewed.citation_count == 5
    assert skewed.citations_per_year == {}  # breakdown contradicted the total


def test_check_service_status_rule():
    instance = make_instance("webtool", "web", urls=["http://w.example.org"])
    transport = StubTransport({"urls": {"http://w.example.org": {"status": 200}}})
    results = check_service(instance, transport)
    assert len(results) == 1
    assert results[0].ok is True
    assert results[0].http_status == 200
    assert results[0].failure_kind is None


def test_check_service_timeout_becomes_result():
    instance = make_instance("resty", "rest", urls=["http://slow.example.org"])
    transport = StubTransport({"urls": {"http://slow.example.org": {"error": "timeout"}}})
    results = check_service(instance, transport)
    assert results[0].ok is False
    assert results[0].failure_kind == "timeout"


def test_stub_fixture_accepts_short_value_forms():
    instance = make_instance("webtool", "web",
                             urls=["http://a.example.org", "http://b.example.org"])
    transport = StubTransport(
        {"urls": {"http://a.example.org": 200, "http://b.example.org": "timeout"}}
    )
    results = {r.url.raw: r for r in check_service(instance, transport)}
    assert results["http://a.example.org"].ok is True
    assert results["http://b.example.org"].failure_kind == "timeout"


def test_non_deployable_gets_zero_checks():
    instance = make_instance("cli", "cmd", urls=["http://cli.example.org"])
    transport = StubTransport()
    assert check_service(instance, transport) == []
    assert transport.calls == []


def test_redirect_status_counts_as_ok():
    instance = make_instance("webtool", "web", urls=["http://w.example.org"])
    transport = StubTransport({"urls": {"http://w.example.org": {"status": 302}}})
    assert check_service(instance, transport)[0].ok is True


def test_attach_enrichment_accepts_own_publication():
    instance = make_instance("x", publication_ids=[PubId("doi", "10.1/x")])
    store = EnrichmentStore()
    transport = StubTransport({"publications": {"europepmc:doi:10.1/x": {"year": 2020}}})
    meta = fetch_publication(PubId("doi", "10.1/x"), "europepmc", transport, store)
    enriched = attach_enrichment(instance, [meta], [])
    assert enriched.enrichment["publications"] == [meta]


def test_attach_enrichment_rejects_foreign_publication():
    instance = make_instance("x")
    store = EnrichmentStore()
    transport = StubTransport({"publications": {"europepmc:doi:10.1/y": {}}})
    meta = fetch_publication(PubId("doi", "10.1/y"), "europepmc", transport, store)
    with pytest.raises(MismatchedIdentity):
        attach_enrichment(instance, [meta], [])


def test_attach_enrichment_empty_is_identity():
    instance = make_instance("x")
    before = instance.to_dict()
    attach_enrichment(instance, [], [])
    assert instance.to_dict() == before


def test_store_round_trip_is_byte_identical(tmp_path):
    store = EnrichmentStore()
    transport = StubTransport(
        {
            "publications": {"europepmc:doi:10.1/x": {"citationCount": 3}},
            "urls": {"http://w.example.org": {"status": 500}},
        }
    )
    fetch_publication(PubId("doi", "10.1/x"), "europepmc", transport, store)
    instance = make_instance("w", "web", urls=["http://w.example.org"])
    for result in check_service(instance, transport, checked_at="2025-01-01T00:00:00Z"):
        result.latency_ms = 0.0  # wall-clock jitter has no place in the store
        store.put_availability(result)
    path_a = tmp_path / "a.jsonl"
    path_b = tmp_path / "b.jsonl"
    store.save(path_a)
    EnrichmentStore.load(path_a).save(path_b)
    assert path_a.read_bytes() == path_b.read_bytes()


def test_unavailable_fraction():
    def result(ok):
        return AvailabilityResult(
            url=make_instance("w", "web", urls=["http://a.org"]).urls[0], ok=ok
        )

    results = [result(False), result(False), result(True)]
    assert unavailable_fraction(results) == pytest.approx(2 / 3)
    assert unavailable_fraction([]) == 0.0
