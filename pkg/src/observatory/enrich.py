"""Publication metadata and service-availability enrichment.

All outbound access goes through an injected transport so tests never touch
the network. Results live in an auxiliary store, separate from the normalized
layer: disabling enrichment entirely must never change how identities are
resolved.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Protocol

from .errors import MismatchedIdentity, NotFound, RateLimited, TransportFailure
from .ingest import PubId
from .normalize import DEPLOYABLE_TYPES, Instance, UrlRef
from .storage import ENRICH_SCHEMA, read_records, write_records

PROVIDERS = ("europepmc", "semanticscholar")
DEFAULT_TIMEOUT_S = 10.0
DEFAULT_PER_HOST_BUDGET = 4
DEFAULT_RETRIES = 3


@dataclass
class PublicationMeta:
    id: PubId
    provider: str
    title: str | None = None
    year: int | None = None
    venue: str | None = None
    citation_count: int | None = None
    citations_per_year: dict[str, int] = field(default_factory=dict)
    fetched_at: str = ""

    def to_dict(self) -> dict:
        return {
            "id": self.id.to_dict(),
            "provider": self.provider,
            "title": self.title,
            "year": self.year,
            "venue": self.venue,
            "citation_count": self.citation_count,
            "citations_per_year": dict(self.citations_per_year),
            "fetched_at": self.fetched_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PublicationMeta":
        return cls(
            id=PubId.from_dict(data["id"]),
            provider=data["provider"],
            title=data.get("title"),
            year=data.get("year"),
            venue=data.get("venue"),
            citation_count=data.get("citation_count"),
            citations_per_year=dict(data.get("citations_per_year", {})),
            fetched_at=data.get("fetched_at", ""),
        )


@dataclass
class AvailabilityResult:
    url: UrlRef
    ok: bool
    http_status: int | None = None
    latency_ms: float | None = None
    checked_at: str = ""
    failure_kind: str | None = None  # timeout | dns | http_error | tls

    def to_dict(self) -> dict:
        return {
            "url": self.url.to_dict(),
            "ok": self.ok,
            "http_status": self.http_status,
            "latency_ms": self.latency_ms,
            "checked_at": self.checked_at,
            "failure_kind": self.failure_kind,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AvailabilityResult":
        return cls(
            url=UrlRef.from_dict(data["url"]),
            ok=data["ok"],
            http_status=data.get("http_status"),
            latency_ms=data.get("latency_ms"),
            checked_at=data.get("checked_at", ""),
            failure_kind=data.get("failure_kind"),
        )


class Transport(Protocol):
    """Outbound client boundary; implementations: stub (fixtures) and live."""

    def head(self, url: str, timeout: float) -> dict: ...

    def fetch_publication(self, provider: str, pub_id: PubId) -> dict: ...


class StubTransport:
    """Fixture-backed transport.

    URL entries map to a status code, a failure-kind string ("timeout",
    "dns", "tls"), or the long form {"status": 200} / {"error": "timeout"}.
    Publications map "provider:kind:value" to a response payload (or
    {"rate_limited": true}). Counts calls so cache behaviour is testable.
    """

    def __init__(self, fixture: dict | None = None):
        fixture = fixture or {}
        self.urls: dict = dict(fixture.get("urls", {}))
        self.publications: dict = dict(fixture.get("publications", {}))
        self.repos: dict = dict(fixture.get("repos", {}))
        self.calls: list[tuple] = []

    def head(self, url: str, timeout: float) -> dict:
        self.calls.append(("head", url))
        entry = self.urls.get(url)
        if entry is None:
            entry = {"error": "dns"}
        elif isinstance(entry, int):
            entry = {"status": entry}
        elif isinstance(entry, str):
            entry = {"error": entry}
        outcome = dict(entry)
        outcome.setdefault("latency_ms", 0.0)  # wall clock stays out of fixtures
        return outcome

    def fetch_publication(self, provider: str, pub_id: PubId) -> dict:
        self.calls.append(("publication", provider, pub_id.kind, pub_id.value))
        payload = self.publications.get(f"{provider}:{pub_id.kind}:{pub_id.value}")
        if payload is None:
            raise NotFound(f"{provider}: {pub_id.kind}:{pub_id.value}")
        return dict(payload)

    def fetch_repo_document(self, repo_url: str) -> dict:
        self.calls.append(("repo", repo_url))
        doc = self.repos.get(repo_url)
        if doc is None:
            raise NotFound(repo_url)
        return dict(doc)


class LiveTransport:
    """requests-backed transport with a per-host in-flight budget.

    Only instantiated in live mode; the test suite always runs on the stub.
    """

    _PROVIDER_URLS = {
        "europepmc": "https://www.ebi.ac.uk/europepmc/webservices/rest/search",
        "semanticscholar": "https://api.semanticscholar.org/graph/v1/paper/",
    }

    def __init__(self, per_host_budget: int = DEFAULT_PER_HOST_BUDGET):
        import requests

        self._session = requests.Session()
        self._budget = per_host_budget
        self._semaphores: dict[str, threading.Semaphore] = {}
        self._lock = threading.Lock()

    def _semaphore(self, host: str) -> threading.Semaphore:
        with self._lock:
            if host not in self._semaphores:
                self._semaphores[host] = threading.Semaphore(self._budget)
            return self._semaphores[host]

    def head(self, url: str, timeout: float) -> dict:
        import requests
        from urllib.parse import urlsplit

        host = urlsplit(url).netloc
        with self._semaphore(host):
            try:
                response = self._session.head(url, timeout=timeout, allow_redirects=True)
                if response.status_code == 405:
                    response = self._session.get(url, timeout=timeout, stream=True)
                return {"status": response.status_code}
            except requests.exceptions.SSLError:
                return {"error": "tls"}
            except requests.exceptions.ConnectTimeout:
                return {"error": "timeout"}
            except requests.exceptions.ReadTimeout:
                return {"error": "timeout"}
            except requests.exceptions.ConnectionError:
                return {"error": "dns"}

    def fetch_publication(self, provider: str, pub_id: PubId) -> dict:
        import requests

        base = self._PROVIDER_URLS.get(provider)
        if base is None:
            raise TransportFailure(f"unknown provider {provider!r}")
        host = base.split("/")[2]
        with self._semaphore(host):
            try:
                if provider == "europepmc":
                    response = self._session.get(
                        base,
                        params={"query": f"{pub_id.kind}:{pub_id.value}", "format": "json"},
                        timeout=DEFAULT_TIMEOUT_S,
                    )
                else:
                    prefix = {"doi": "DOI:", "pmid": "PMID:", "pmcid": "PMCID:"}[pub_id.kind]
                    response = self._session.get(
                        base + prefix + pub_id.value,
                        params={"fields": "title,year,venue,citationCount"},
                        timeout=DEFAULT_TIMEOUT_S,
                    )
            except requests.exceptions.RequestException as exc:
                raise TransportFailure(str(exc)) from exc
        if response.status_code == 404:
            raise NotFound(f"{provider}: {pub_id.kind}:{pub_id.value}")
        if response.status_code == 429:
            return {"rate_limited": True}
        if response.status_code >= 400:
            raise TransportFailure(f"{provider}: HTTP {response.status_code}")
        return response.json()


class EnrichmentStore:
    """Cache for publication metadata and availability results.

    Backed by a line-delimited store; writes are serialized per process and
    records are immutable once written.
    """

    def __init__(self):
        self.publications: dict[tuple[str, str, str], PublicationMeta] = {}
        self.availability: dict[str, AvailabilityResult] = {}  # normalized url → latest
        self._lock = threading.Lock()

    def put_publication(self, meta: PublicationMeta) -> None:
        with self._lock:
            self.publications[(meta.provider, meta.id.kind, meta.id.value)] = meta

    def put_availability(self, result: AvailabilityResult) -> None:
        with self._lock:
            self.availability[result.url.normalized] = result

    def save(self, path) -> None:
        records = []
        for key in sorted(self.publications):
            records.append({"kind": "publication", **self.publications[key].to_dict()})
        for url in sorted(self.availability):
            records.append({"kind": "availability", **self.availability[url].to_dict()})
        write_records(path, ENRICH_SCHEMA, records)

    @classmethod
    def load(cls, path) -> "EnrichmentStore":
        store = cls()
        for record in read_records(path, ENRICH_SCHEMA):
            kind = record.pop("kind", None)
            if kind == "publication":
                store.put_publication(PublicationMeta.from_dict(record))
            elif kind == "availability":
                store.put_availability(AvailabilityResult.from_dict(record))
        return store


def fetch_publication(
    pub_id: PubId,
    provider: str,
    transport: Transport,
    store: EnrichmentStore,
    fetched_at: str = "",
    retries: int = DEFAULT_RETRIES,
    backoff_s: float = 0.5,
) -> PublicationMeta:
    """Fetch one publication's metadata, caching by (provider, id).

    A cache hit bypasses the transport entirely. Rate-limited responses are
    retried with exponential backoff; persistent limiting raises RateLimited.
    """
    if provider not in PROVIDERS:
        raise TransportFailure(f"unsupported provider {provider!r}")
    cached = store.publications.get((provider, pub_id.kind, pub_id.value))
    if cached is not None:
        return cached

    payload = None
    for attempt in range(retries + 1):
        payload = transport.fetch_publication(provider, pub_id)
        if not payload.get("rate_limited"):
            break
        if attempt < retries:
            time.sleep(backoff_s * (2**attempt))
    if payload is None or payload.get("rate_limited"):
        raise RateLimited(f"{provider}: {pub_id.kind}:{pub_id.value}")

    per_year = {
        str(year): int(count)
        for year, count in (payload.get("citationsPerYear") or {}).items()
        if int(count) >= 0
    }
    citation_count = payload.get("citationCount")
    if citation_count is not None:
        citation_count = int(citation_count)
        if citation_count < 0:
            citation_count = None
    if citation_count is not None and sum(per_year.values()) > citation_count:
        per_year = {}  # provider disagreement: keep the total, drop the breakdown
    meta = PublicationMeta(
        id=pub_id,
        provider=provider,
        title=payload.get("title"),
        year=payload.get("year"),
        venue=payload.get("venue"),
        citation_count=citation_count,
        citations_per_year=per_year,
        fetched_at=fetched_at,
    )
    store.put_publication(meta)
    return meta


def check_service(
    instance: Instance,
    transport: Transport,
    timeout_s: float = DEFAULT_TIMEOUT_S,
    checked_at: str = "",
) -> list[AvailabilityResult]:
    """Probe each distinct webpage/repository-root URL of a deployable instance.

    Non-deployable types get no checks and an empty result list. Failures are
    results (ok=false with a failure kind), never exceptions.
    """
    if instance.software_type not in DEPLOYABLE_TYPES:
        return []
    results = []
    seen: set[str] = set()
    for ref in instance.urls:
        if ref.normalized in seen:
            continue
        seen.add(ref.normalized)
        results.append(check_url(ref, transport, timeout_s, checked_at))
    return results


def check_url(
    ref: UrlRef,
    transport: Transport,
    timeout_s: float = DEFAULT_TIMEOUT_S,
    checked_at: str = "",
) -> AvailabilityResult:
    started = time.monotonic()
    outcome = transport.head(ref.raw, timeout_s)
    measured = round((time.monotonic() - started) * 1000.0, 3)
    latency_ms = outcome.get("latency_ms", measured)
    if "status" in outcome:
        status = int(outcome["status"])
        ok = 200 <= status <= 399
        return AvailabilityResult(
            url=ref,
            ok=ok,
            http_status=status,
            latency_ms=latency_ms,
            checked_at=checked_at,
            failure_kind=None if ok else "http_error",
        )
    return AvailabilityResult(
        url=ref,
        ok=False,
        http_status=None,
        latency_ms=latency_ms,
        checked_at=checked_at,
        failure_kind=outcome.get("error", "dns"),
    )


def attach_enrichment(
    instance: Instance,
    pubs: list[PublicationMeta],
    avail: list[AvailabilityResult],
) -> Instance:
    """Pair enrichment with an instance without touching its normalized fields.

    The result is the same instance object with an `enrichment` attribute
    holding the auxiliary data; a publication whose id is not among the
    instance's publication ids is a MismatchedIdentity error.
    """
    own_ids = {(p.kind, p.value) for p in instance.publication_ids}
    for meta in pubs:
        if (meta.id.kind, meta.id.value) not in own_ids:
            raise MismatchedIdentity(
                f"{instance.source_id}: publication {meta.id.kind}:{meta.id.value}"
            )
    instance.enrichment = {"publications": list(pubs), "availability": list(avail)}
    return instance


def unavailable_fraction(results: list[AvailabilityResult]) -> float:
    """Share of checked URLs that failed; 0.0 on an empty result set."""
    if not results:
        return 0.0
    return sum(1 for r in results if not r.ok) / len(results)
