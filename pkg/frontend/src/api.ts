import type {
  ChartId,
  ChartPayload,
  CollectionList,
  Draft,
  EvaluationResponse,
} from "./types.js";

// Same-origin by default; embeds on other hosts can point elsewhere via
// <meta name="observatory-api" content="https://host">.
export function apiBase(): string {
  const meta = document.querySelector('meta[name="observatory-api"]');
  return (meta?.getAttribute("content") ?? "").replace(/\/$/, "");
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(apiBase() + path, init);
  if (!response.ok) {
    let message = `${response.status}`;
    try {
      const body = await response.json();
      message = body.message ?? message;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new Error(message);
  }
  return (await response.json()) as T;
}

function post(path: string, body: unknown): RequestInit & { path: string } {
  return {
    path,
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  };
}

export function getCollections(): Promise<CollectionList> {
  return request<CollectionList>("/v1/collections");
}

export function getChart(collection: string, chartId: ChartId): Promise<ChartPayload> {
  return request<ChartPayload>(
    `/v1/charts/${encodeURIComponent(collection)}/${chartId}`
  );
}

export function evaluateDraft(draft: Draft): Promise<EvaluationResponse> {
  const { path, ...init } = post("/v1/evaluate", draft);
  return request<EvaluationResponse>(path, init);
}

export interface FetchSelector {
  kind: "observatory" | "repo" | "upload";
  ref: string;
}

export function fetchMetadata(selector: FetchSelector): Promise<{ draft: Partial<Draft>; origin: string }> {
  const { path, ...init } = post("/v1/fetch-metadata", selector);
  return request(path, init);
}

/** Returns the exporter's exact bytes; the UI must never reshape them. */
export async function exportDraft(format: "cff" | "masmp", draft: Draft): Promise<Blob> {
  const response = await fetch(apiBase() + `/v1/export/${format}`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ draft }),
  });
  if (!response.ok) {
    const body = await response.json();
    throw new Error(body.message ?? `${response.status}`);
  }
  return await response.blob();
}

export interface PrResult {
  submitted: boolean;
  dry_run: boolean;
  change?: { repo: string; branch: string; title: string };
}

export function openPullRequest(draft: Draft, format: "cff" | "masmp", repo: string): Promise<PrResult> {
  const { path, ...init } = post("/v1/pr", { draft, format, repo, dry_run: true });
  return request<PrResult>(path, init);
}
