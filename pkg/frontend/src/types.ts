// Payload shapes of the /v1 API. The UI never does scoring arithmetic:
// every displayed number comes straight out of one of these objects.

export interface IndicatorScore {
  id: string;
  value: number;
  evidence: string[];
}

export interface FairProfile {
  tool_id: string;
  indicators: Record<string, IndicatorScore>;
  principles: Record<string, number>;
  overall: number;
  computed_at: string;
  weights_version: string;
}

export interface GuidanceEntry {
  indicator: string;
  principle: string;
  weight: number;
  value: number;
  missing: string[];
}

export interface EvaluationResponse {
  profile: FairProfile;
  guidance: GuidanceEntry[];
  weights: Record<string, { weight: number; principle: string }>;
}

export interface Draft {
  name: string;
  type: string;
  description?: string | null;
  webpages: string[];
  repositories: string[];
  licenses: string[];
  input_formats: string[];
  output_formats: string[];
  authors: string[];
  documentation: { label: string; url: string }[];
  download_links: string[];
  version_strings: string[];
  dependencies: string[];
  collections: string[];
  tests_present?: boolean | null;
  registration_required?: boolean | null;
  dependencies_declared?: boolean | null;
}

export function emptyDraft(): Draft {
  return {
    name: "",
    type: "cmd",
    description: null,
    webpages: [],
    repositories: [],
    licenses: [],
    input_formats: [],
    output_formats: [],
    authors: [],
    documentation: [],
    download_links: [],
    version_strings: [],
    dependencies: [],
    collections: [],
  };
}

export type ChartId = "completeness" | "scoreboard" | "licenses" | "sources" | "types";

export interface ChartPayload {
  collection: string;
  chart_id: ChartId;
  snapshot_at: string;
  data: unknown;
}

export interface CollectionList {
  collections: string[];
}

export interface ApiError {
  code: string;
  message: string;
  details?: unknown;
}
