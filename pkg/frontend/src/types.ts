// Wire types for the gateway HTTP API (see ../../docs/http_api.md).
// These mirror the JSON the server actually sends; nothing here is computed
// client-side.

export type ErrorCode = "validation" | "syntax" | "not-found" | "conflict" | "internal";

export interface ApiErrorBody {
  code: ErrorCode;
  message: string;
  detail: Record<string, unknown> | null;
}

export interface Health {
  status: string;
  snapshot_id: number;
  version: string;
}

export interface SchemaAttribute {
  name: string;
  kind: string;
  coverage: number;
}

/** [attribute, kind, affected document count] */
export type GapEntry = [string, string, number];

export interface IngestReport {
  accepted: number;
  rejected: [number, string][];
  merged_duplicates: number;
}

export interface EnrichReport {
  docs_updated: number;
  values_written: number;
  unmatched_keys: string[];
}

export interface ResultSet {
  doc_ids: string[];
  total: number;
  origin_query: string;
}

export interface ExploreView {
  path: [string, string][];
  facets: Record<string, [string, number][]>;
  documents: string[];
}

export interface EvaluationRecord {
  degree_of_pertinence: number;
  reasons: string;
  judged_docs: string[];
}

export interface ActivityRecord {
  activity_id: string;
  activity_type: string;
  classification: { axes: string[]; constraint: string | null } | null;
  request_text: string | null;
  note: string | null;
  solution: string[];
  evaluation: EvaluationRecord | null;
}

export interface SessionRecord {
  session_id: string;
  identity: string;
  objective: string;
  parent_id: string | null;
  activities: ActivityRecord[];
  sub_sessions: SessionRecord[];
}

export interface Profile {
  identity: string;
  topic_weights: Record<string, number>;
  attribute_usage: Record<string, number>;
  recommended_history: string[];
}

export interface ProblemRecord {
  problem_id: string;
  object: string;
  signal: string;
  hypotheses: string[];
  cognitive_style: string;
  personality_traits: string[];
  identity: string;
  global_env: string;
  immediate_env: string;
}

export interface Translation {
  attributes: string[];
  unmatched: string[];
}

export interface MartListing {
  name: string;
  dimensions: string[];
  measure: string;
  source: string;
  built: boolean;
  built_at: string | null;
  cell_count: number | null;
}

export interface MartCell {
  key: string[];
  value: number;
}

export interface Mart {
  name: string;
  dimensions: string[];
  measure: string;
  source: string;
  built_at: string;
  cells: MartCell[];
}

export type Degree = 0 | 1 | 2 | 3;

export const DEGREE_LABELS: Record<Degree, string> = {
  0: "not pertinent",
  1: "somewhat",
  2: "pertinent",
  3: "highly pertinent",
};
