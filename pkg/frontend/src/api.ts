import type {
  ApiErrorBody,
  EnrichReport,
  ExploreView,
  GapEntry,
  Health,
  IngestReport,
  Mart,
  MartListing,
  Profile,
  ProblemRecord,
  ResultSet,
  SchemaAttribute,
  SessionRecord,
  Translation,
} from "./types.js";

/** A non-2xx gateway response, carrying the server's error envelope. */
export class GatewayError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly detail: Record<string, unknown> | null = null,
  ) {
    super(message);
    this.name = "GatewayError";
  }

  /** Character offset for syntax errors, when the server reported one. */
  get position(): number | null {
    const pos = this.detail?.["position"];
    return typeof pos === "number" ? pos : null;
  }
}

/** The gateway could not be reached at all (server down, wrong base URL). */
export class GatewayUnreachable extends Error {
  constructor(base: string, cause: unknown) {
    super(`gateway unreachable at ${base}`);
    this.name = "GatewayUnreachable";
    this.cause = cause;
  }
}

async function parseError(res: Response): Promise<GatewayError> {
  let body: ApiErrorBody | null = null;
  try {
    body = (await res.json()) as ApiErrorBody;
  } catch {
    // non-JSON error body; fall through to a generic envelope
  }
  if (body && typeof body.message === "string") {
    return new GatewayError(res.status, body.code, body.message, body.detail);
  }
  return new GatewayError(res.status, "internal", `HTTP ${res.status}`);
}

/**
 * Typed client for every gateway endpoint the workbench uses.  One method
 * per route; no response is reshaped beyond JSON decoding, so every number
 * shown in the UI is traceable to a single call here.
 */
export class ApiClient {
  constructor(readonly base: string = "/api") {}

  private url(path: string): string {
    return this.base.replace(/\/$/, "") + path;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let res: Response;
    try {
      res = await fetch(this.url(path), init);
    } catch (cause) {
      throw new GatewayUnreachable(this.base, cause);
    }
    if (!res.ok) throw await parseError(res);
    return (await res.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  health(): Promise<Health> {
    return this.request("/health");
  }

  schema(): Promise<SchemaAttribute[]> {
    return this.request<{ attributes: SchemaAttribute[] }>("/schema").then(
      (r) => r.attributes,
    );
  }

  gaps(require: string[]): Promise<GapEntry[]> {
    const q = encodeURIComponent(require.join(","));
    return this.request<{ entries: GapEntry[] }>(`/gaps?require=${q}`).then(
      (r) => r.entries,
    );
  }

  ingest(records: object[], filter?: object): Promise<IngestReport> {
    return this.post("/documents:ingest", { records, filter: filter ?? null });
  }

  enrich(join: string, target: string, records: Record<string, string>, name = "workbench-enrichment"): Promise<EnrichReport> {
    return this.post("/enrich", { join, target, records, name });
  }

  query(text: string, identity?: string): Promise<ResultSet> {
    return this.post("/queries", { text, identity: identity ?? null });
  }

  explore(path: [string, string][]): Promise<ExploreView> {
    const raw = path.map(([a, v]) => `${a}=${v}`).join(",");
    return this.request(`/explore?path=${encodeURIComponent(raw)}`);
  }

  createSession(identity: string, objective: string): Promise<string> {
    return this.post<{ session_id: string }>("/sessions", { identity, objective }).then(
      (r) => r.session_id,
    );
  }

  listSessions(): Promise<SessionRecord[]> {
    return this.request<{ sessions: SessionRecord[] }>("/sessions").then(
      (r) => r.sessions,
    );
  }

  getSession(sessionId: string): Promise<SessionRecord> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}`);
  }

  createSubsession(sessionId: string, objective: string): Promise<string> {
    return this.post<{ session_id: string }>(
      `/sessions/${encodeURIComponent(sessionId)}/subsessions`,
      { objective },
    ).then((r) => r.session_id);
  }

  createActivity(
    sessionId: string,
    body: {
      activity_type: string;
      request_text?: string;
      note?: string;
      solution?: string[];
      classification?: { axes: string[]; constraint?: string | null };
    },
  ): Promise<string> {
    return this.post<{ activity_id: string }>(
      `/sessions/${encodeURIComponent(sessionId)}/activities`,
      body,
    ).then((r) => r.activity_id);
  }

  submitEvaluation(
    sessionId: string,
    activityId: string,
    degree: number,
    reasons: string,
    judgedDocs: string[],
  ): Promise<Profile> {
    return this.post(
      `/sessions/${encodeURIComponent(sessionId)}/activities/${encodeURIComponent(activityId)}/evaluation`,
      { degree, reasons, judged_docs: judgedDocs },
    );
  }

  getProfile(identity: string): Promise<Profile> {
    return this.request(`/profiles/${encodeURIComponent(identity)}`);
  }

  createProblem(body: {
    identity: string;
    object: string;
    signal: string;
    hypotheses: string[];
    cognitive_style?: string;
    personality_traits?: string[];
    global_env?: string;
    immediate_env?: string;
  }): Promise<string> {
    return this.post<{ problem_id: string }>("/problems", body).then(
      (r) => r.problem_id,
    );
  }

  getProblem(problemId: string): Promise<ProblemRecord> {
    return this.request(`/problems/${encodeURIComponent(problemId)}`);
  }

  translation(problemId: string): Promise<Translation> {
    return this.request(`/problems/${encodeURIComponent(problemId)}/translation`);
  }

  listMarts(): Promise<MartListing[]> {
    return this.request<{ marts: MartListing[] }>("/marts").then((r) => r.marts);
  }

  buildMart(name: string): Promise<Mart> {
    return this.post(`/marts/${encodeURIComponent(name)}:build`, {});
  }

  refreshMart(name: string): Promise<Mart> {
    return this.post(`/marts/${encodeURIComponent(name)}:refresh`, {});
  }

  martCells(name: string): Promise<Mart> {
    return this.request(`/marts/${encodeURIComponent(name)}/cells`);
  }

  /** Raw CSV as the gateway serialized it; the UI must not reshape it. */
  async exportMart(name: string): Promise<string> {
    let res: Response;
    try {
      res = await fetch(this.url(`/marts/${encodeURIComponent(name)}/export`));
    } catch (cause) {
      throw new GatewayUnreachable(this.base, cause);
    }
    if (!res.ok) throw await parseError(res);
    return res.text();
  }

  recommend(identity: string, n: number): Promise<string[]> {
    return this.post<{ doc_ids: string[] }>("/recommendations", { identity, n }).then(
      (r) => r.doc_ids,
    );
  }

  recordAccess(identity: string, docId: string, year: number, kind = "consult"): Promise<void> {
    return this.post<unknown>("/access-events", {
      identity,
      doc_id: docId,
      year,
      kind,
    }).then(() => undefined);
  }
}
