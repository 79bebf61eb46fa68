import { ApiClient, GatewayError, GatewayUnreachable } from "./api.js";
import type { ViewName, WorkbenchState } from "./state.js";
import {
  activeSessionId,
  closeSubsession,
  evaluationPayload,
  hashToPointers,
  initialState,
  markEvaluated,
  openSubsession,
  resetSessionState,
  selectMart,
  setExplorePath,
  setPendingDegree,
  setProblem,
  setReasons,
  setResult,
  setResultOrder,
  setView,
  startSession,
  stateToHash,
} from "./state.js";
import type { Degree, SessionRecord } from "./types.js";
import type { Handlers, ViewData } from "./views.js";
import { render } from "./views.js";

function emptyData(): ViewData {
  return {
    banner: null,
    syntaxError: null,
    exploreView: null,
    queryDraft: "",
    profile: null,
    martList: [],
    selectedMart: null,
    martError: null,
    exportedCsv: null,
    problem: null,
    translation: null,
    objectiveBySession: new Map(),
  };
}

/**
 * Owns the state and the server-fetched view data; every user action is an
 * async method that talks to the gateway, folds the response in, and
 * re-renders.  The client never computes a count or an ordering itself.
 */
export class App {
  state: WorkbenchState = initialState();
  data: ViewData = emptyData();

  constructor(
    readonly root: HTMLElement,
    readonly api: ApiClient,
    readonly syncHash: boolean = true,
  ) {}

  render(): void {
    if (this.syncHash && typeof location !== "undefined") {
      const hash = stateToHash(this.state);
      if (location.hash.replace(/^#/, "") !== hash) location.hash = hash;
    }
    render(this.root, this.state, this.data, this.handlers());
  }

  /** One catch-all: domain errors become the banner, reachability its own. */
  private async guard<T>(work: () => Promise<T>): Promise<T | null> {
    try {
      this.data.banner = null;
      return await work();
    } catch (err) {
      if (err instanceof GatewayUnreachable) {
        this.data.banner = `${err.message}; is the server running?`;
      } else if (err instanceof GatewayError) {
        this.data.banner = err.message;
      } else {
        throw err;
      }
      this.render();
      return null;
    }
  }

  /** Restore identity/session/view from the location hash, server-first. */
  async boot(): Promise<void> {
    const pointers = hashToPointers(
      typeof location !== "undefined" ? location.hash : "",
    );
    this.state = setView(this.state, pointers.view);
    if (pointers.martName) this.state = selectMart(this.state, pointers.martName);
    if (pointers.identity && pointers.sessionId) {
      try {
        const record = await this.api.getSession(pointers.sessionId);
        if (record.identity === pointers.identity) {
          this.state = startSession(this.state, record.identity, record.session_id);
          this.rememberObjectives(record);
          if (pointers.subSessionId) {
            const sub = record.sub_sessions.find(
              (s) => s.session_id === pointers.subSessionId,
            );
            if (sub) {
              this.state = openSubsession(this.state, sub.session_id);
              this.rememberObjectives(sub);
            }
          }
        }
      } catch {
        // stale pointers (wiped store, deleted session): fall back to the form
      }
    }
    this.state = setView(this.state, pointers.view);
    await this.loadViewData(this.state.view);
    this.render();
  }

  private rememberObjectives(record: SessionRecord): void {
    this.data.objectiveBySession.set(record.session_id, record.objective);
    for (const sub of record.sub_sessions) this.rememberObjectives(sub);
  }

  private async loadViewData(view: ViewName): Promise<void> {
    if (this.state.sessionId === null) return;
    if (view === "explore") {
      await this.guard(async () => {
        this.data.exploreView = await this.api.explore(this.state.explorePath);
      });
    } else if (view === "marts") {
      await this.guard(async () => {
        this.data.martList = await this.api.listMarts();
        const name = this.state.martName;
        if (name && this.data.martList.some((m) => m.name === name && m.built)) {
          this.data.selectedMart = await this.api.martCells(name);
        }
      });
    }
  }

  private handlers(): Handlers {
    return {
      startSession: (identity, objective) => void this.doStartSession(identity, objective),
      newSubsession: (objective) => void this.doNewSubsession(objective),
      closeSubsession: () => {
        this.state = closeSubsession(this.state);
        this.render();
      },
      switchIdentity: () => {
        // Clears everything scoped to the identity; form gates re-entry.
        this.state = resetSessionState(this.state);
        this.data = emptyData();
        this.render();
      },
      setView: (view) => void this.doSetView(view),
      drill: (attr, value) => void this.doDrill(attr, value),
      resetPath: (steps) => void this.doResetPath(steps),
      runQuery: (text) => void this.doRunQuery(text),
      setDegree: (docId, degree) => this.doSetDegree(docId, degree),
      setReasons: (reasons) => {
        this.state = setReasons(this.state, reasons);
        // no re-render: typing must not rebuild the textarea under the user
      },
      submitEvaluation: () => void this.doSubmitEvaluation(),
      defineProblem: (body) => void this.doDefineProblem(body),
      selectMart: (name) => void this.doSelectMart(name),
      buildMart: (name) => void this.doBuildMart(name, "build"),
      refreshMart: (name) => void this.doBuildMart(name, "refresh"),
      exportMart: (name) => void this.doExportMart(name),
    };
  }

  async doStartSession(identity: string, objective: string): Promise<void> {
    await this.guard(async () => {
      const sessionId = await this.api.createSession(identity, objective);
      this.state = startSession(this.state, identity, sessionId);
      this.data.objectiveBySession.set(sessionId, objective);
      await this.loadViewData(this.state.view);
      this.render();
    });
  }

  async doNewSubsession(objective: string): Promise<void> {
    const parent = this.state.sessionId;
    if (parent === null) return;
    await this.guard(async () => {
      const subId = await this.api.createSubsession(parent, objective);
      this.state = openSubsession(this.state, subId);
      this.data.objectiveBySession.set(subId, objective);
      this.render();
    });
  }

  async doSetView(view: ViewName): Promise<void> {
    this.state = setView(this.state, view);
    await this.loadViewData(view);
    this.render();
  }

  async doDrill(attr: string, value: string): Promise<void> {
    const path: [string, string][] = [...this.state.explorePath, [attr, value]];
    await this.guard(async () => {
      this.data.exploreView = await this.api.explore(path);
      this.state = setExplorePath(this.state, path);
      this.render();
    });
  }

  async doResetPath(steps: number): Promise<void> {
    const path = this.state.explorePath.slice(0, steps);
    await this.guard(async () => {
      this.data.exploreView = await this.api.explore(path);
      this.state = setExplorePath(this.state, path);
      this.render();
    });
  }

  async doRunQuery(text: string): Promise<void> {
    const sessionId = activeSessionId(this.state);
    if (sessionId === null || this.state.identity === null) return;
    this.data.queryDraft = text;
    this.data.syntaxError = null;
    try {
      this.data.banner = null;
      const result = await this.api.query(text, this.state.identity);
      // The retrieval becomes a session activity so the evaluation has a
      // solution to attach to.
      const activityId = await this.api.createActivity(sessionId, {
        activity_type: "request",
        request_text: text,
        solution: result.doc_ids,
      });
      this.state = setResult(this.state, {
        activityId,
        sessionId,
        queryText: text,
        docIds: result.doc_ids,
      });
      this.render();
    } catch (err) {
      if (err instanceof GatewayError && err.code === "syntax") {
        this.data.syntaxError = { message: err.message, position: err.position };
      } else if (err instanceof GatewayError) {
        this.data.banner = err.message;
      } else if (err instanceof GatewayUnreachable) {
        this.data.banner = `${err.message}; is the server running?`;
      } else {
        throw err;
      }
      this.render();
    }
  }

  doSetDegree(docId: string, degree: Degree | null): void {
    this.state = setPendingDegree(this.state, docId, degree);
    this.render();
  }

  async doSubmitEvaluation(): Promise<void> {
    const payload = evaluationPayload(this.state);
    const result = this.state.result;
    if (payload === null || result === null || this.state.identity === null) return;
    const identity = this.state.identity;
    await this.guard(async () => {
      this.data.profile = await this.api.submitEvaluation(
        result.sessionId,
        result.activityId,
        payload.degree,
        payload.reasons,
        payload.judgedDocs,
      );
      // Re-run the same request so the user sees the feedback take effect.
      const rerun = await this.api.query(result.queryText, identity);
      this.state = markEvaluated(setResultOrder(this.state, rerun.doc_ids));
      this.render();
    });
  }

  async doDefineProblem(body: {
    object: string;
    signal: string;
    hypotheses: string[];
    cognitive_style: string;
    global_env: string;
    immediate_env: string;
  }): Promise<void> {
    const identity = this.state.identity;
    if (identity === null) return;
    await this.guard(async () => {
      const problemId = await this.api.createProblem({ identity, ...body });
      this.state = setProblem(this.state, problemId);
      this.data.problem = await this.api.getProblem(problemId);
      this.data.translation = await this.api.translation(problemId);
      this.render();
    });
  }

  async doSelectMart(name: string): Promise<void> {
    this.state = selectMart(this.state, name);
    this.data.exportedCsv = null;
    this.data.martError = null;
    await this.guard(async () => {
      this.data.selectedMart = await this.api.martCells(name);
      this.render();
    });
  }

  async doBuildMart(name: string, kind: "build" | "refresh"): Promise<void> {
    this.data.martError = null;
    try {
      this.data.banner = null;
      const mart = kind === "build"
        ? await this.api.buildMart(name)
        : await this.api.refreshMart(name);
      this.state = selectMart(this.state, name);
      this.data.selectedMart = mart;
      this.data.martList = await this.api.listMarts();
      this.render();
    } catch (err) {
      if (err instanceof GatewayError) {
        // verbatim server message: when team is missing this is the
        // "attribute not in warehouse schema: team" teaching moment
        this.data.martError = err.message;
      } else if (err instanceof GatewayUnreachable) {
        this.data.banner = `${err.message}; is the server running?`;
      } else {
        throw err;
      }
      this.render();
    }
  }

  async doExportMart(name: string): Promise<void> {
    await this.guard(async () => {
      const csv = await this.api.exportMart(name);
      this.data.exportedCsv = csv;
      try {
        // real browsers get a download; environments without object URLs
        // still show the pre block
        const blob = new Blob([csv], { type: "text/csv" });
        const url = URL.createObjectURL(blob);
        const a = document.createElement("a");
        a.href = url;
        a.download = `${name}.csv`;
        a.click();
        URL.revokeObjectURL(url);
      } catch {
        // no download support; the rendered CSV block is the fallback
      }
      this.render();
    });
  }
}

export function mount(root: HTMLElement, base = "/api"): App {
  const app = new App(root, new ApiClient(base));
  void app.boot();
  return app;
}

declare global {
  interface Window {
    workbench?: App;
  }
}

// Browser entry: <div id="app" data-api-base="/api"></div>
if (typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root) {
    window.workbench = mount(root, root.dataset["apiBase"] ?? "/api");
  }
}
