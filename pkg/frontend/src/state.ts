import type { Degree } from "./types.js";

export type ViewName = "explore" | "request" | "evaluate" | "problems" | "marts";

export const VIEWS: ViewName[] = ["explore", "request", "evaluate", "problems", "marts"];

/** The three actor roles are view presets, not permissions. */
export const ROLE_PRESETS: Record<string, ViewName> = {
  "decision maker": "marts",
  "information watcher": "explore",
  "end user": "request",
};

/**
 * The displayed solution of the most recent request/exploration activity,
 * plus the evaluation being composed against it.  `pending` may only hold
 * doc ids present in `docIds`; transitions enforce that rather than trusting
 * the DOM.
 */
export interface DisplayedResult {
  activityId: string;
  sessionId: string;
  queryText: string;
  docIds: string[];
  pending: Map<string, Degree>;
  reasons: string;
  evaluated: boolean;
}

export interface WorkbenchState {
  identity: string | null;
  sessionId: string | null;
  subSessionId: string | null;
  view: ViewName;
  explorePath: [string, string][];
  result: DisplayedResult | null;
  martName: string | null;
  problemId: string | null;
}

export function initialState(): WorkbenchState {
  return {
    identity: null,
    sessionId: null,
    subSessionId: null,
    view: "explore",
    explorePath: [],
    result: null,
    martName: null,
    problemId: null,
  };
}

/** The session everything user-scoped attaches to (sub-session when open). */
export function activeSessionId(state: WorkbenchState): string | null {
  return state.subSessionId ?? state.sessionId;
}

export function startSession(
  state: WorkbenchState,
  identity: string,
  sessionId: string,
): WorkbenchState {
  // A new identity invalidates everything scoped to the old one.
  const cleared = identity === state.identity ? state : resetSessionState(state);
  return { ...cleared, identity, sessionId, subSessionId: null };
}

/** Switching identity clears session state; the session form gates re-entry. */
export function resetSessionState(state: WorkbenchState): WorkbenchState {
  return {
    ...initialState(),
    view: state.view,
    martName: state.martName,
  };
}

export function openSubsession(state: WorkbenchState, subSessionId: string): WorkbenchState {
  if (state.sessionId === null) return state;
  return { ...state, subSessionId };
}

export function closeSubsession(state: WorkbenchState): WorkbenchState {
  return { ...state, subSessionId: null };
}

export function setView(state: WorkbenchState, view: ViewName): WorkbenchState {
  return { ...state, view };
}

export function setExplorePath(
  state: WorkbenchState,
  path: [string, string][],
): WorkbenchState {
  return { ...state, explorePath: path };
}

export function setResult(
  state: WorkbenchState,
  result: { activityId: string; sessionId: string; queryText: string; docIds: string[] },
): WorkbenchState {
  // Fresh solution, fresh evaluation: stale selections must not carry over.
  return {
    ...state,
    result: {
      ...result,
      docIds: [...result.docIds],
      pending: new Map(),
      reasons: "",
      evaluated: false,
    },
  };
}

export function setResultOrder(state: WorkbenchState, docIds: string[]): WorkbenchState {
  if (state.result === null) return state;
  return { ...state, result: { ...state.result, docIds: [...docIds] } };
}

/**
 * Select or clear a pertinence degree for one displayed doc.  Ignored for
 * docs outside the solution: the control is absent in the UI, and this guard
 * keeps the invariant even against synthetic events.
 */
export function setPendingDegree(
  state: WorkbenchState,
  docId: string,
  degree: Degree | null,
): WorkbenchState {
  const result = state.result;
  if (result === null || result.evaluated || !result.docIds.includes(docId)) {
    return state;
  }
  const pending = new Map(result.pending);
  if (degree === null) pending.delete(docId);
  else pending.set(docId, degree);
  return { ...state, result: { ...result, pending } };
}

export function setReasons(state: WorkbenchState, reasons: string): WorkbenchState {
  if (state.result === null) return state;
  return { ...state, result: { ...state.result, reasons } };
}

export function markEvaluated(state: WorkbenchState): WorkbenchState {
  if (state.result === null) return state;
  return {
    ...state,
    result: { ...state.result, evaluated: true, pending: new Map() },
  };
}

export function selectMart(state: WorkbenchState, martName: string | null): WorkbenchState {
  return { ...state, martName };
}

export function setProblem(state: WorkbenchState, problemId: string | null): WorkbenchState {
  return { ...state, problemId };
}

/**
 * A single degree for the whole evaluation: the server takes one degree per
 * evaluation, so a submission needs every selected doc at the same degree.
 * Returns null when nothing is selected or degrees disagree.
 */
export function evaluationPayload(
  state: WorkbenchState,
): { degree: Degree; judgedDocs: string[]; reasons: string } | null {
  const result = state.result;
  if (result === null || result.evaluated || result.pending.size === 0) return null;
  const degrees = new Set(result.pending.values());
  if (degrees.size !== 1) return null;
  const [degree] = degrees;
  return {
    degree: degree as Degree,
    judgedDocs: [...result.pending.keys()],
    reasons: result.reasons,
  };
}

// -- location-hash persistence ----------------------------------------------
// The client is stateless: a reload re-fetches everything from the server,
// so the hash only needs the pointers (who, which session, which view).

export function stateToHash(state: WorkbenchState): string {
  const params = new URLSearchParams();
  if (state.identity) params.set("i", state.identity);
  if (state.sessionId) params.set("s", state.sessionId);
  if (state.subSessionId) params.set("ss", state.subSessionId);
  params.set("v", state.view);
  if (state.martName) params.set("m", state.martName);
  return params.toString();
}

export interface HashPointers {
  identity: string | null;
  sessionId: string | null;
  subSessionId: string | null;
  view: ViewName;
  martName: string | null;
}

export function hashToPointers(hash: string): HashPointers {
  const params = new URLSearchParams(hash.replace(/^#/, ""));
  const view = params.get("v");
  return {
    identity: params.get("i"),
    sessionId: params.get("s"),
    subSessionId: params.get("ss"),
    view: VIEWS.includes(view as ViewName) ? (view as ViewName) : "explore",
    martName: params.get("m"),
  };
}
