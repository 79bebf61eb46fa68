import { chartData, renderChart } from "./chart.js";
import type { ViewName, WorkbenchState } from "./state.js";
import { ROLE_PRESETS, VIEWS, evaluationPayload } from "./state.js";
import type {
  Degree,
  ExploreView,
  Mart,
  MartListing,
  Profile,
  ProblemRecord,
  Translation,
} from "./types.js";
import { DEGREE_LABELS } from "./types.js";

// -- tiny DOM helpers ---------------------------------------------------------

type Child = Node | string | null | undefined;

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    if (k === "class") node.className = v;
    else node.setAttribute(k, v);
  }
  for (const child of children) {
    if (child === null || child === undefined) continue;
    node.append(child);
  }
  return node;
}

function button(label: string, onClick: () => void, attrs: Record<string, string> = {}) {
  const b = el("button", { type: "button", ...attrs }, label);
  b.addEventListener("click", onClick);
  return b;
}

// -- handler surface the app wires in -----------------------------------------

export interface Handlers {
  startSession(identity: string, objective: string): void;
  newSubsession(objective: string): void;
  closeSubsession(): void;
  switchIdentity(): void;
  setView(view: ViewName): void;
  drill(attr: string, value: string): void;
  resetPath(steps: number): void;
  runQuery(text: string): void;
  setDegree(docId: string, degree: Degree | null): void;
  setReasons(reasons: string): void;
  submitEvaluation(): void;
  defineProblem(body: {
    object: string;
    signal: string;
    hypotheses: string[];
    cognitive_style: string;
    global_env: string;
    immediate_env: string;
  }): void;
  selectMart(name: string): void;
  buildMart(name: string): void;
  refreshMart(name: string): void;
  exportMart(name: string): void;
}

/** Everything fetched from the gateway that the current render shows. */
export interface ViewData {
  banner: string | null;
  syntaxError: { message: string; position: number | null } | null;
  exploreView: ExploreView | null;
  queryDraft: string;
  profile: Profile | null;
  martList: MartListing[];
  selectedMart: Mart | null;
  martError: string | null;
  exportedCsv: string | null;
  problem: ProblemRecord | null;
  translation: Translation | null;
  objectiveBySession: Map<string, string>;
}

// -- top-level render ----------------------------------------------------------

export function render(
  root: HTMLElement,
  state: WorkbenchState,
  data: ViewData,
  handlers: Handlers,
): void {
  root.textContent = "";
  root.append(header(state, data, handlers));
  if (data.banner) {
    root.append(el("div", { class: "banner", role: "alert" }, data.banner));
  }
  // No session, no retrieval: the start form is the only thing offered.
  if (state.sessionId === null || state.identity === null) {
    root.append(sessionForm(handlers));
    return;
  }
  root.append(nav(state, handlers));
  const body = el("main", { class: "view" });
  switch (state.view) {
    case "explore":
      body.append(exploreView(data, handlers));
      break;
    case "request":
      body.append(requestView(state, data, handlers));
      break;
    case "evaluate":
      body.append(evaluatePanel(state, data, handlers, true));
      break;
    case "problems":
      body.append(problemsView(data, handlers));
      break;
    case "marts":
      body.append(martsView(data, handlers));
      break;
  }
  root.append(body);
}

function header(state: WorkbenchState, data: ViewData, handlers: Handlers) {
  const h = el("header", {},
    el("h1", {}, "workbench"),
  );
  if (state.identity !== null && state.sessionId !== null) {
    const objective = data.objectiveBySession.get(state.subSessionId ?? state.sessionId);
    h.append(
      el("span", { class: "who", "data-identity": state.identity },
        `${state.identity} · ${state.subSessionId ?? state.sessionId}`,
        objective ? ` · ${objective}` : null,
      ),
      button("switch identity", () => handlers.switchIdentity(), { class: "switch" }),
    );
    const rolePick = el("select", { class: "role", title: "role preset" });
    rolePick.append(el("option", { value: "" }, "view as..."));
    for (const role of Object.keys(ROLE_PRESETS)) {
      rolePick.append(el("option", { value: role }, role));
    }
    rolePick.addEventListener("change", () => {
      const preset = ROLE_PRESETS[rolePick.value];
      if (preset) handlers.setView(preset);
    });
    h.append(rolePick);
  }
  return h;
}

function nav(state: WorkbenchState, handlers: Handlers) {
  const bar = el("nav", {});
  for (const view of VIEWS) {
    bar.append(
      button(view, () => handlers.setView(view), {
        class: state.view === view ? "tab active" : "tab",
        "data-view": view,
      }),
    );
  }
  const subControls = el("span", { class: "subsession" });
  if (state.subSessionId === null) {
    const objectiveInput = el("input", {
      placeholder: "sub-session objective",
      "data-role": "subsession-objective",
    });
    subControls.append(
      objectiveInput,
      button("new sub-session", () => {
        if (objectiveInput.value.trim()) handlers.newSubsession(objectiveInput.value.trim());
      }, { "data-role": "new-subsession" }),
    );
  } else {
    subControls.append(
      button("back to parent session", () => handlers.closeSubsession(), {
        "data-role": "close-subsession",
      }),
    );
  }
  bar.append(subControls);
  return bar;
}

function sessionForm(handlers: Handlers) {
  const identity = el("input", { placeholder: "identity", "data-role": "identity" });
  const objective = el("input", { placeholder: "objective", "data-role": "objective" });
  const start = button("start session", () => {
    if (identity.value.trim() && objective.value.trim()) {
      handlers.startSession(identity.value.trim(), objective.value.trim());
    }
  }, { "data-role": "start-session" });
  return el("form", { class: "session-form" },
    el("h2", {}, "start a session"),
    el("p", {}, "who is working, and toward what objective?"),
    identity, objective, start,
  );
}

// -- explore -------------------------------------------------------------------

function exploreView(data: ViewData, handlers: Handlers) {
  const view = data.exploreView;
  const box = el("section", { class: "explore" });
  if (view === null) {
    box.append(el("p", {}, "loading facets..."));
    return box;
  }
  const crumb = el("p", { class: "path" });
  crumb.append(button("all documents", () => handlers.resetPath(0)));
  view.path.forEach(([attr, value], i) => {
    crumb.append(" → ", button(`${attr}=${value}`, () => handlers.resetPath(i + 1)));
  });
  box.append(crumb);

  const facets = el("div", { class: "facets" });
  for (const [attr, pairs] of Object.entries(view.facets)) {
    const list = el("ul", { "data-facet": attr });
    for (const [value, count] of pairs) {
      const item = el("li", {});
      item.append(
        button(value, () => handlers.drill(attr, value), { "data-value": value }),
        el("span", { class: "count", "data-count": String(count) }, ` (${count})`),
      );
      list.append(item);
    }
    facets.append(el("div", { class: "facet" }, el("h3", {}, attr), list));
  }
  box.append(facets);

  const docs = el("ol", { class: "documents" });
  for (const docId of view.documents) {
    docs.append(el("li", { "data-doc": docId }, docId));
  }
  box.append(
    el("h3", {}, `documents (${view.documents.length})`),
    docs,
  );
  return box;
}

// -- request + evaluation --------------------------------------------------------

function requestView(state: WorkbenchState, data: ViewData, handlers: Handlers) {
  const box = el("section", { class: "request" });
  const input = el("input", {
    class: "query",
    placeholder: 'e.g. author:martin AND (year:2003 OR year:2004)',
    "data-role": "query-text",
    value: data.queryDraft,
  });
  const run = button("run", () => handlers.runQuery(input.value), { "data-role": "run-query" });
  box.append(el("div", { class: "querybar" }, input, run));

  if (data.syntaxError) {
    const { message, position } = data.syntaxError;
    box.append(el("p", { class: "syntax-error", "data-position": String(position ?? "") },
      position === null ? message : `${message} (position ${position})`,
    ));
  }
  box.append(evaluatePanel(state, data, handlers, false));
  return box;
}

function evaluatePanel(
  state: WorkbenchState,
  data: ViewData,
  handlers: Handlers,
  standalone: boolean,
) {
  const box = el("section", { class: "evaluate" });
  const result = state.result;
  if (result === null) {
    if (standalone) box.append(el("p", {}, "run a request first; its solution is what you judge."));
    return box;
  }
  box.append(el("p", { class: "origin" },
    `solution of ${result.queryText} — ${result.docIds.length} documents`,
  ));
  const list = el("ol", { class: "results", "data-role": "results" });
  for (const docId of result.docIds) {
    const item = el("li", { "data-doc": docId }, el("span", { class: "doc" }, docId));
    // 0-3 as four labeled buttons; outside-solution docs never get controls.
    const degreeBox = el("span", { class: "degrees" });
    for (const degree of [0, 1, 2, 3] as Degree[]) {
      const picked = result.pending.get(docId) === degree;
      degreeBox.append(button(
        `${degree} ${DEGREE_LABELS[degree]}`,
        () => handlers.setDegree(docId, picked ? null : degree),
        {
          class: picked ? "degree picked" : "degree",
          "data-degree": String(degree),
          ...(result.evaluated ? { disabled: "disabled" } : {}),
        },
      ));
    }
    item.append(degreeBox);
    list.append(item);
  }
  box.append(list);

  const reasons = el("textarea", {
    placeholder: "reasons for this judgement",
    "data-role": "reasons",
  });
  reasons.value = result.reasons;
  reasons.addEventListener("input", () => handlers.setReasons(reasons.value));

  const payload = evaluationPayload(state);
  const submit = button("submit evaluation", () => handlers.submitEvaluation(), {
    "data-role": "submit-evaluation",
    ...(payload === null ? { disabled: "disabled" } : {}),
  });
  box.append(el("div", { class: "evalbar" }, reasons, submit));
  if (result.evaluated) {
    box.append(el("p", { class: "evaluated" },
      "evaluation recorded; the ordering above is the fresh personalized run",
    ));
  }
  if (data.profile) {
    const weights = Object.entries(data.profile.topic_weights)
      .map(([topic, w]) => `${topic}: ${w}`)
      .join(", ");
    box.append(el("p", { class: "profile", "data-role": "profile" },
      weights ? `profile weights — ${weights}` : "profile is empty",
    ));
  }
  return box;
}

// -- problems -------------------------------------------------------------------

function problemsView(data: ViewData, handlers: Handlers) {
  const box = el("section", { class: "problems" });
  const object = el("input", { placeholder: "object: what is at stake", "data-role": "problem-object" });
  const signal = el("input", { placeholder: "signal: what triggered this", "data-role": "problem-signal" });
  const hypotheses = el("input", { placeholder: "hypotheses, comma-separated", "data-role": "problem-hypotheses" });
  const style = el("input", { placeholder: "cognitive style (optional)" });
  const globalEnv = el("input", { placeholder: "global environment (optional)" });
  const immediateEnv = el("input", { placeholder: "immediate environment (optional)" });
  const submit = button("define problem", () => {
    handlers.defineProblem({
      object: object.value.trim(),
      signal: signal.value.trim(),
      hypotheses: hypotheses.value.split(",").map((h) => h.trim()).filter(Boolean),
      cognitive_style: style.value.trim(),
      global_env: globalEnv.value.trim(),
      immediate_env: immediateEnv.value.trim(),
    });
  }, { "data-role": "define-problem" });
  box.append(
    el("h3", {}, "decisional problem"),
    object, signal, hypotheses, style, globalEnv, immediateEnv, submit,
  );

  if (data.problem) {
    const p = data.problem;
    box.append(el("div", { class: "problem-card", "data-problem": p.problem_id },
      el("h4", {}, `${p.problem_id} — ${p.object}`),
      el("p", {}, `signal: ${p.signal}`),
      el("p", {}, `hypotheses: ${p.hypotheses.join("; ")}`),
    ));
  }
  if (data.translation) {
    box.append(el("div", { class: "translation", "data-role": "translation" },
      el("p", {}, `warehouse attributes: ${data.translation.attributes.join(", ") || "(none)"}`),
      el("p", {}, `unmatched: ${data.translation.unmatched.join(", ") || "(none)"}`),
    ));
  }
  return box;
}

// -- marts ----------------------------------------------------------------------

function martsView(data: ViewData, handlers: Handlers) {
  const box = el("section", { class: "marts" });
  const table = el("table", { class: "mart-list" },
    el("thead", {}, el("tr", {},
      el("th", {}, "mart"), el("th", {}, "dimensions"), el("th", {}, "source"),
      el("th", {}, "cells"), el("th", {}, ""),
    )),
  );
  const rows = el("tbody", {});
  for (const mart of data.martList) {
    const actions = el("td", {});
    actions.append(button("view", () => handlers.selectMart(mart.name), { "data-role": `view-${mart.name}` }));
    actions.append(
      mart.built
        ? button("refresh", () => handlers.refreshMart(mart.name), { "data-role": `refresh-${mart.name}` })
        : button("build now", () => handlers.buildMart(mart.name), { "data-role": `build-${mart.name}` }),
    );
    rows.append(el("tr", { "data-mart": mart.name },
      el("td", {}, mart.name),
      el("td", {}, mart.dimensions.join(" × ")),
      el("td", {}, mart.source),
      el("td", { "data-role": "cell-count" }, mart.built ? String(mart.cell_count) : "not built"),
      actions,
    ));
  }
  table.append(rows);
  box.append(table);

  if (data.martError) {
    // Surface the gateway's message verbatim; "build now" stays available.
    box.append(el("div", { class: "banner mart-error", role: "alert" }, data.martError));
  }

  const mart = data.selectedMart;
  if (mart) {
    box.append(el("h3", {}, `${mart.name} — ${mart.measure} by ${mart.dimensions.join(", ")}`));
    const cellTable = el("table", { class: "cells", "data-role": "cells" },
      el("thead", {}, el("tr", {},
        ...mart.dimensions.map((d) => el("th", {}, d)),
        el("th", {}, "value"),
      )),
    );
    const body = el("tbody", {});
    for (const cell of mart.cells) {
      body.append(el("tr", { "data-key": cell.key.join("|") },
        ...cell.key.map((k) => el("td", {}, k)),
        el("td", { class: "value" }, String(cell.value)),
      ));
    }
    cellTable.append(body);
    box.append(cellTable);

    const data2 = chartData(mart);
    if (data2) box.append(renderChart(data2));

    box.append(button("export CSV", () => handlers.exportMart(mart.name), { "data-role": "export" }));
    if (data.exportedCsv !== null) {
      box.append(el("pre", { class: "csv", "data-role": "csv" }, data.exportedCsv));
    }
  }
  return box;
}
