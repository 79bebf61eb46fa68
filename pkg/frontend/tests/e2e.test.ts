// End-to-end: drives the workbench DOM against a real gateway process with
// the fixture corpus.  Every displayed number is checked against a direct
// API call.  The DOM comes from jsdom constructed by hand so node's fetch
// stays in place for cross-origin calls.

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { JSDOM } from "jsdom";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";

const REPO_ROOT = resolve(__dirname, "..", "..");
const FIXTURE = join(REPO_ROOT, "fixtures", "corpus_f5.jsonl");
const PORT = 8700 + (process.pid % 180);
const BASE = `http://127.0.0.1:${PORT}`;

let proc: ChildProcess | null = null;
let storeDir: string;
let gatewayUp = false;
const direct = new ApiClient(BASE);

async function waitForHealth(timeoutMs = 20000): Promise<boolean> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const health = await direct.health();
      if (health.status === "ok") return true;
    } catch {
      await new Promise((r) => setTimeout(r, 150));
    }
  }
  return false;
}

async function waitFor<T>(probe: () => T | null | undefined | false, what: string, timeoutMs = 8000): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const got = probe();
    if (got) return got;
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await new Promise((r) => setTimeout(r, 25));
  }
}

beforeAll(async () => {
  storeDir = mkdtempSync(join(tmpdir(), "workbench-e2e-"));
  proc = spawn(
    "python3",
    ["-m", "docmart", "--store", join(storeDir, "store"), "serve", "--port", String(PORT), "--host", "127.0.0.1"],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  gatewayUp = await waitForHealth();
  if (!gatewayUp) return; // tests below skip with a clear message

  const records = readFileSync(FIXTURE, "utf8")
    .split("\n")
    .filter((line) => line.trim())
    .map((line) => JSON.parse(line) as object);
  const report = await direct.ingest(records);
  expect(report.accepted).toBe(4);
  expect(report.merged_duplicates).toBe(1);
}, 30000);

afterAll(() => {
  proc?.kill();
  if (storeDir) rmSync(storeDir, { recursive: true, force: true });
});

function domSetup() {
  const dom = new JSDOM("<!doctype html><html><body></body></html>", {
    url: "http://localhost/",
  });
  const g = globalThis as Record<string, unknown>;
  g["window"] = dom.window;
  g["document"] = dom.window.document;
  g["location"] = dom.window.location;
  g["SVGElement"] = dom.window.SVGElement;
  return dom;
}

function click(root: ParentNode, selector: string) {
  const el = root.querySelector(selector) as HTMLElement | null;
  if (!el) throw new Error(`no element for ${selector}`);
  el.click();
}

function texts(root: ParentNode, selector: string): string[] {
  return [...root.querySelectorAll(selector)].map((el) => el.textContent ?? "");
}

describe("workbench against a live gateway", () => {
  it("runs the whole session: explore, query, evaluate, reorder, mart chart", async () => {
    if (!gatewayUp) {
      expect.fail("gateway did not come up; is the docmart package installed?");
    }
    const dom = domSetup();
    const { App } = await import("../src/main.js");
    const root = dom.window.document.createElement("div");
    dom.window.document.body.append(root);
    const app = new App(root, new ApiClient(BASE));
    await app.boot();

    // fresh load: the start form gates everything, no view is reachable
    expect(root.querySelector('[data-role="start-session"]')).toBeTruthy();
    expect(root.querySelector("main.view")).toBeNull();

    (root.querySelector('[data-role="identity"]') as HTMLInputElement).value = "dupont";
    (root.querySelector('[data-role="objective"]') as HTMLInputElement).value =
      "survey warehouse work";
    click(root, '[data-role="start-session"]');
    await waitFor(() => root.querySelector("nav"), "session to start");

    const sessions = await direct.listSessions();
    expect(sessions.some((s) => s.identity === "dupont")).toBe(true);

    // explore: rendered facet counts are exactly the server's
    await waitFor(() => root.querySelector(".facets"), "facets");
    const rootView = await direct.explore([]);
    for (const [attr, pairs] of Object.entries(rootView.facets)) {
      for (const [value, count] of pairs) {
        const item = await waitFor(
          () =>
            [...root.querySelectorAll(`ul[data-facet="${attr}"] li`)].find(
              (li) => li.querySelector("button")?.textContent === value,
            ),
          `facet ${attr}=${value}`,
        );
        expect(item.querySelector(".count")?.getAttribute("data-count")).toBe(String(count));
      }
    }

    // drill year=2003: two documents, same ids the API returns
    const yearButton = [...root.querySelectorAll('ul[data-facet="year"] li button')].find(
      (b) => b.textContent === "2003",
    ) as HTMLElement;
    yearButton.click();
    await waitFor(
      () => root.querySelectorAll(".documents li").length === 2,
      "drill to year=2003",
    );
    const drilled = await direct.explore([["year", "2003"]]);
    expect(texts(root, ".documents li")).toEqual(drilled.documents);

    // request: a malformed query surfaces the server's syntax error inline
    click(root, 'button[data-view="request"]');
    await waitFor(() => root.querySelector('[data-role="query-text"]'), "query box");
    const queryInput = root.querySelector('[data-role="query-text"]') as HTMLInputElement;
    queryInput.value = "(author:martin";
    click(root, '[data-role="run-query"]');
    const syntaxLine = await waitFor(
      () => root.querySelector(".syntax-error"),
      "syntax error line",
    );
    expect(syntaxLine.textContent).toMatch(/position/);

    // and a good one renders the server's ordering
    const queryText = "year:2003 OR year:2004";
    (root.querySelector('[data-role="query-text"]') as HTMLInputElement).value = queryText;
    click(root, '[data-role="run-query"]');
    await waitFor(() => root.querySelector('[data-role="results"]'), "results");
    const before = await direct.query(queryText, "dupont");
    expect(texts(root, '[data-role="results"] li .doc')).toEqual(before.doc_ids);
    expect(before.doc_ids).toEqual(["D4", "D2", "D3"]); // canonical: no profile yet

    // no degree control ever exists for a doc outside the solution
    expect(root.querySelector('[data-role="results"] li[data-doc="D1"]')).toBeNull();

    // degree-3 on D3 with reasons, submit, observe the personalized rerun
    click(root, 'li[data-doc="D3"] button[data-degree="3"]');
    await waitFor(
      () => root.querySelector('li[data-doc="D3"] button[data-degree="3"].picked'),
      "degree picked",
    );
    const reasons = root.querySelector('[data-role="reasons"]') as HTMLTextAreaElement;
    reasons.value = "exactly the warehouse design angle";
    reasons.dispatchEvent(new dom.window.Event("input"));
    click(root, '[data-role="submit-evaluation"]');
    await waitFor(() => root.querySelector(".evaluated"), "evaluation recorded");

    const after = await direct.query(queryText, "dupont");
    expect(texts(root, '[data-role="results"] li .doc')).toEqual(after.doc_ids);
    expect(after.doc_ids).toEqual(["D3", "D4", "D2"]); // judged doc moved up
    expect(root.querySelector('[data-role="profile"]')?.textContent).toContain("databases: 3");

    // marts: building team-evolution before enrichment is the teaching moment
    click(root, 'button[data-view="marts"]');
    await waitFor(() => root.querySelectorAll("tr[data-mart]").length === 3, "mart list");
    click(root, '[data-role="build-team-evolution"]');
    const banner = await waitFor(() => root.querySelector(".mart-error"), "build error banner");
    expect(banner.textContent).toContain("attribute not in warehouse schema: team");

    // the directory join closes the gap (a gateway op, done over the API)
    await direct.enrich("authors", "team", {
      martin: "SITE",
      dupont: "SITE",
      bernard: "ORPAILLEUR",
    });
    click(root, '[data-role="build-team-evolution"]');
    const cellsTable = await waitFor(() => root.querySelector('[data-role="cells"]'), "cells");

    const mart = await direct.martCells("team-evolution");
    const rendered = [...cellsTable.querySelectorAll("tbody tr")].map((tr) => [
      ...texts(tr, "td"),
    ]);
    expect(rendered).toEqual(mart.cells.map((c) => [...c.key, String(c.value)]));
    expect(rendered).toEqual([
      ["ORPAILLEUR", "2004", "1"],
      ["SITE", "2002", "1"],
      ["SITE", "2003", "2"],
    ]);

    // chart: one series per team
    const seriesLabels = [...root.querySelectorAll("svg g[data-series]")].map((g) =>
      g.getAttribute("data-series"),
    );
    expect(seriesLabels).toEqual(["ORPAILLEUR", "SITE"]);

    // export is the gateway CSV byte for byte
    click(root, '[data-role="export"]');
    const pre = await waitFor(() => root.querySelector('[data-role="csv"]'), "exported csv");
    const exported = await direct.exportMart("team-evolution");
    expect(pre.textContent).toBe(exported);
    expect(exported).toBe("team,year,value\nORPAILLEUR,2004,1\nSITE,2002,1\nSITE,2003,2\n");
  }, 60000);

  it("restores identity and session from the hash by re-fetching the server", async () => {
    if (!gatewayUp) {
      expect.fail("gateway did not come up; is the docmart package installed?");
    }
    const dom = domSetup();
    const { App } = await import("../src/main.js");

    const sessionId = await direct.createSession("martin", "come back later");
    dom.window.location.hash = `i=martin&s=${sessionId}&v=explore`;

    const root = dom.window.document.createElement("div");
    dom.window.document.body.append(root);
    const app = new App(root, new ApiClient(BASE));
    await app.boot();

    // no form: the session came back from the server
    expect(root.querySelector('[data-role="start-session"]')).toBeNull();
    expect(root.querySelector(".who")?.getAttribute("data-identity")).toBe("martin");
    expect(root.querySelector(".who")?.textContent).toContain(sessionId);
    expect(root.querySelector(".facets")).toBeTruthy();
  }, 30000);

  it("nests a sub-session under the active session on the server", async () => {
    if (!gatewayUp) {
      expect.fail("gateway did not come up; is the docmart package installed?");
    }
    const dom = domSetup();
    const { App } = await import("../src/main.js");
    const root = dom.window.document.createElement("div");
    dom.window.document.body.append(root);
    const app = new App(root, new ApiClient(BASE));
    await app.boot();

    (root.querySelector('[data-role="identity"]') as HTMLInputElement).value = "bernard";
    (root.querySelector('[data-role="objective"]') as HTMLInputElement).value = "watch intelligence";
    click(root, '[data-role="start-session"]');
    await waitFor(() => root.querySelector("nav"), "session start");
    const parentId = app.state.sessionId!;

    (root.querySelector('[data-role="subsession-objective"]') as HTMLInputElement).value =
      "narrow to 2004";
    click(root, '[data-role="new-subsession"]');
    await waitFor(() => root.querySelector('[data-role="close-subsession"]'), "sub-session open");
    const subId = app.state.subSessionId!;

    // server truth: nested under the parent, never top-level
    const record = await direct.getSession(parentId);
    expect(record.sub_sessions.map((s) => s.session_id)).toContain(subId);
    const top = await direct.listSessions();
    expect(top.some((s) => s.session_id === subId)).toBe(false);

    click(root, '[data-role="close-subsession"]');
    await waitFor(() => root.querySelector('[data-role="new-subsession"]'), "back to parent");
  }, 30000);
});
