/**
 * Filter fidelity: the slider's visible set must equal the server-side
 * filter result exactly, for 10 random thresholds plus both endpoints.
 */

import { afterAll, beforeAll, expect, test } from "vitest";

import { boot, type App } from "../src/main.js";
import { Client } from "../src/api.js";
import { mulberry32 } from "../src/layout.js";
import { startServer, makeSession, blockGraphPayload, type TestServer } from "./server.js";

let server: TestServer;
let app: App;
let client: Client;

beforeAll(async () => {
  server = await startServer();
  // ssl off keeps certainties spread out instead of frozen at 1.0
  const payload = { ...blockGraphPayload(48, 11), hyperparams: { ssl_enabled: false } };
  const sid = await makeSession(server.base, payload);
  client = new Client(server.base, sid);
  document.body.innerHTML = `<div id="app"></div>`;
  app = await boot(document.getElementById("app")!, {
    base: server.base,
    sid,
    channel: "poll",
    pollMs: 200,
  });
});

afterAll(() => {
  app?.stop();
  server?.stop();
});

function renderedIds(): number[] {
  return [...app.renderer.visibleIds()].sort((a, b) => a - b);
}

async function serverIds(cutoff: number): Promise<number[]> {
  const view = await client.getGraph({ certainty_le: cutoff });
  return view.nodes.map((nd) => nd.id).sort((a, b) => a - b);
}

test("visible set equals the server filter for 10 random thresholds", async () => {
  const rng = mulberry32(2024);
  // 2-decimal grid: exactly what the slider itself can take
  const thresholds = Array.from({ length: 10 }, () => Math.round(100 * rng()) / 100);
  let sawProper = false;

  for (const t of thresholds) {
    app.filter.set(t);
    expect(app.filter.cutoff).toBe(t);
    const shown = renderedIds();
    const want = await serverIds(t);
    expect(shown, `threshold ${t}`).toEqual(want);
    if (want.length > 0 && want.length < app.store.snap!.nodes.size) sawProper = true;
  }
  // the draw must actually exercise the filter, not vacuously pass
  expect(sawProper).toBe(true);
});

test("cutoff 1 shows everything, cutoff 0 only exactly-uncertain nodes", async () => {
  app.filter.set(1);
  expect(renderedIds()).toEqual(await serverIds(1));
  expect(renderedIds().length).toBe(app.store.snap!.nodes.size);

  app.filter.set(0);
  expect(renderedIds()).toEqual(await serverIds(0));
});

test("filtered edges only join visible endpoints", async () => {
  app.filter.set(0.6);
  const visible = app.renderer.visibleIds();
  const serverView = await client.getGraph({ certainty_le: 0.6 });

  let shownEdges = 0;
  for (const line of document.querySelectorAll<SVGLineElement>("line.edge")) {
    if (line.getAttribute("display") !== "none") shownEdges += 1;
  }
  expect(shownEdges).toBe(serverView.edges.length);
  for (const [u, v] of serverView.edges) {
    expect(visible.has(u)).toBe(true);
    expect(visible.has(v)).toBe(true);
  }
});
