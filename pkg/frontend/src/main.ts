/**
 * Application wiring: one session mirror, one canvas, four panels.
 *
 * State flows one way. Server payloads land in the ViewStore, the store
 * notifies, and everything on screen re-renders from it. The only local
 * embellishment is the optimistic overlay for an in-flight label edit,
 * kept outside the store and dropped the moment the authoritative delta
 * arrives, so the mirror itself never diverges from a server version.
 */

import { ApiError, Client, createSession } from "./api.js";
import type { Delta, NodeView } from "./api.js";
import { ViewStore, visibleUnderCutoff } from "./model.js";
import type { Snapshot } from "./model.js";
import { DeltaStream, PollChannel } from "./push.js";
import type { PushHandlers } from "./push.js";
import { ForceLayout } from "./layout.js";
import { GraphRenderer } from "./render.js";
import type { Encodings } from "./render.js";
import {
  DetailPanel,
  FilterPanel,
  HyperPanel,
  LogPanel,
  SelectionPanel,
} from "./panels.js";

export interface AppOptions {
  base: string;
  sid: string;
  layoutSeed?: number;
  /** "sse" streams /events; "poll" loops /deltas (test environments). */
  channel?: "sse" | "poll";
  pollMs?: number;
}

export class App {
  client: Client;
  store = new ViewStore();
  layout: ForceLayout;
  renderer!: GraphRenderer;
  filter!: FilterPanel;
  detail!: DetailPanel;
  selectionPanel!: SelectionPanel;
  hyper!: HyperPanel;
  log!: LogPanel;

  selection = new Set<number>();
  detailNode: number | null = null;
  encodings: Encodings = { color: "class", size: "uncertainty" };
  /** node -> optimistic label while the server round-trip is in flight */
  pending = new Map<number, number | null>();

  private channel: DeltaStream | PollChannel | null = null;
  private resyncing = false;

  constructor(private root: HTMLElement, private opts: AppOptions) {
    this.client = new Client(opts.base, opts.sid);
    this.layout = new ForceLayout(opts.layoutSeed ?? 1);
  }

  async start(): Promise<void> {
    this.buildShell();
    this.store.subscribe((kind, delta) => this.onStore(kind, delta));
    const graph = await this.client.getGraph();
    this.store.replace(graph);
    this.hyper.fill(graph.hyperparams);

    const handlers: PushHandlers = {
      onDelta: (d) => this.ingest(d),
      onReset: () => void this.refetch(),
    };
    if (this.opts.channel === "poll") {
      this.channel = new PollChannel(
        (since) => this.client.deltasSince(since),
        () => this.store.version,
        handlers,
        this.opts.pollMs ?? 250,
      );
    } else {
      this.channel = new DeltaStream(
        (since) => this.client.eventsUrl(since),
        () => this.store.version,
        handlers,
      );
    }
    this.channel.start();
  }

  stop(): void {
    this.channel?.stop();
  }

  // -------------------------------------------------------------- plumbing

  /** Feed a delta from any source; push and POST responses share this. */
  ingest(d: Delta): void {
    const outcome = this.store.apply(d);
    if (outcome === "gap") void this.resync();
  }

  private async resync(): Promise<void> {
    if (this.resyncing) return;
    this.resyncing = true;
    try {
      const backlog = await this.client.deltasSince(this.store.version);
      if (backlog.reset) {
        await this.refetch();
        return;
      }
      for (const d of backlog.deltas) {
        if (this.store.apply(d) === "gap") {
          await this.refetch();
          return;
        }
      }
    } catch {
      await this.refetch();
    } finally {
      this.resyncing = false;
    }
  }

  private async refetch(): Promise<void> {
    const graph = await this.client.getGraph();
    this.store.replace(graph);
  }

  private onStore(kind: "replaced" | "delta", delta?: Delta): void {
    const snap = this.store.snap!;
    if (kind === "replaced") {
      this.pending.clear();
      const ids = [...snap.nodes.keys()];
      const edges = [...snap.edges.values()].map(([u, v]): [number, number] => [u, v]);
      if (this.layout.frozen) {
        const fresh = ids.filter((v) => !this.layout.positions.has(v));
        this.layout.relax(fresh, ids, edges);
      } else {
        this.layout.run(ids, edges);
      }
      this.log.push(`v${snap.version} full view, ${snap.nodes.size} nodes`);
    } else if (delta) {
      for (const nd of delta.nodes) this.pending.delete(nd.id);
      for (const v of delta.removed_nodes) this.pending.delete(v);
      this.layout.drop(delta.removed_nodes);
      const ids = [...snap.nodes.keys()];
      const edges = [...snap.edges.values()].map(([u, v]): [number, number] => [u, v]);
      const fresh = delta.nodes.map((nd) => nd.id)
        .filter((v) => !this.layout.positions.has(v));
      this.layout.relax(fresh, ids, edges);
      const err = delta.error ? ` [${delta.error}]` : "";
      this.log.push(
        `v${delta.version} ${delta.op ?? "full"} recomputed ${delta.recomputed.length}${err}`);
      if (this.detailNode !== null && !snap.nodes.has(this.detailNode)) {
        this.detailNode = null;
      }
      for (const v of [...this.selection]) {
        if (!snap.nodes.has(v)) this.selection.delete(v);
      }
    }
    this.rerender();
  }

  /** A snapshot view with the optimistic label overlay for rendering. */
  private displaySnap(): Snapshot {
    const snap = this.store.snap!;
    if (!this.pending.size) return snap;
    const nodes = new Map(snap.nodes);
    for (const [v, label] of this.pending) {
      const nd = nodes.get(v);
      if (nd) nodes.set(v, { ...nd, label });
    }
    return { ...snap, nodes };
  }

  rerender(): void {
    const snap = this.displaySnap();
    const visible = visibleUnderCutoff(snap, this.filter.cutoff);
    this.renderer.update(snap, this.layout, visible, this.selection, this.encodings);
    this.filter.showCounts(visible.size, snap.nodes.size);
    this.selectionPanel.update([...this.selection].sort((a, b) => a - b));
    if (this.detailNode !== null) {
      const nd = snap.nodes.get(this.detailNode);
      if (nd) this.detail.render(snap, nd);
      else this.detail.renderEmpty();
    } else {
      this.detail.renderEmpty();
    }
  }

  // ------------------------------------------------------------------ acts

  select(ids: number[], additive: boolean): void {
    if (additive) {
      for (const v of ids) {
        if (this.selection.has(v)) this.selection.delete(v);
        else this.selection.add(v);
      }
    } else {
      this.selection = new Set(ids);
    }
    if (ids.length === 1) this.detailNode = ids[0];
    else if (!additive && !ids.length) this.detailNode = null;
    this.rerender();
  }

  /** Optimistic label edit; the pushed delta reconciles or refetch reverts. */
  correctLabel(node: number, label: number | null): void {
    this.pending.set(node, label);
    this.rerender();
    this.client.setLabel(node, label).then(
      (d) => this.ingest(d),
      (err) => {
        this.pending.delete(node);
        this.log.push(`label edit rejected: ${err instanceof ApiError ? err.message : err}`);
        this.rerender();
      },
    );
  }

  async fitLocalModel(nodes: number[]): Promise<void> {
    this.selectionPanel.showPending();
    try {
      const rep = await this.client.localModel(nodes);
      this.selectionPanel.showReport(this.store.snap!, rep);
    } catch (err) {
      this.selectionPanel.showReport(this.store.snap!, {
        nodes, classes: [], predictions: {}, certainty: {}, iterations: 0,
        accuracy: null, accuracy_std: null, version: this.store.version,
        error: String(err instanceof ApiError ? err.message : err),
      });
    }
  }

  async applyHyperparams(overlay: Record<string, unknown>): Promise<void> {
    try {
      const d = await this.client.putHyperparams(overlay);
      this.ingest(d);
      this.hyper.fill(this.store.snap!.hyperparams);
    } catch (err) {
      this.log.push(`hyperparams rejected: ${err instanceof ApiError ? err.message : err}`);
    }
  }

  /** Whole-graph cross-validated accuracy, a pure server readback. */
  async evaluate(): Promise<void> {
    const all = [...this.store.snap!.nodes.keys()];
    const rep = await this.client.localModel(all);
    this.hyper.showEvaluation(rep);
  }

  /** Test hook: resolves once the mirror reaches version v. */
  waitForVersion(v: number, timeoutMs = 5000): Promise<void> {
    if (this.store.version >= v) return Promise.resolve();
    return new Promise((resolve, reject) => {
      const timer = setTimeout(() => {
        off();
        reject(new Error(`timed out waiting for version ${v} (at ${this.store.version})`));
      }, timeoutMs);
      const off = this.store.subscribe(() => {
        if (this.store.version >= v) {
          clearTimeout(timer);
          off();
          resolve();
        }
      });
    });
  }

  // ----------------------------------------------------------------- shell

  private buildShell(): void {
    this.root.innerHTML = `
      <div class="canvas-wrap">
        <svg id="canvas" preserveAspectRatio="xMidYMid meet"></svg>
        <div id="tooltip"></div>
      </div>
      <div class="sidebar">
        <section id="panel-filter"></section>
        <section id="panel-detail"></section>
        <section id="panel-selection"></section>
        <section id="panel-hyper"></section>
        <section id="panel-log"></section>
      </div>`;
    const svg = this.root.querySelector<SVGSVGElement>("#canvas")!;
    const tooltip = this.root.querySelector<HTMLElement>("#tooltip")!;
    this.renderer = new GraphRenderer(svg, tooltip, {
      onSelect: (ids, additive) => this.select(ids, additive),
      onHover: (id, ev) => {
        const snap = this.store.snap;
        if (id === null || !snap || !ev) {
          this.renderer.hideTooltip();
          return;
        }
        const nd = snap.nodes.get(id);
        if (nd) this.renderer.showTooltip(nd, snap.node_names?.[id], ev.clientX, ev.clientY);
      },
    });
    this.filter = new FilterPanel(
      this.root.querySelector("#panel-filter")!,
      () => this.rerender(),
    );
    this.detail = new DetailPanel(this.root.querySelector("#panel-detail")!, {
      onCorrect: (node, label) => this.correctLabel(node, label),
    });
    this.selectionPanel = new SelectionPanel(this.root.querySelector("#panel-selection")!, {
      onFit: (nodes) => void this.fitLocalModel(nodes),
    });
    this.hyper = new HyperPanel(this.root.querySelector("#panel-hyper")!, {
      onApply: (overlay) => void this.applyHyperparams(overlay),
      onEvaluate: () => void this.evaluate(),
    });
    this.log = new LogPanel(this.root.querySelector("#panel-log")!);
  }
}

export async function boot(root: HTMLElement, opts: AppOptions): Promise<App> {
  const app = new App(root, opts);
  await app.start();
  return app;
}

/** Browser entry: same-origin server, session from the query string. */
export async function bootFromLocation(): Promise<App> {
  const params = new URLSearchParams(window.location.search);
  const sid = params.get("session") ?? "default";
  const base = params.get("base") ?? "";
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  try {
    return await boot(root, { base, sid });
  } catch (err) {
    if (err instanceof ApiError && err.status === 404 && !params.get("session")) {
      root.innerHTML =
        `<div class="banner">No session named "default". Start the server with a
         dataset (<code>relsim serve DATASET</code>) or create a session over the
         API and open <code>?session=ID</code>.</div>`;
    }
    throw err;
  }
}

export { createSession };
