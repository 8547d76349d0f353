/**
 * Client-side mirror of one session's state.
 *
 * A Snapshot always reflects exactly one server version. Deltas advance it
 * by the documented apply rule; anything that would leave the mirror
 * between versions (a gap, a pruned backlog) is reported to the caller so
 * it can resync instead of guessing.
 */

import type { Delta, Edge, GraphView, Hyperparams, NodeView } from "./api.js";

export interface Snapshot {
  version: number;
  graph_version: number;
  class_count: number;
  stale: boolean;
  hyperparams: Hyperparams;
  topology_columns: string[];
  nodes: Map<number, NodeView>;
  edges: Map<string, Edge>;
  node_names?: string[];
  class_names?: string[];
}

export function edgeKey(u: number, v: number): string {
  return u < v ? `${u}:${v}` : `${v}:${u}`;
}

export function fromGraphView(g: GraphView): Snapshot {
  const nodes = new Map<number, NodeView>();
  for (const nd of g.nodes) nodes.set(nd.id, nd);
  const edges = new Map<string, Edge>();
  for (const [u, v, w] of g.edges) edges.set(edgeKey(u, v), [u, v, w]);
  const snap: Snapshot = {
    version: g.version,
    graph_version: g.graph_version,
    class_count: g.class_count,
    stale: g.stale,
    hyperparams: g.hyperparams,
    topology_columns: g.topology_columns,
    nodes,
    edges,
  };
  if (g.node_names) snap.node_names = g.node_names;
  if (g.class_names) snap.class_names = g.class_names;
  return snap;
}

/** Apply one delta in place. Caller has already checked the version. */
export function applyDelta(s: Snapshot, d: Delta): void {
  // 1. dropped nodes take their incident edges with them
  if (d.removed_nodes.length) {
    const gone = new Set(d.removed_nodes);
    for (const v of gone) s.nodes.delete(v);
    for (const [key, e] of [...s.edges]) {
      if (gone.has(e[0]) || gone.has(e[1])) s.edges.delete(key);
    }
  }
  // 2. edge changes
  for (const [u, v] of d.edges_removed) s.edges.delete(edgeKey(u, v));
  for (const [u, v, w] of d.edges_added) s.edges.set(edgeKey(u, v), [u, v, w]);
  // 3. refreshed node views
  for (const nd of d.nodes) s.nodes.set(nd.id, nd);
  // 4. topology drift outside the refreshed views
  for (const [id, row] of Object.entries(d.features)) {
    const nd = s.nodes.get(Number(id));
    if (nd) nd.topology = row;
  }
  // 5. retrains carry the hyperparameters they applied
  const hp = (d.detail as { hyperparams?: Hyperparams }).hyperparams;
  if (hp) s.hyperparams = hp;
  // 6. counters and staleness
  s.stale = d.error !== null;
  s.version = d.version;
  s.graph_version = d.graph_version;
}

/** Canonical GraphView form, for comparing against a fresh server fetch. */
export function toGraphView(s: Snapshot): GraphView {
  const nodes = [...s.nodes.values()].sort((a, b) => a.id - b.id);
  const edges = [...s.edges.values()]
    .map(([u, v, w]): Edge => (u < v ? [u, v, w] : [v, u, w]))
    .sort((a, b) => a[0] - b[0] || a[1] - b[1]);
  const view: GraphView = {
    version: s.version,
    graph_version: s.graph_version,
    class_count: s.class_count,
    stale: s.stale,
    hyperparams: s.hyperparams,
    topology_columns: s.topology_columns,
    nodes,
    edges,
  };
  if (s.node_names) view.node_names = s.node_names;
  if (s.class_names) view.class_names = s.class_names;
  return view;
}

export type ApplyOutcome = "applied" | "stale" | "gap";

export type StoreListener = (kind: "replaced" | "delta", delta?: Delta) => void;

export class ViewStore {
  snap: Snapshot | null = null;
  private listeners = new Set<StoreListener>();

  subscribe(fn: StoreListener): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  private emit(kind: "replaced" | "delta", delta?: Delta): void {
    for (const fn of this.listeners) fn(kind, delta);
  }

  replace(g: GraphView): void {
    this.snap = fromGraphView(g);
    this.emit("replaced");
  }

  get version(): number {
    return this.snap ? this.snap.version : 0;
  }

  /**
   * Feed one pushed delta. "stale" pushes (at or below the mirrored
   * version) are discarded; a "gap" means the caller must fetch the
   * missing range before anything can advance.
   */
  apply(d: Delta): ApplyOutcome {
    if (!this.snap) return "gap";
    if (d.version <= this.snap.version) return "stale";
    if (d.version !== this.snap.version + 1) return "gap";
    applyDelta(this.snap, d);
    this.emit("delta", d);
    return "applied";
  }
}

/** Server rule: nodes without a certainty (labeled ones) count as 1.0. */
export function effectiveCertainty(nd: NodeView): number {
  return nd.certainty === null ? 1.0 : nd.certainty;
}

/**
 * Visible set under the confidence cutoff, exactly as the server computes
 * `graph?certainty_le=`. Kept in one place so the slider, the renderer,
 * and the fidelity test cannot drift apart.
 */
export function visibleUnderCutoff(s: Snapshot, cutoff: number): Set<number> {
  const vis = new Set<number>();
  for (const nd of s.nodes.values()) {
    if (effectiveCertainty(nd) <= cutoff) vis.add(nd.id);
  }
  return vis;
}
