/**
 * Typed client for the inference service.
 *
 * Mirrors docs/service-protocol.md in the parent repository; every shape
 * here is a direct transcription of a wire payload. The UI never derives
 * model quantities of its own, so this module is the single doorway to
 * every number that ends up on screen.
 */

export interface KernelParams {
  kind: string;
  sigma: number;
  degree: number;
  offset: number;
}

export interface Hyperparams {
  alpha: number;
  omega: number;
  hop: number;
  tau_max: number;
  ssl_enabled: boolean;
  topk_fraction: number;
  epsilon: number;
  prior_iters: number;
  mesh: number;
  meta_features: string[];
  use_edge_weights: boolean;
  normalization: string;
  aggregation: string;
  kernel: KernelParams;
}

export interface NodeView {
  id: number;
  label: number | null;
  assignment: number | null;
  certainty: number | null;
  estimate: number[];
  frozen: boolean;
  topology: number[];
}

export type Edge = [number, number, number];

export interface GraphView {
  version: number;
  graph_version: number;
  class_count: number;
  stale: boolean;
  hyperparams: Hyperparams;
  topology_columns: string[];
  nodes: NodeView[];
  edges: Edge[];
  node_names?: string[];
  class_names?: string[];
}

export interface Delta {
  version: number;
  graph_version: number;
  op: string | null;
  detail: Record<string, unknown>;
  error: string | null;
  recomputed: number[];
  nodes: NodeView[];
  removed_nodes: number[];
  removed_predictions: number[];
  features: Record<string, number[]>;
  edges_added: Edge[];
  edges_removed: [number, number][];
}

export interface NeighborEntry {
  id: number;
  weight: number;
  label: number | null;
  assignment: number | null;
}

export interface NodeDetails extends NodeView {
  features: number[];
  neighbors: NeighborEntry[];
  version: number;
}

export interface LocalModelReport {
  nodes: number[];
  classes: number[];
  predictions: Record<string, number>;
  certainty: Record<string, number>;
  iterations: number;
  accuracy: number | null;
  accuracy_std: number | null;
  version: number;
  error: string | null;
}

export interface DeltaBacklog {
  reset: boolean;
  version: number;
  deltas: Delta[];
}

export interface GraphFilter {
  certainty_le?: number;
  certainty_lt?: number;
  certainty_ge?: number;
  certainty_gt?: number;
  classes?: number[];
  nodes?: number[];
}

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, init);
  if (!resp.ok) {
    let detail = `${resp.status} ${resp.statusText}`;
    try {
      const body = await resp.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      // non-JSON error body; keep the status line
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

function post(body: unknown): RequestInit {
  return {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
  };
}

export interface SessionCreated {
  session: string;
  version: number;
  graph_version: number;
  error: string | null;
}

export function createSession(
  base: string,
  payload: Record<string, unknown>,
): Promise<SessionCreated> {
  return request(`${base}/api/session`, post(payload));
}

export class Client {
  constructor(public base: string, public sid: string) {}

  private url(path: string): string {
    return `${this.base}/api/session/${encodeURIComponent(this.sid)}${path}`;
  }

  getGraph(filter?: GraphFilter): Promise<GraphView> {
    const q = new URLSearchParams();
    if (filter) {
      for (const key of ["certainty_le", "certainty_lt", "certainty_ge", "certainty_gt"] as const) {
        const v = filter[key];
        if (v !== undefined) q.set(key, String(v));
      }
      if (filter.classes) q.set("classes", filter.classes.join(","));
      if (filter.nodes) q.set("nodes", filter.nodes.join(","));
    }
    const qs = q.toString();
    return request(this.url(`/graph${qs ? "?" + qs : ""}`));
  }

  nodeDetails(v: number): Promise<NodeDetails> {
    return request(this.url(`/node/${v}`));
  }

  mutate(op: string, args: Record<string, unknown>): Promise<Delta> {
    return request(this.url("/mutate"), post({ op, ...args }));
  }

  setLabel(node: number, label: number | null): Promise<Delta> {
    return request(this.url("/label"), post({ node, label }));
  }

  getHyperparams(): Promise<{ version: number; hyperparams: Hyperparams }> {
    return request(this.url("/hyperparams"));
  }

  putHyperparams(overlay: Record<string, unknown>): Promise<Delta> {
    return request(this.url("/hyperparams"), {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(overlay),
    });
  }

  retrain(): Promise<Delta> {
    return request(this.url("/retrain"), post({}));
  }

  localModel(nodes: number[], hyperparams?: Record<string, unknown>): Promise<LocalModelReport> {
    const body: Record<string, unknown> = { nodes };
    if (hyperparams) body.hyperparams = hyperparams;
    return request(this.url("/local-model"), post(body));
  }

  deltasSince(since: number): Promise<DeltaBacklog> {
    return request(this.url(`/deltas?since=${since}`));
  }

  eventsUrl(since?: number): string {
    return this.url(since === undefined ? "/events" : `/events?since=${since}`);
  }
}
