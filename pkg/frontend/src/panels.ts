/**
 * Side panels: filter slider, node details with label correction,
 * selection / local-model report, hyperparameter form, event log.
 *
 * Every number a panel shows is a server readback carried by the store;
 * panels format, they never compute. The detail panel additionally
 * exposes the raw estimate row on a data attribute so tests can compare
 * it bit for bit against the node-details endpoint.
 */

import type { Hyperparams, LocalModelReport, NodeView } from "./api.js";
import type { Snapshot } from "./model.js";
import { CLASS_COLORS } from "./render.js";

function h<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const el = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, v);
  el.append(...children);
  return el;
}

function className(snap: Snapshot, c: number | null): string {
  if (c === null) return "?";
  return snap.class_names ? snap.class_names[c] : `class ${c}`;
}

function nodeName(snap: Snapshot, id: number): string {
  return snap.node_names?.[id] ?? `node ${id}`;
}

// ------------------------------------------------------------------ filter

export class FilterPanel {
  cutoff = 1.0;
  private slider: HTMLInputElement;
  private readout: HTMLElement;
  private counts: HTMLElement;

  constructor(root: HTMLElement, onChange: (cutoff: number) => void) {
    this.slider = h("input", {
      type: "range", min: "0", max: "1", step: "0.01", value: "1",
      id: "filter-slider",
    });
    this.readout = h("span", { class: "readout" }, "1.00");
    this.counts = h("div", { class: "muted", id: "filter-counts" });
    root.append(
      h("h3", {}, "Certainty filter"),
      h("label", { for: "filter-slider" }, "show nodes with certainty ≤ ", this.readout),
      this.slider,
      this.counts,
    );
    this.slider.addEventListener("input", () => {
      this.cutoff = Number(this.slider.value);
      this.readout.textContent = this.cutoff.toFixed(2);
      onChange(this.cutoff);
    });
  }

  /** Programmatic setter used by tests; same path as user input. */
  set(value: number): void {
    this.slider.value = String(value);
    this.slider.dispatchEvent(new Event("input"));
  }

  showCounts(visible: number, total: number): void {
    this.counts.textContent = `showing ${visible} of ${total} nodes`;
  }
}

// ----------------------------------------------------------------- details

export interface DetailHooks {
  onCorrect(node: number, label: number | null): void;
}

export class DetailPanel {
  private body: HTMLElement;

  constructor(private root: HTMLElement, private hooks: DetailHooks) {
    this.body = h("div", { id: "detail-body" });
    root.append(h("h3", {}, "Node"), this.body);
    this.renderEmpty();
  }

  renderEmpty(): void {
    this.body.replaceChildren(h("div", { class: "muted" }, "click a node"));
  }

  render(snap: Snapshot, nd: NodeView): void {
    const rows: HTMLElement[] = [];
    const head = h("div", { class: "detail-head" },
      h("strong", {}, nodeName(snap, nd.id)),
      h("span", { class: "muted" }, ` #${nd.id}`),
    );
    rows.push(head);

    const status = nd.label !== null
      ? `labeled ${className(snap, nd.label)}`
      : nd.assignment !== null
        ? `predicted ${className(snap, nd.assignment)}`
          + (nd.certainty !== null ? `, certainty ${nd.certainty.toFixed(4)}` : "")
        : "no prediction";
    rows.push(h("div", { id: "detail-status" },
      status + (nd.frozen ? " (frozen)" : "")));

    // estimate row; data-estimate carries the raw numbers for readback tests
    const est = h("div", {
      id: "detail-estimate",
      "data-node": String(nd.id),
      "data-estimate": JSON.stringify(nd.estimate),
    });
    nd.estimate.forEach((p, c) => {
      const bar = h("span", { class: "est-bar" });
      bar.style.width = `${Math.round(60 * p)}px`;
      bar.style.background = CLASS_COLORS[c % CLASS_COLORS.length];
      est.append(h("div", { class: "est-row" },
        h("span", { class: "est-name" }, className(snap, c)),
        bar,
        h("span", { class: "est-val" }, p.toFixed(4)),
      ));
    });
    rows.push(est);

    // label correction: pick a class, or clear back to unlabeled
    const select = h("select", { id: "correct-class" });
    for (let c = 0; c < snap.class_count; c++) {
      const opt = h("option", { value: String(c) }, className(snap, c));
      if ((nd.label ?? nd.assignment) === c) opt.selected = true;
      select.append(opt);
    }
    const apply = h("button", { id: "correct-apply" }, "set label");
    apply.addEventListener("click", () =>
      this.hooks.onCorrect(nd.id, Number(select.value)));
    const controls = h("div", { class: "correct" }, select, apply);
    if (nd.label !== null) {
      const clear = h("button", { id: "correct-clear" }, "clear");
      clear.addEventListener("click", () => this.hooks.onCorrect(nd.id, null));
      controls.append(clear);
    }
    rows.push(controls);

    this.body.replaceChildren(...rows);
  }
}

// --------------------------------------------------------------- selection

export interface SelectionHooks {
  onFit(nodes: number[]): void;
}

export class SelectionPanel {
  private info: HTMLElement;
  private report: HTMLElement;
  private fit: HTMLButtonElement;
  private current: number[] = [];

  constructor(root: HTMLElement, hooks: SelectionHooks) {
    this.info = h("div", { class: "muted", id: "selection-info" }, "nothing selected");
    this.fit = h("button", { id: "selection-fit", disabled: "" }, "fit local model");
    this.report = h("div", { id: "local-report" });
    root.append(h("h3", {}, "Selection"), this.info, this.fit, this.report);
    this.fit.addEventListener("click", () => hooks.onFit(this.current));
  }

  update(ids: number[]): void {
    this.current = ids;
    this.info.textContent = ids.length
      ? `${ids.length} node(s) selected`
      : "nothing selected";
    if (ids.length) this.fit.removeAttribute("disabled");
    else this.fit.setAttribute("disabled", "");
  }

  showReport(snap: Snapshot, rep: LocalModelReport): void {
    if (rep.error !== null) {
      this.report.replaceChildren(
        h("div", { class: "banner", id: "local-error" }, rep.error));
      return;
    }
    const acc = rep.accuracy === null
      ? "selection too small to cross-validate"
      : `accuracy ${(100 * rep.accuracy).toFixed(2)}%`
        + (rep.accuracy_std === null ? "" : ` ± ${(100 * rep.accuracy_std).toFixed(2)}`);
    const lines = [
      h("div", { id: "local-accuracy", "data-accuracy": JSON.stringify(rep.accuracy) }, acc),
      h("div", { class: "muted" },
        `${rep.nodes.length} nodes, classes [${rep.classes.map((c) => className(snap, c)).join(", ")}], `
        + `${Object.keys(rep.predictions).length} predicted, ${rep.iterations} pass(es)`),
    ];
    this.report.replaceChildren(...lines);
  }

  showPending(): void {
    this.report.replaceChildren(h("div", { class: "muted" }, "fitting…"));
  }
}

// ------------------------------------------------------------- hyperparams

export interface HyperHooks {
  onApply(overlay: Record<string, unknown>): void;
  onEvaluate(): void;
}

interface FieldSpec {
  key: string;
  label: string;
  parse(raw: string): number;
  check(v: number): string | null;
}

const FIELDS: FieldSpec[] = [
  { key: "alpha", label: "alpha", parse: Number,
    check: (v) => (v >= 0 && v <= 1 ? null : "alpha must lie in [0, 1]") },
  { key: "omega", label: "omega", parse: Number,
    check: (v) => (v >= 0 ? null : "omega must be ≥ 0") },
  { key: "hop", label: "hop", parse: Number,
    check: (v) => (Number.isInteger(v) && v >= 1 ? null : "hop must be a positive integer") },
  { key: "tau_max", label: "tau max", parse: Number,
    check: (v) => (Number.isInteger(v) && v >= 0 ? null : "tau max must be a nonnegative integer") },
  { key: "topk_fraction", label: "top-k fraction", parse: Number,
    check: (v) => (v > 0 && v <= 1 ? null : "top-k fraction must lie in (0, 1]") },
];

export class HyperPanel {
  private inputs = new Map<string, HTMLInputElement>();
  private kind: HTMLSelectElement;
  private sigma: HTMLInputElement;
  private ssl: HTMLInputElement;
  private error: HTMLElement;
  private evalOut: HTMLElement;

  constructor(root: HTMLElement, private hooks: HyperHooks) {
    const grid = h("div", { class: "hp-grid" });
    for (const f of FIELDS) {
      const input = h("input", { type: "text", id: `hp-${f.key}` });
      this.inputs.set(f.key, input);
      grid.append(h("label", { for: `hp-${f.key}` }, f.label), input);
    }
    this.kind = h("select", { id: "hp-kernel" },
      h("option", { value: "rbf" }, "rbf"),
      h("option", { value: "polynomial" }, "polynomial"),
      h("option", { value: "dot" }, "dot"));
    this.sigma = h("input", { type: "text", id: "hp-sigma" });
    this.ssl = h("input", { type: "checkbox", id: "hp-ssl" });
    grid.append(
      h("label", { for: "hp-kernel" }, "kernel"), this.kind,
      h("label", { for: "hp-sigma" }, "sigma"), this.sigma,
      h("label", { for: "hp-ssl" }, "ssl"), this.ssl,
    );
    this.error = h("div", { class: "banner", id: "hp-error" });
    this.error.style.display = "none";
    const apply = h("button", { id: "hp-apply" }, "apply + retrain");
    apply.addEventListener("click", () => this.submit());
    const evaluate = h("button", { id: "hp-evaluate" }, "evaluate");
    evaluate.addEventListener("click", () => hooks.onEvaluate());
    this.evalOut = h("div", { id: "hp-eval-out", class: "muted" });
    root.append(h("h3", {}, "Model"), grid, this.error, apply, evaluate, this.evalOut);
  }

  fill(hp: Hyperparams): void {
    for (const f of FIELDS) {
      this.inputs.get(f.key)!.value = String((hp as unknown as Record<string, unknown>)[f.key]);
    }
    this.kind.value = hp.kernel.kind;
    this.sigma.value = String(hp.kernel.sigma);
    this.ssl.checked = hp.ssl_enabled;
  }

  /** Validate locally; only a clean form reaches the server. */
  private submit(): void {
    const overlay: Record<string, unknown> = {};
    for (const f of FIELDS) {
      const raw = this.inputs.get(f.key)!.value.trim();
      const v = f.parse(raw);
      const bad = Number.isNaN(v) ? `${f.label} is not a number` : f.check(v);
      if (bad) return this.reject(bad);
      overlay[f.key] = v;
    }
    const sigma = Number(this.sigma.value.trim());
    if (Number.isNaN(sigma) || sigma <= 0) return this.reject("sigma must be > 0");
    overlay.kernel = { kind: this.kind.value, sigma };
    overlay.ssl_enabled = this.ssl.checked;
    this.error.style.display = "none";
    this.error.textContent = "";
    this.hooks.onApply(overlay);
  }

  private reject(message: string): void {
    this.error.textContent = message;
    this.error.style.display = "block";
  }

  showEvaluation(rep: LocalModelReport): void {
    this.evalOut.setAttribute("data-accuracy", JSON.stringify(rep.accuracy));
    this.evalOut.textContent = rep.error !== null
      ? rep.error
      : rep.accuracy === null
        ? "not enough labels to cross-validate"
        : `cross-validated accuracy ${(100 * rep.accuracy).toFixed(2)}%`
          + (rep.accuracy_std === null ? "" : ` ± ${(100 * rep.accuracy_std).toFixed(2)}`);
  }
}

// ------------------------------------------------------------------- log

export class LogPanel {
  private list: HTMLElement;

  constructor(root: HTMLElement) {
    this.list = h("div", { id: "event-log" });
    root.append(h("h3", {}, "Events"), this.list);
  }

  push(line: string): void {
    const entry = h("div", { class: "log-line" }, line);
    this.list.prepend(entry);
    while (this.list.childElementCount > 40) this.list.lastElementChild!.remove();
  }
}
