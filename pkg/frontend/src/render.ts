/**
 * SVG graph renderer.
 *
 * Direct DOM, no libraries. Nodes are circles keyed by id and diffed in
 * place; a zoom/pan transform lives on the viewBox so positions never
 * move once the layout freezes. Selection is click / ctrl-click /
 * shift-drag brush; hover raises a tooltip with the full estimate row.
 */

import type { NodeView } from "./api.js";
import type { Snapshot } from "./model.js";
import { effectiveCertainty } from "./model.js";
import type { ForceLayout } from "./layout.js";

export const CLASS_COLORS = [
  "#4c78a8", "#f58518", "#54a24b", "#e45756", "#72b7b2",
  "#b279a2", "#eeca3b", "#ff9da6", "#9d755d", "#bab0ac",
];

export interface Encodings {
  color: "class" | "certainty";
  size: "uncertainty" | "fixed";
}

export interface RenderHooks {
  onSelect(ids: number[], additive: boolean): void;
  onHover(id: number | null, ev?: MouseEvent): void;
}

const SVGNS = "http://www.w3.org/2000/svg";

function certaintyColor(c: number): string {
  // low certainty bright red, high certainty cool gray
  const t = Math.max(0, Math.min(1, c));
  const r = Math.round(230 - 90 * t);
  const g = Math.round(80 + 80 * t);
  const b = Math.round(80 + 90 * t);
  return `rgb(${r},${g},${b})`;
}

function radius(nd: NodeView, enc: Encodings): number {
  if (enc.size === "fixed") return 7;
  return 5 + 7 * (1 - effectiveCertainty(nd));
}

function fill(nd: NodeView, enc: Encodings): string {
  if (enc.color === "certainty") return certaintyColor(effectiveCertainty(nd));
  const cls = nd.label !== null ? nd.label : nd.assignment;
  return cls === null ? "#777" : CLASS_COLORS[cls % CLASS_COLORS.length];
}

export class GraphRenderer {
  private edgeLayer: SVGGElement;
  private nodeLayer: SVGGElement;
  private circles = new Map<number, SVGCircleElement>();
  private lines = new Map<string, SVGLineElement>();
  private view = { x: 0, y: 0, w: 1000, h: 1000 };
  private brush: SVGRectElement;
  private dragFrom: { x: number; y: number; brushing: boolean } | null = null;

  constructor(
    private svg: SVGSVGElement,
    private tooltip: HTMLElement,
    private hooks: RenderHooks,
  ) {
    this.edgeLayer = document.createElementNS(SVGNS, "g");
    this.nodeLayer = document.createElementNS(SVGNS, "g");
    this.brush = document.createElementNS(SVGNS, "rect");
    this.brush.setAttribute("class", "brush");
    this.brush.setAttribute("display", "none");
    svg.appendChild(this.edgeLayer);
    svg.appendChild(this.nodeLayer);
    svg.appendChild(this.brush);
    this.applyView();
    this.bindNavigation();
  }

  /** Re-render from the snapshot; only `visible` ids are shown. */
  update(
    snap: Snapshot,
    layout: ForceLayout,
    visible: Set<number>,
    selection: Set<number>,
    enc: Encodings,
  ): void {
    // nodes first: upsert live ones, drop dead elements
    for (const [id, el] of [...this.circles]) {
      if (!snap.nodes.has(id)) {
        el.remove();
        this.circles.delete(id);
      }
    }
    for (const nd of snap.nodes.values()) {
      let el = this.circles.get(nd.id);
      if (!el) {
        el = document.createElementNS(SVGNS, "circle");
        el.addEventListener("click", (ev) => {
          ev.stopPropagation();
          this.hooks.onSelect([nd.id], ev.ctrlKey || ev.metaKey);
        });
        el.addEventListener("mouseenter", (ev) => this.hooks.onHover(nd.id, ev));
        el.addEventListener("mouseleave", () => this.hooks.onHover(null));
        this.circles.set(nd.id, el);
        this.nodeLayer.appendChild(el);
      }
      const p = layout.positions.get(nd.id);
      if (p) {
        el.setAttribute("cx", p.x.toFixed(1));
        el.setAttribute("cy", p.y.toFixed(1));
      }
      el.setAttribute("r", radius(nd, enc).toFixed(1));
      el.setAttribute("fill", fill(nd, enc));
      el.setAttribute("data-id", String(nd.id));
      el.setAttribute("data-labeled", nd.label !== null ? "1" : "0");
      el.setAttribute("class", [
        "node",
        nd.label !== null ? "labeled" : "",
        nd.frozen ? "frozen" : "",
        selection.has(nd.id) ? "selected" : "",
      ].filter(Boolean).join(" "));
      el.setAttribute("display", visible.has(nd.id) ? "" : "none");
    }

    // edges: visible only when both endpoints are
    for (const [key, el] of [...this.lines]) {
      if (!snap.edges.has(key)) {
        el.remove();
        this.lines.delete(key);
      }
    }
    for (const [key, [u, v, w]] of snap.edges) {
      let el = this.lines.get(key);
      if (!el) {
        el = document.createElementNS(SVGNS, "line");
        el.setAttribute("class", "edge");
        this.lines.set(key, el);
        this.edgeLayer.appendChild(el);
      }
      const pu = layout.positions.get(u);
      const pv = layout.positions.get(v);
      if (pu && pv) {
        el.setAttribute("x1", pu.x.toFixed(1));
        el.setAttribute("y1", pu.y.toFixed(1));
        el.setAttribute("x2", pv.x.toFixed(1));
        el.setAttribute("y2", pv.y.toFixed(1));
      }
      el.setAttribute("stroke-width", (0.6 + 0.9 * Math.min(3, w)).toFixed(2));
      el.setAttribute("display", visible.has(u) && visible.has(v) ? "" : "none");
    }
  }

  /** Ids currently drawn (not display:none); the filter test reads this. */
  visibleIds(): Set<number> {
    const out = new Set<number>();
    for (const [id, el] of this.circles) {
      if (el.getAttribute("display") !== "none") out.add(id);
    }
    return out;
  }

  showTooltip(nd: NodeView, name: string | undefined, clientX: number, clientY: number): void {
    const c = nd.certainty === null ? "" : ` certainty ${nd.certainty.toFixed(3)}`;
    const p = nd.estimate.map((x) => x.toFixed(3)).join(", ");
    this.tooltip.textContent =
      `${name ?? "node " + nd.id}${c}  p = [${p}]`;
    this.tooltip.style.display = "block";
    this.tooltip.style.left = `${clientX + 12}px`;
    this.tooltip.style.top = `${clientY + 12}px`;
  }

  hideTooltip(): void {
    this.tooltip.style.display = "none";
  }

  // ------------------------------------------------------------ navigation

  private applyView(): void {
    const { x, y, w, h } = this.view;
    this.svg.setAttribute("viewBox", `${x} ${y} ${w} ${h}`);
  }

  private toWorld(ev: MouseEvent): { x: number; y: number } {
    const rect = this.svg.getBoundingClientRect();
    const sx = rect.width ? (ev.clientX - rect.left) / rect.width : 0;
    const sy = rect.height ? (ev.clientY - rect.top) / rect.height : 0;
    return { x: this.view.x + sx * this.view.w, y: this.view.y + sy * this.view.h };
  }

  private bindNavigation(): void {
    this.svg.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      const at = this.toWorld(ev);
      const factor = ev.deltaY > 0 ? 1.15 : 1 / 1.15;
      const w = Math.min(4000, Math.max(100, this.view.w * factor));
      const h = w;
      this.view = {
        x: at.x - ((at.x - this.view.x) / this.view.w) * w,
        y: at.y - ((at.y - this.view.y) / this.view.h) * h,
        w,
        h,
      };
      this.applyView();
    });

    this.svg.addEventListener("mousedown", (ev) => {
      const at = this.toWorld(ev);
      this.dragFrom = { ...at, brushing: ev.shiftKey };
      if (ev.shiftKey) {
        this.brush.setAttribute("display", "");
        this.brush.setAttribute("x", String(at.x));
        this.brush.setAttribute("y", String(at.y));
        this.brush.setAttribute("width", "0");
        this.brush.setAttribute("height", "0");
      }
    });

    this.svg.addEventListener("mousemove", (ev) => {
      if (!this.dragFrom) return;
      const at = this.toWorld(ev);
      if (this.dragFrom.brushing) {
        const x = Math.min(at.x, this.dragFrom.x);
        const y = Math.min(at.y, this.dragFrom.y);
        this.brush.setAttribute("x", String(x));
        this.brush.setAttribute("y", String(y));
        this.brush.setAttribute("width", String(Math.abs(at.x - this.dragFrom.x)));
        this.brush.setAttribute("height", String(Math.abs(at.y - this.dragFrom.y)));
      } else {
        this.view.x -= at.x - this.dragFrom.x;
        this.view.y -= at.y - this.dragFrom.y;
        this.applyView();
      }
    });

    this.svg.addEventListener("mouseup", (ev) => {
      const from = this.dragFrom;
      this.dragFrom = null;
      if (!from) return;
      if (from.brushing) {
        this.brush.setAttribute("display", "none");
        const to = this.toWorld(ev);
        const x0 = Math.min(from.x, to.x), x1 = Math.max(from.x, to.x);
        const y0 = Math.min(from.y, to.y), y1 = Math.max(from.y, to.y);
        const hit: number[] = [];
        for (const [id, el] of this.circles) {
          if (el.getAttribute("display") === "none") continue;
          const cx = Number(el.getAttribute("cx"));
          const cy = Number(el.getAttribute("cy"));
          if (cx >= x0 && cx <= x1 && cy >= y0 && cy <= y1) hit.push(id);
        }
        this.hooks.onSelect(hit, ev.ctrlKey || ev.metaKey);
      }
    });

    this.svg.addEventListener("click", () => this.hooks.onSelect([], false));
  }
}
