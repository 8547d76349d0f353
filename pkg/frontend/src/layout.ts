/**
 * Seeded force-directed layout.
 *
 * Runs a spring/repulsion simulation until node movement settles, then
 * freezes: later deltas never jitter existing positions. Nodes that
 * appear after the freeze are dropped near the centroid of their placed
 * neighbors and relaxed alone against the frozen rest.
 */

export interface Point {
  x: number;
  y: number;
}

export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

const AREA = 1000; // layout coordinates live in [0, AREA]^2

export class ForceLayout {
  positions = new Map<number, Point>();
  frozen = false;
  private rng: () => number;

  constructor(seed = 1) {
    this.rng = mulberry32(seed);
  }

  /** Full simulation over every node; freezes the result. */
  run(ids: number[], edges: [number, number][], maxTicks = 300): void {
    for (const v of ids) {
      if (!this.positions.has(v)) {
        this.positions.set(v, {
          x: AREA * (0.1 + 0.8 * this.rng()),
          y: AREA * (0.1 + 0.8 * this.rng()),
        });
      }
    }
    this.simulate(ids, edges, new Set(ids), maxTicks);
    this.frozen = true;
  }

  /** Place and settle only the listed nodes; everything else stays put. */
  relax(fresh: number[], ids: number[], edges: [number, number][]): void {
    const adj = new Map<number, number[]>();
    const link = (a: number, b: number) => {
      let row = adj.get(a);
      if (!row) adj.set(a, (row = []));
      row.push(b);
    };
    for (const [u, v] of edges) {
      link(u, v);
      link(v, u);
    }
    for (const v of fresh) {
      const placed = (adj.get(v) ?? [])
        .map((u) => this.positions.get(u))
        .filter((p): p is Point => !!p);
      if (placed.length) {
        const cx = placed.reduce((s, p) => s + p.x, 0) / placed.length;
        const cy = placed.reduce((s, p) => s + p.y, 0) / placed.length;
        this.positions.set(v, {
          x: cx + 40 * (this.rng() - 0.5),
          y: cy + 40 * (this.rng() - 0.5),
        });
      } else {
        this.positions.set(v, {
          x: AREA * (0.1 + 0.8 * this.rng()),
          y: AREA * (0.1 + 0.8 * this.rng()),
        });
      }
    }
    if (fresh.length) this.simulate(ids, edges, new Set(fresh), 60);
  }

  drop(ids: number[]): void {
    for (const v of ids) this.positions.delete(v);
  }

  private simulate(
    ids: number[],
    edges: [number, number][],
    movable: Set<number>,
    maxTicks: number,
  ): void {
    const n = ids.length;
    if (!n) return;
    const k = Math.sqrt((AREA * AREA) / n); // ideal pair distance
    let temp = AREA / 10;
    const cool = Math.pow(0.02 / temp, 1 / Math.max(1, maxTicks));

    for (let tick = 0; tick < maxTicks; tick++) {
      const disp = new Map<number, Point>();
      for (const v of movable) disp.set(v, { x: 0, y: 0 });

      // pairwise repulsion; n is desk scale, the quadratic loop is fine
      for (let i = 0; i < n; i++) {
        for (let j = i + 1; j < n; j++) {
          const a = ids[i], b = ids[j];
          const pa = this.positions.get(a)!, pb = this.positions.get(b)!;
          let dx = pa.x - pb.x, dy = pa.y - pb.y;
          let d2 = dx * dx + dy * dy;
          if (d2 < 0.01) {
            dx = this.rng() - 0.5;
            dy = this.rng() - 0.5;
            d2 = dx * dx + dy * dy;
          }
          const d = Math.sqrt(d2);
          const f = (k * k) / d;
          const da = disp.get(a), db = disp.get(b);
          if (da) { da.x += (dx / d) * f; da.y += (dy / d) * f; }
          if (db) { db.x -= (dx / d) * f; db.y -= (dy / d) * f; }
        }
      }
      // spring attraction along edges
      for (const [u, v] of edges) {
        const pu = this.positions.get(u), pv = this.positions.get(v);
        if (!pu || !pv) continue;
        const dx = pu.x - pv.x, dy = pu.y - pv.y;
        const d = Math.max(0.1, Math.sqrt(dx * dx + dy * dy));
        const f = (d * d) / k;
        const du = disp.get(u), dv = disp.get(v);
        if (du) { du.x -= (dx / d) * f; du.y -= (dy / d) * f; }
        if (dv) { dv.x += (dx / d) * f; dv.y += (dy / d) * f; }
      }
      // mild gravity keeps disconnected pieces on canvas
      for (const v of movable) {
        const p = this.positions.get(v)!, dv = disp.get(v)!;
        dv.x += (AREA / 2 - p.x) * 0.03;
        dv.y += (AREA / 2 - p.y) * 0.03;
      }

      let moved = 0;
      for (const v of movable) {
        const p = this.positions.get(v)!, dv = disp.get(v)!;
        const d = Math.max(0.001, Math.sqrt(dv.x * dv.x + dv.y * dv.y));
        const step = Math.min(d, temp);
        p.x = Math.min(AREA, Math.max(0, p.x + (dv.x / d) * step));
        p.y = Math.min(AREA, Math.max(0, p.y + (dv.y / d) * step));
        moved = Math.max(moved, step);
      }
      temp *= cool;
      if (moved < 0.5) break;
    }
  }
}
