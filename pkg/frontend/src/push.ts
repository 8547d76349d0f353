/**
 * Push channel: server-sent events parsed off a streaming fetch.
 *
 * fetch + ReadableStream works in browsers and in node, and unlike
 * EventSource it lets the reconnect carry a fresh `since=` cursor, which
 * is what the replay protocol wants. A polling variant over /deltas backs
 * it up for environments without streaming bodies.
 */

import type { Delta, DeltaBacklog } from "./api.js";

export interface PushHandlers {
  /** One delta, in version order (the caller still checks for gaps). */
  onDelta(d: Delta): void;
  /** Backlog pruned server-side: refetch everything, resume from version. */
  onReset(version: number): void;
  onStatus?(state: "connecting" | "open" | "closed"): void;
}

interface SseFrame {
  event: string;
  data: string;
}

/** Incremental SSE parser; hand it chunks, it hands back complete frames. */
export class SseParser {
  private buf = "";

  push(chunk: string): SseFrame[] {
    this.buf += chunk;
    const frames: SseFrame[] = [];
    let at: number;
    // frames are separated by a blank line
    while ((at = this.buf.indexOf("\n\n")) >= 0) {
      const raw = this.buf.slice(0, at);
      this.buf = this.buf.slice(at + 2);
      let event = "message";
      const data: string[] = [];
      for (const line of raw.split("\n")) {
        if (line.startsWith(":")) continue; // keep-alive comment
        if (line.startsWith("event:")) event = line.slice(6).trim();
        else if (line.startsWith("data:")) data.push(line.slice(5).trim());
      }
      if (data.length) frames.push({ event, data: data.join("\n") });
    }
    return frames;
  }
}

export class DeltaStream {
  private stopped = false;
  private ctrl: AbortController | null = null;

  constructor(
    private eventsUrl: (since: number) => string,
    private since: () => number,
    private handlers: PushHandlers,
    private retryMs = 1000,
  ) {}

  start(): void {
    this.stopped = false;
    void this.loop();
  }

  stop(): void {
    this.stopped = true;
    this.ctrl?.abort();
  }

  private async loop(): Promise<void> {
    while (!this.stopped) {
      this.handlers.onStatus?.("connecting");
      this.ctrl = new AbortController();
      try {
        const resp = await fetch(this.eventsUrl(this.since()), {
          signal: this.ctrl.signal,
          headers: { accept: "text/event-stream" },
        });
        if (!resp.ok || !resp.body) throw new Error(`stream ${resp.status}`);
        this.handlers.onStatus?.("open");
        const reader = resp.body.getReader();
        const decoder = new TextDecoder();
        const parser = new SseParser();
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          for (const frame of parser.push(decoder.decode(value, { stream: true }))) {
            this.dispatch(frame);
          }
        }
      } catch {
        // connection dropped or aborted; fall through to retry
      }
      this.handlers.onStatus?.("closed");
      if (this.stopped) return;
      await new Promise((r) => setTimeout(r, this.retryMs));
    }
  }

  private dispatch(frame: SseFrame): void {
    if (frame.event === "delta") {
      this.handlers.onDelta(JSON.parse(frame.data) as Delta);
    } else if (frame.event === "reset") {
      const body = JSON.parse(frame.data) as { version: number };
      this.handlers.onReset(body.version);
    }
    // "hello" carries the current version; the first delta or resync
    // covers the same information, so it needs no handling of its own.
  }
}

export class PollChannel {
  private timer: ReturnType<typeof setInterval> | null = null;
  private busy = false;

  constructor(
    private fetchDeltas: (since: number) => Promise<DeltaBacklog>,
    private since: () => number,
    private handlers: PushHandlers,
    private intervalMs = 500,
  ) {}

  start(): void {
    this.handlers.onStatus?.("open");
    this.timer = setInterval(() => void this.tick(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
    this.handlers.onStatus?.("closed");
  }

  async tick(): Promise<void> {
    if (this.busy) return; // a slow response must not reorder deltas
    this.busy = true;
    try {
      const backlog = await this.fetchDeltas(this.since());
      if (backlog.reset) this.handlers.onReset(backlog.version);
      else for (const d of backlog.deltas) this.handlers.onDelta(d);
    } catch {
      // transient fetch failure; next tick retries
    } finally {
      this.busy = false;
    }
  }
}
