/** Event-feed client: one SSE connection with cursor replay on reconnect.
 *
 * The gateway assigns every event a monotone id; we remember the last one
 * seen and reconnect with ?cursor=<id> after an outage, so nothing committed
 * during the gap is missed. Backoff is exponential, capped.
 */

import type { ChainEventMessage } from "./types.js";

export interface EventSourceLike {
  onmessage: ((ev: { data: string; lastEventId: string }) => void) | null;
  onerror: ((ev: unknown) => void) | null;
  addEventListener(type: string, handler: (ev: { data: string; lastEventId: string }) => void): void;
  close(): void;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

export const EVENT_NAMES = [
  "InspectionDueEvent",
  "DefectDetectedEvent",
  "OEMDefectAlert",
  "BladeScrapedEvent",
] as const;

export interface FeedOptions {
  baseUrl?: string;
  backoffBaseMs?: number;
  backoffCapMs?: number;
  factory?: EventSourceFactory;
  setTimeoutImpl?: (fn: () => void, ms: number) => unknown;
}

export class EventFeed {
  private source: EventSourceLike | null = null;
  private closed = false;
  private backoffMs: number;
  lastSeq = -1;
  reconnects = 0;

  constructor(
    private readonly onEvent: (seq: number, event: ChainEventMessage) => void,
    private readonly options: FeedOptions = {},
  ) {
    this.backoffMs = options.backoffBaseMs ?? 1000;
  }

  streamUrl(): string {
    const base = this.options.baseUrl ?? "";
    return `${base}/api/events/stream?cursor=${this.lastSeq}`;
  }

  connect(): void {
    if (this.closed) return;
    const factory: EventSourceFactory =
      this.options.factory ?? ((url) => new EventSource(url) as unknown as EventSourceLike);
    const source = factory(this.streamUrl());
    this.source = source;
    const handle = (ev: { data: string; lastEventId: string }) => {
      const seq = parseInt(ev.lastEventId, 10);
      if (Number.isFinite(seq) && seq <= this.lastSeq) return; // replayed duplicate
      const parsed = JSON.parse(ev.data) as ChainEventMessage;
      if (Number.isFinite(seq)) this.lastSeq = seq;
      this.backoffMs = this.options.backoffBaseMs ?? 1000; // healthy again
      this.onEvent(this.lastSeq, parsed);
    };
    for (const name of EVENT_NAMES) source.addEventListener(name, handle);
    source.onmessage = handle;
    source.onerror = () => this.scheduleReconnect();
  }

  private scheduleReconnect(): void {
    if (this.closed) return;
    this.source?.close();
    this.source = null;
    this.reconnects += 1;
    const wait = this.backoffMs;
    this.backoffMs = Math.min(this.backoffMs * 2, this.options.backoffCapMs ?? 15000);
    const later = this.options.setTimeoutImpl ?? setTimeout;
    later(() => this.connect(), wait);
  }

  close(): void {
    this.closed = true;
    this.source?.close();
    this.source = null;
  }
}
