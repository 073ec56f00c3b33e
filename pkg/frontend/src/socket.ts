/** WebSocket client for the extraction service.
 *
 * The browser endpoint speaks plain JSON text messages, one request per
 * message and one reply per request, in order.  Two rules keep the UI
 * responsive without flooding the service, whose extraction lock
 * serializes jobs anyway:
 *
 *   - at most one request is ever in flight per client;
 *   - a request made while one is in flight replaces any queued one,
 *     and a reply belonging to a superseded request is dropped, so the
 *     last writer always wins.
 */

import type { ExtractionParams, Reply } from "./types.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export interface ServiceClientOptions {
  factory?: SocketFactory;
  onStatus?: (status: ConnectionStatus) => void;
  onReply?: (reply: Reply) => void;
  /** Called with a human-readable note when a reply cannot be parsed. */
  onProtocolError?: (note: string) => void;
}

const defaultFactory: SocketFactory = (url) =>
  new WebSocket(url) as unknown as SocketLike;

export class ServiceClient {
  readonly url: string;
  private opts: ServiceClientOptions;
  private factory: SocketFactory;
  private socket: SocketLike | null = null;
  private open = false;
  private inflight = false;
  private queued: ExtractionParams | null = null;

  constructor(url: string, opts: ServiceClientOptions = {}) {
    this.url = url;
    this.opts = opts;
    this.factory = opts.factory ?? defaultFactory;
  }

  get connected(): boolean {
    return this.open;
  }

  get busy(): boolean {
    return this.inflight;
  }

  connect(): void {
    if (this.socket) return;
    this.opts.onStatus?.("connecting");
    let sock: SocketLike;
    try {
      sock = this.factory(this.url);
    } catch {
      this.opts.onStatus?.("disconnected");
      return;
    }
    this.socket = sock;
    sock.onopen = () => {
      this.open = true;
      this.opts.onStatus?.("connected");
      // a request made while the socket was still connecting goes out now
      if (this.queued && !this.inflight) {
        const params = this.queued;
        this.queued = null;
        this.request(params);
      }
    };
    sock.onmessage = (ev) => this.handleMessage(ev.data);
    const drop = () => {
      if (!this.socket) return;
      this.socket = null;
      this.open = false;
      this.inflight = false;
      this.opts.onStatus?.("disconnected");
    };
    sock.onerror = drop;
    sock.onclose = drop;
  }

  /** Close and reopen; the banner's retry button lands here. */
  retry(): void {
    if (this.socket) {
      const sock = this.socket;
      this.socket = null;
      this.open = false;
      this.inflight = false;
      try {
        sock.close();
      } catch {
        // already gone
      }
    }
    this.connect();
  }

  /** Send an extraction request, superseding any queued one. */
  request(params: ExtractionParams): void {
    if (!this.socket) this.connect();
    if (!this.open || this.inflight) {
      this.queued = params;
      return;
    }
    this.inflight = true;
    this.socket!.send(JSON.stringify(params));
  }

  private handleMessage(data: unknown): void {
    this.inflight = false;
    if (this.queued !== null) {
      // a newer request superseded this one: drop the reply, send the
      // latest
      const params = this.queued;
      this.queued = null;
      this.request(params);
      return;
    }
    let reply: Reply;
    try {
      reply = JSON.parse(String(data)) as Reply;
    } catch {
      this.opts.onProtocolError?.("reply was not JSON");
      return;
    }
    if (typeof reply !== "object" || reply === null || !("status" in reply)) {
      this.opts.onProtocolError?.("reply had no status");
      return;
    }
    this.opts.onReply?.(reply);
  }
}

export interface Debounced<A extends unknown[]> {
  (...args: A): void;
  cancel(): void;
  flush(): void;
}

/** Trailing-edge debounce: one call, with the latest arguments, after
 * the input has been quiet for `ms`. */
export function debounce<A extends unknown[]>(fn: (...args: A) => void, ms: number): Debounced<A> {
  let timer: ReturnType<typeof setTimeout> | null = null;
  let last: A | null = null;
  const out = (...args: A) => {
    last = args;
    if (timer !== null) clearTimeout(timer);
    timer = setTimeout(() => {
      timer = null;
      const args2 = last!;
      last = null;
      fn(...args2);
    }, ms);
  };
  out.cancel = () => {
    if (timer !== null) clearTimeout(timer);
    timer = null;
    last = null;
  };
  out.flush = () => {
    if (timer === null) return;
    clearTimeout(timer);
    timer = null;
    const args = last!;
    last = null;
    fn(...args);
  };
  return out;
}

export const REQUEST_DEBOUNCE_MS = 300;
