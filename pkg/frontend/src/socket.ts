/**
 * Reconnecting WebSocket transport.
 *
 * Wraps one WebSocket connection with exponential backoff (0.5 s doubling to
 * 10 s max). The WebSocket constructor is injectable so tests (and the
 * node-based live test) can supply a non-browser implementation.
 */

export type ConnectionState = "connecting" | "connected" | "reconnecting" | "disconnected";

// structural subset of both the DOM WebSocket and the `ws` package client;
// `any` on the event parameters sidesteps their incompatible event types
export interface WebSocketLike {
  readyState: number;
  send(data: string): void;
  close(): void;
  onopen: ((ev: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
  onclose: ((ev: any) => void) | null;
  onerror: ((ev: any) => void) | null;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export interface SocketHooks {
  onLine(line: string): void;
  onStateChange(state: ConnectionState): void;
}

const BACKOFF_BASE_MS = 500;
const BACKOFF_MAX_MS = 10_000;
const WS_OPEN = 1;

export class ReconnectingSocket {
  private ws: WebSocketLike | null = null;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private attempt = 0;
  private shouldReconnect = false;

  constructor(
    readonly url: string,
    private readonly hooks: SocketHooks,
    private readonly factory: WebSocketFactory,
  ) {}

  connect(): void {
    this.shouldReconnect = true;
    this.hooks.onStateChange("connecting");
    this.open();
  }

  /** Send one protocol line; returns false when not connected. */
  send(line: string): boolean {
    if (this.ws !== null && this.ws.readyState === WS_OPEN) {
      this.ws.send(line);
      return true;
    }
    return false;
  }

  get connected(): boolean {
    return this.ws !== null && this.ws.readyState === WS_OPEN;
  }

  disconnect(): void {
    this.shouldReconnect = false;
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    if (this.ws !== null) {
      const ws = this.ws;
      this.ws = null;
      try {
        ws.close();
      } catch {
        // already dead
      }
    }
    this.hooks.onStateChange("disconnected");
  }

  private open(): void {
    let ws: WebSocketLike;
    try {
      ws = this.factory(this.url);
    } catch {
      this.scheduleReconnect();
      return;
    }
    this.ws = ws;
    ws.onopen = () => {
      this.attempt = 0;
      this.hooks.onStateChange("connected");
    };
    ws.onmessage = (ev) => {
      this.hooks.onLine(String(ev.data));
    };
    ws.onclose = () => {
      if (this.ws !== ws) {
        return; // superseded
      }
      this.ws = null;
      if (this.shouldReconnect) {
        this.scheduleReconnect();
      } else {
        this.hooks.onStateChange("disconnected");
      }
    };
    ws.onerror = () => {
      // onclose follows and drives the reconnect
    };
  }

  private scheduleReconnect(): void {
    this.hooks.onStateChange("reconnecting");
    const delay = Math.min(BACKOFF_BASE_MS * 2 ** this.attempt, BACKOFF_MAX_MS);
    this.attempt += 1;
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      if (this.shouldReconnect) {
        this.open();
      }
    }, delay);
  }
}
