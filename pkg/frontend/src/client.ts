/**
 * WebSocket client for the stream server: parses frames, reconnects
 * with exponential backoff, and queues controls sent while offline
 * (discarded with a notice after 5 seconds — a stale gesture should
 * not fire into a session that has long moved on).
 *
 * The socket, timer and clock are injected so tests drive the client
 * deterministically; the browser shell passes the real ones.
 */

import {
  makeControl,
  parseServerMessage,
  type ControlKind,
  type FrameMessage,
} from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
}

export interface ClientHooks {
  onFrame(frame: FrameMessage): void;
  onServerError(message: string): void;
  onConnection(state: "connecting" | "connected" | "disconnected"): void;
  /** Called when queued controls are dropped as too old. */
  onDiscarded(kinds: ControlKind[]): void;
}

export interface ClientOptions {
  socketFactory: (url: string) => SocketLike;
  setTimer: (fn: () => void, ms: number) => unknown;
  clearTimer: (handle: unknown) => void;
  now: () => number;
  /** First reconnect delay in ms; doubles per attempt. */
  backoffBaseMs?: number;
  backoffMaxMs?: number;
  queueTtlMs?: number;
}

interface QueuedControl {
  kind: ControlKind;
  value: number | undefined;
  queuedAt: number;
}

export class DashboardClient {
  private socket: SocketLike | null = null;
  private open = false;
  private stopped = false;
  private attempts = 0;
  private reconnectTimer: unknown = null;
  private queue: QueuedControl[] = [];
  private readonly backoffBase: number;
  private readonly backoffMax: number;
  private readonly queueTtl: number;

  constructor(
    private readonly url: string,
    private readonly hooks: ClientHooks,
    private readonly options: ClientOptions,
  ) {
    this.backoffBase = options.backoffBaseMs ?? 500;
    this.backoffMax = options.backoffMaxMs ?? 8000;
    this.queueTtl = options.queueTtlMs ?? 5000;
  }

  connect(): void {
    if (this.stopped) return;
    this.hooks.onConnection("connecting");
    const socket = this.options.socketFactory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.open = true;
      this.attempts = 0;
      this.hooks.onConnection("connected");
      this.flushQueue();
    };
    socket.onmessage = (event) => {
      if (typeof event.data !== "string") return;
      const msg = parseServerMessage(event.data);
      if (msg === null) return;
      if (msg.type === "frame") {
        this.hooks.onFrame(msg);
      } else {
        this.hooks.onServerError(msg.message);
      }
    };
    const onDrop = () => {
      if (this.socket !== socket) return; // stale socket callbacks
      this.open = false;
      this.socket = null;
      if (this.stopped) return;
      this.hooks.onConnection("disconnected");
      this.scheduleReconnect();
    };
    socket.onclose = onDrop;
    socket.onerror = onDrop;
  }

  /** Emit one control for one user gesture (or queue it while offline). */
  sendControl(kind: ControlKind, value?: number): void {
    if (this.open && this.socket !== null) {
      this.socket.send(JSON.stringify(makeControl(kind, value)));
    } else {
      this.queue.push({ kind, value, queuedAt: this.options.now() });
    }
  }

  close(): void {
    this.stopped = true;
    if (this.reconnectTimer !== null) {
      this.options.clearTimer(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.socket?.close();
    this.socket = null;
    this.open = false;
  }

  private scheduleReconnect(): void {
    const delay = Math.min(this.backoffMax, this.backoffBase * 2 ** this.attempts);
    this.attempts += 1;
    this.reconnectTimer = this.options.setTimer(() => {
      this.reconnectTimer = null;
      this.connect();
    }, delay);
  }

  private flushQueue(): void {
    const now = this.options.now();
    const pending = this.queue;
    this.queue = [];
    const discarded: ControlKind[] = [];
    for (const item of pending) {
      if (now - item.queuedAt > this.queueTtl) {
        discarded.push(item.kind);
      } else {
        this.sendControl(item.kind, item.value);
      }
    }
    if (discarded.length > 0) {
      this.hooks.onDiscarded(discarded);
    }
  }
}
