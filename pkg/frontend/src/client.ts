// Gateway WebSocket client with automatic reconnect.

import { Backoff } from "./backoff.js";
import { GatewayEvent, parseGatewayEvent, SteerMessage } from "./protocol.js";
import { Steer } from "./stick.js";

export interface SocketLike {
  onopen: ((ev: unknown) => void) | null;
  onclose: ((ev: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  send(data: string): void;
  close(): void;
  readyState: number;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientCallbacks {
  onEvent(ev: GatewayEvent): void;
  onConnected(): void;
  onDisconnected(): void;
}

const OPEN = 1;

export class GatewayClient {
  private sock: SocketLike | null = null;
  private backoff = new Backoff();
  private closed = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly url: string,
    private readonly callbacks: ClientCallbacks,
    private readonly factory: SocketFactory = (u) =>
      new WebSocket(u) as unknown as SocketLike,
  ) {}

  connect(): void {
    if (this.closed) return;
    const sock = this.factory(this.url);
    this.sock = sock;
    sock.onopen = () => {
      this.backoff.reset();
      this.callbacks.onConnected();
    };
    sock.onclose = () => {
      this.callbacks.onDisconnected();
      this.scheduleReconnect();
    };
    sock.onmessage = (ev) => {
      const parsed = parseGatewayEvent(ev.data);
      if (parsed) this.callbacks.onEvent(parsed);
    };
  }

  private scheduleReconnect(): void {
    if (this.closed || this.reconnectTimer !== null) return;
    const delay = this.backoff.nextDelayMs();
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      this.connect();
    }, delay);
  }

  sendSteer(steer: Steer): boolean {
    if (this.sock === null || this.sock.readyState !== OPEN) return false;
    const msg: SteerMessage = { kind: "steer", ...steer };
    this.sock.send(JSON.stringify(msg));
    return true;
  }

  close(): void {
    this.closed = true;
    if (this.reconnectTimer !== null) clearTimeout(this.reconnectTimer);
    this.sock?.close();
  }
}

export function gatewayUrl(loc: { protocol: string; host: string }, token: string): string {
  const scheme = loc.protocol === "https:" ? "wss:" : "ws:";
  const suffix = token ? `?token=${encodeURIComponent(token)}` : "";
  return `${scheme}//${loc.host}/ws${suffix}`;
}
