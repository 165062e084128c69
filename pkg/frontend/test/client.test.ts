import { beforeEach, describe, expect, it, vi } from "vitest";

import { Backoff, MAX_DELAY_MS } from "../src/backoff.js";
import { GatewayClient, gatewayUrl, SocketLike } from "../src/client.js";
import { GatewayEvent } from "../src/protocol.js";

class FakeSocket implements SocketLike {
  onopen: ((ev: unknown) => void) | null = null;
  onclose: ((ev: unknown) => void) | null = null;
  onmessage: ((ev: { data: string }) => void) | null = null;
  sent: string[] = [];
  readyState = 0;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.readyState = 3;
    this.onclose?.({});
  }

  open(): void {
    this.readyState = 1;
    this.onopen?.({});
  }
}

describe("Backoff", () => {
  it("caps at one attempt per second in steady state", () => {
    const backoff = new Backoff();
    const delays = Array.from({ length: 10 }, () => backoff.nextDelayMs());
    expect(Math.max(...delays)).toBe(MAX_DELAY_MS);
    // after the ramp, every retry waits the full second
    expect(delays.slice(3).every((d) => d === MAX_DELAY_MS)).toBe(true);
  });

  it("resets after a successful connection", () => {
    const backoff = new Backoff();
    backoff.nextDelayMs();
    backoff.nextDelayMs();
    backoff.reset();
    expect(backoff.nextDelayMs()).toBeLessThan(MAX_DELAY_MS);
  });
});

describe("GatewayClient", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });

  function rig() {
    const sockets: FakeSocket[] = [];
    const events: GatewayEvent[] = [];
    let connected = 0;
    let disconnected = 0;
    const client = new GatewayClient(
      "ws://test/ws",
      {
        onEvent: (ev) => events.push(ev),
        onConnected: () => (connected += 1),
        onDisconnected: () => (disconnected += 1),
      },
      () => {
        const sock = new FakeSocket();
        sockets.push(sock);
        return sock;
      },
    );
    return { client, sockets, events, state: () => ({ connected, disconnected }) };
  }

  it("delivers parsed events and drops garbage", () => {
    const { client, sockets, events } = rig();
    client.connect();
    sockets[0].open();
    sockets[0].onmessage?.({
      data: JSON.stringify({ kind: "telemetry", topic: "/depth", t: 1, payload: { depth_m: 2 } }),
    });
    sockets[0].onmessage?.({ data: "{not json" });
    sockets[0].onmessage?.({ data: JSON.stringify({ kind: "mystery" }) });
    expect(events).toHaveLength(1);
    expect(events[0].payload.depth_m).toBe(2);
  });

  it("reconnects at no more than one attempt per second", () => {
    const { client, sockets } = rig();
    client.connect();
    sockets[0].open();
    sockets[0].close();
    // burn through the backoff ramp: each attempt is refused immediately
    for (let i = 0; i < 4; i++) {
      vi.advanceTimersByTime(MAX_DELAY_MS);
      sockets.at(-1)?.close();
    }
    const before = sockets.length;
    for (let i = 0; i < 3; i++) {
      vi.advanceTimersByTime(1000); // one second of continued outage
      sockets.at(-1)?.close();
    }
    expect(sockets.length - before).toBe(3); // exactly one attempt per second
  });

  it("steer messages only flow on an open socket", () => {
    const { client, sockets } = rig();
    client.connect();
    expect(client.sendSteer({ surge: 1, heave: 0, yaw: 0 })).toBe(false);
    sockets[0].open();
    expect(client.sendSteer({ surge: 1, heave: 0, yaw: 0 })).toBe(true);
    expect(JSON.parse(sockets[0].sent[0])).toEqual({
      kind: "steer",
      surge: 1,
      heave: 0,
      yaw: 0,
    });
  });

  it("close() stops the reconnect loop", () => {
    const { client, sockets } = rig();
    client.connect();
    sockets[0].open();
    client.close();
    const count = sockets.length;
    vi.advanceTimersByTime(10_000);
    expect(sockets.length).toBe(count);
  });
});

describe("gatewayUrl", () => {
  it("matches the page scheme and carries the token", () => {
    expect(gatewayUrl({ protocol: "http:", host: "vehicle:8750" }, "")).toBe(
      "ws://vehicle:8750/ws",
    );
    expect(gatewayUrl({ protocol: "https:", host: "vehicle" }, "s3cret")).toBe(
      "wss://vehicle/ws?token=s3cret",
    );
  });
});
