// Console state: what the UI renders, mutated only by gateway events.

import { GatewayEvent } from "./protocol.js";

export type Connection = "connected" | "reconnecting" | "down";

export const TRAJECTORY_CAP = 10_000;

/** Fixed-capacity FIFO of (north, east) points backing the trajectory plot. */
export class TrajectoryBuffer {
  private n: Float64Array;
  private e: Float64Array;
  private head = 0; // next write slot
  private count = 0;

  constructor(readonly capacity: number = TRAJECTORY_CAP) {
    this.n = new Float64Array(capacity);
    this.e = new Float64Array(capacity);
  }

  get length(): number {
    return this.count;
  }

  push(north: number, east: number): void {
    this.n[this.head] = north;
    this.e[this.head] = east;
    this.head = (this.head + 1) % this.capacity;
    if (this.count < this.capacity) this.count += 1;
  }

  /** Points oldest-first. */
  at(i: number): { n: number; e: number } {
    if (i < 0 || i >= this.count) throw new RangeError(`index ${i} of ${this.count}`);
    const base = this.count < this.capacity ? 0 : this.head;
    const idx = (base + i) % this.capacity;
    return { n: this.n[idx], e: this.e[idx] };
  }

  toArrays(): { n: Float64Array; e: Float64Array } {
    const n = new Float64Array(this.count);
    const e = new Float64Array(this.count);
    for (let i = 0; i < this.count; i++) {
      const p = this.at(i);
      n[i] = p.n;
      e[i] = p.e;
    }
    return { n, e };
  }
}

export interface ConsoleState {
  connection: Connection;
  /** peer name -> liveness code; null when the gateway link is down. */
  peers: Map<string, number | null>;
  latest: Map<string, { t: number; payload: Record<string, number> }>;
  trajectory: TrajectoryBuffer;
  lastAck: Record<string, number> | null;
}

export function initialState(): ConsoleState {
  return {
    connection: "down",
    peers: new Map(),
    latest: new Map(),
    trajectory: new TrajectoryBuffer(),
    lastAck: null,
  };
}

export function applyEvent(state: ConsoleState, ev: GatewayEvent): void {
  if (ev.kind === "peer_status") {
    // replace the known set: departed peers drop off the grid
    state.peers = new Map(Object.entries(ev.payload));
    return;
  }
  if (ev.kind === "ack") {
    state.lastAck = ev.payload;
    return;
  }
  if (ev.topic === null) return;
  state.latest.set(ev.topic, { t: ev.t, payload: ev.payload });
  if (ev.topic === "/pose") {
    state.trajectory.push(ev.payload.n, ev.payload.e);
  }
}

/** Connection loss: peer states are unknown, not DOWN. */
export function markConnectionLost(state: ConsoleState, reconnecting: boolean): void {
  state.connection = reconnecting ? "reconnecting" : "down";
  for (const name of state.peers.keys()) state.peers.set(name, null);
}

export function markConnected(state: ConsoleState): void {
  state.connection = "connected";
}
