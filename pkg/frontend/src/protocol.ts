// Gateway wire protocol: JSON text messages over /ws.

export type EventKind = "telemetry" | "peer_status" | "ack";

export interface GatewayEvent {
  kind: EventKind;
  topic: string | null;
  t: number;
  payload: Record<string, number>;
}

export interface SteerMessage {
  kind: "steer";
  surge: number;
  heave: number;
  yaw: number;
}

// peer liveness codes as sent by the gateway
export const PEER_ALIVE = 2;
export const PEER_SUSPECT = 1;
export const PEER_DOWN = 0;
export type PeerCode = typeof PEER_ALIVE | typeof PEER_SUSPECT | typeof PEER_DOWN;

export function peerLabel(code: number): string {
  if (code >= PEER_ALIVE) return "ALIVE";
  if (code >= PEER_SUSPECT) return "SUSPECT";
  return "DOWN";
}

export function parseGatewayEvent(raw: string): GatewayEvent | null {
  let parsed: unknown;
  try {
    parsed = JSON.parse(raw);
  } catch {
    return null;
  }
  const ev = parsed as GatewayEvent;
  if (
    !ev ||
    (ev.kind !== "telemetry" && ev.kind !== "peer_status" && ev.kind !== "ack") ||
    typeof ev.t !== "number" ||
    typeof ev.payload !== "object" ||
    ev.payload === null
  ) {
    return null;
  }
  return ev;
}
