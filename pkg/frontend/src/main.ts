// Operator console: wires the gateway client, state store and widgets.

import { quatToEuler, headingDeg } from "./attitude.js";
import { GatewayClient, gatewayUrl } from "./client.js";
import { drawTrajectory } from "./plot.js";
import { peerLabel } from "./protocol.js";
import {
  applyEvent,
  initialState,
  markConnected,
  markConnectionLost,
} from "./state.js";
import { EMIT_PERIOD_MS, KeyRamp, padToSteer, SteerEmitter } from "./stick.js";

const state = initialState();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const banner = el<HTMLDivElement>("banner");
const healthGrid = el<HTMLDivElement>("health-grid");
const readouts = el<HTMLDivElement>("readouts");
const canvas = el<HTMLCanvasElement>("trajectory");
const pad = el<HTMLDivElement>("stick-pad");
const knob = el<HTMLDivElement>("stick-knob");
const heaveSlider = el<HTMLInputElement>("heave");

const token = new URLSearchParams(location.search).get("token") ?? "";
const client = new GatewayClient(gatewayUrl(location, token), {
  onEvent(ev) {
    applyEvent(state, ev);
  },
  onConnected() {
    markConnected(state);
  },
  onDisconnected() {
    markConnectionLost(state, true);
  },
});
client.connect();

// ---- steering --------------------------------------------------------------

const emitter = new SteerEmitter((steer) => client.sendSteer(steer));
setInterval(() => emitter.tick(), EMIT_PERIOD_MS);

let dragging = false;

function padRadius(): number {
  return pad.clientWidth / 2;
}

function handlePointer(ev: PointerEvent): void {
  const rect = pad.getBoundingClientRect();
  const dx = ev.clientX - (rect.left + rect.width / 2);
  const dy = ev.clientY - (rect.top + rect.height / 2);
  const steer = padToSteer(dx, dy, padRadius(), parseFloat(heaveSlider.value));
  emitter.engage(steer);
  const r = padRadius();
  knob.style.transform = `translate(${steer.yaw * r * 0.8}px, ${-steer.surge * r * 0.8}px)`;
}

pad.addEventListener("pointerdown", (ev) => {
  dragging = true;
  pad.setPointerCapture(ev.pointerId);
  handlePointer(ev);
});
pad.addEventListener("pointermove", (ev) => {
  if (dragging) handlePointer(ev);
});
function endDrag(): void {
  if (!dragging) return;
  dragging = false;
  emitter.release();
  knob.style.transform = "translate(0, 0)";
}
pad.addEventListener("pointerup", endDrag);
pad.addEventListener("pointercancel", endDrag);

// keyboard: arrows = surge/yaw, q/e = heave, ramped while held
const held = new Set<string>();
const surgeRamp = new KeyRamp();
const yawRamp = new KeyRamp();
const heaveRamp = new KeyRamp();

window.addEventListener("keydown", (ev) => held.add(ev.key));
window.addEventListener("keyup", (ev) => held.delete(ev.key));

setInterval(() => {
  if (dragging) return; // pointer wins
  const dir = (neg: string, pos: string): -1 | 0 | 1 =>
    held.has(pos) ? 1 : held.has(neg) ? -1 : 0;
  const surge = surgeRamp.update(dir("ArrowDown", "ArrowUp"), EMIT_PERIOD_MS);
  const yaw = yawRamp.update(dir("ArrowLeft", "ArrowRight"), EMIT_PERIOD_MS);
  const heave = heaveRamp.update(dir("q", "e"), EMIT_PERIOD_MS);
  const any = surge !== 0 || yaw !== 0 || heave !== 0;
  if (any) {
    emitter.engage({ surge, heave, yaw });
  } else if (emitter.engaged) {
    emitter.release();
  }
}, EMIT_PERIOD_MS);

// ---- rendering -------------------------------------------------------------

function fmt(v: number | undefined, digits = 2): string {
  return v === undefined || !Number.isFinite(v) ? "—" : v.toFixed(digits);
}

function renderHealth(): void {
  const names = [...state.peers.keys()].sort();
  healthGrid.replaceChildren(
    ...names.map((name) => {
      const code = state.peers.get(name);
      const tile = document.createElement("div");
      const label = code === null || code === undefined ? "UNKNOWN" : peerLabel(code);
      tile.className = `tile ${label.toLowerCase()}`;
      tile.textContent = `${name}\n${label}`;
      return tile;
    }),
  );
}

function renderReadouts(): void {
  const depth = state.latest.get("/depth")?.payload.depth_m;
  const altitude = state.latest.get("/altitude")?.payload.altitude_m;
  const att = state.latest.get("/imu/attitude")?.payload;
  const pwm = state.latest.get("/pwm_state")?.payload;
  let attLine = "—";
  if (att) {
    const e = quatToEuler(att.qw, att.qx, att.qy, att.qz);
    attLine = `hdg ${fmt(headingDeg(e.yawDeg), 1)}°  pitch ${fmt(e.pitchDeg, 1)}°  roll ${fmt(e.rollDeg, 1)}°`;
  }
  const pwmLine = pwm
    ? `${pwm.pwm1} ${pwm.pwm2} ${pwm.pwm3} ${pwm.pwm4} µs`
    : "—";
  readouts.innerHTML = "";
  for (const [label, value] of [
    ["depth", `${fmt(depth)} m`],
    ["altitude", `${fmt(altitude)} m`],
    ["attitude", attLine],
    ["pwm", pwmLine],
  ]) {
    const row = document.createElement("div");
    row.className = "readout";
    row.textContent = `${label}: ${value}`;
    readouts.appendChild(row);
  }
}

function renderBanner(): void {
  banner.textContent =
    state.connection === "connected" ? "link up" : `link ${state.connection}…`;
  banner.className = state.connection;
}

function frame(): void {
  renderBanner();
  renderHealth();
  renderReadouts();
  const ctx = canvas.getContext("2d");
  if (ctx) drawTrajectory(ctx, state.trajectory, canvas.width, canvas.height);
  requestAnimationFrame(frame);
}

requestAnimationFrame(frame);
window.addEventListener("beforeunload", () => {
  emitter.release();
  emitter.tick(); // best effort: push the final zero out now
  client.close();
});
