import { beforeEach, describe, expect, it, vi } from "vitest";

import {
  clampSteer,
  EMIT_PERIOD_MS,
  KeyRamp,
  padToSteer,
  Steer,
  SteerEmitter,
} from "../src/stick.js";

function rig() {
  const sent: Steer[] = [];
  const emitter = new SteerEmitter((s) => sent.push(s));
  const timer = setInterval(() => emitter.tick(), EMIT_PERIOD_MS);
  return { sent, emitter, timer };
}

describe("SteerEmitter", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });

  it("emits between 18 and 22 messages per second while engaged", () => {
    const { sent, emitter, timer } = rig();
    emitter.engage({ surge: 0.5, heave: 0, yaw: 0 });
    vi.advanceTimersByTime(1000);
    clearInterval(timer);
    expect(sent.length).toBeGreaterThanOrEqual(18);
    expect(sent.length).toBeLessThanOrEqual(22);
    expect(sent.every((s) => s.surge === 0.5)).toBe(true);
  });

  it("release produces exactly one zero command and then silence", () => {
    const { sent, emitter, timer } = rig();
    emitter.engage({ surge: 1, heave: 0, yaw: 0.3 });
    vi.advanceTimersByTime(500);
    const beforeRelease = sent.length;
    emitter.release();
    vi.advanceTimersByTime(2000);
    clearInterval(timer);
    const after = sent.slice(beforeRelease);
    expect(after).toEqual([{ surge: 0, heave: 0, yaw: 0 }]);
  });

  it("release without prior engagement stays silent", () => {
    const { sent, emitter, timer } = rig();
    emitter.release();
    vi.advanceTimersByTime(500);
    clearInterval(timer);
    expect(sent).toEqual([]);
  });

  it("re-engaging after release resumes the stream", () => {
    const { sent, emitter, timer } = rig();
    emitter.engage({ surge: 0.2, heave: 0, yaw: 0 });
    vi.advanceTimersByTime(200);
    emitter.release();
    vi.advanceTimersByTime(200);
    emitter.engage({ surge: -0.4, heave: 0, yaw: 0 });
    vi.advanceTimersByTime(200);
    clearInterval(timer);
    expect(sent.at(-1)).toEqual({ surge: -0.4, heave: 0, yaw: 0 });
  });
});

describe("padToSteer", () => {
  it("drag to the top edge is full forward surge", () => {
    expect(padToSteer(0, -100, 100)).toEqual({ surge: 1, heave: 0, yaw: 0 });
  });

  it("drag right is positive yaw", () => {
    expect(padToSteer(50, 0, 100).yaw).toBeCloseTo(0.5);
  });

  it("overshoot beyond the pad saturates", () => {
    const s = padToSteer(400, -400, 100);
    expect(s.yaw).toBe(1);
    expect(s.surge).toBe(1);
  });
});

describe("clampSteer", () => {
  it("never passes non-finite or out-of-range values", () => {
    const s = clampSteer({ surge: Infinity, heave: NaN, yaw: -42 });
    expect(s).toEqual({ surge: 0, heave: 0, yaw: -1 });
  });
});

describe("KeyRamp", () => {
  it("ramps toward full deflection while held", () => {
    const ramp = new KeyRamp();
    let v = 0;
    for (let i = 0; i < 10; i++) v = ramp.update(1, 50);
    expect(v).toBeCloseTo(1.0);
  });

  it("releases to zero instantly", () => {
    const ramp = new KeyRamp();
    ramp.update(1, 250);
    expect(ramp.update(0, 50)).toBe(0);
  });

  it("partial hold gives partial deflection", () => {
    const ramp = new KeyRamp();
    ramp.update(1, 50);
    const v = ramp.update(1, 50);
    expect(v).toBeCloseTo(0.2);
  });
});
