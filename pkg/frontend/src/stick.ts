// Virtual joystick and keyboard steering.
//
// The emitter sends at most one steer message per 50 ms while engaged, and
// exactly one zero command on release; non-finite or out-of-range values
// never leave this module.

export interface Steer {
  surge: number;
  heave: number;
  yaw: number;
}

export const ZERO_STEER: Steer = { surge: 0, heave: 0, yaw: 0 };
export const EMIT_PERIOD_MS = 50; // 20 Hz

function clampAxis(v: number): number {
  if (!Number.isFinite(v)) return 0;
  return Math.max(-1, Math.min(1, v));
}

export function clampSteer(s: Steer): Steer {
  return { surge: clampAxis(s.surge), heave: clampAxis(s.heave), yaw: clampAxis(s.yaw) };
}

export function isZero(s: Steer): boolean {
  return s.surge === 0 && s.heave === 0 && s.yaw === 0;
}

/**
 * Pointer offset on the stick pad to steer values: up = surge forward,
 * right = yaw clockwise. Offsets beyond the pad radius saturate.
 */
export function padToSteer(dx: number, dy: number, radius: number, heave = 0): Steer {
  return clampSteer({ surge: -dy / radius, heave, yaw: dx / radius });
}

/** Keyboard axes ramp toward full deflection while held (full scale in 0.5 s). */
export class KeyRamp {
  private value = 0;
  static readonly RATE = 2.0; // full-scale units per second

  update(direction: -1 | 0 | 1, dtMs: number): number {
    const step = (KeyRamp.RATE * dtMs) / 1000;
    if (direction === 0) {
      this.value = 0; // keys release crisply, no ramp-down
    } else {
      this.value = clampAxis(this.value + direction * step);
    }
    return this.value;
  }
}

export type SendFn = (s: Steer) => void;

/**
 * Rate-limited steer stream. Drive it with an external 50 ms timer via
 * tick(); engage()/release() may be called at any rate from UI events.
 */
export class SteerEmitter {
  private current: Steer | null = null; // null = not engaged
  private releaseQueued = false;
  sent = 0;

  constructor(private readonly send: SendFn) {}

  engage(steer: Steer): void {
    this.current = clampSteer(steer);
    this.releaseQueued = false;
  }

  release(): void {
    if (this.current !== null) {
      this.current = null;
      this.releaseQueued = true;
    }
  }

  get engaged(): boolean {
    return this.current !== null;
  }

  tick(): void {
    if (this.current !== null) {
      this.send(this.current);
      this.sent += 1;
    } else if (this.releaseQueued) {
      this.send({ ...ZERO_STEER });
      this.sent += 1;
      this.releaseQueued = false;
    }
  }
}
