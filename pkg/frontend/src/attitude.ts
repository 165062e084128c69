// Quaternion (w, x, y, z, body to NED) to display angles.

export interface Euler {
  rollDeg: number;
  pitchDeg: number;
  yawDeg: number;
}

const DEG = 180 / Math.PI;

export function quatToEuler(w: number, x: number, y: number, z: number): Euler {
  const roll = Math.atan2(2 * (w * x + y * z), 1 - 2 * (x * x + y * y));
  const sp = 2 * (w * y - z * x);
  const pitch = Math.abs(sp) >= 1 ? Math.sign(sp) * (Math.PI / 2) : Math.asin(sp);
  const yaw = Math.atan2(2 * (w * z + x * y), 1 - 2 * (y * y + z * z));
  return { rollDeg: roll * DEG, pitchDeg: pitch * DEG, yawDeg: yaw * DEG };
}

/** Heading in [0, 360) for the compass readout. */
export function headingDeg(yawDeg: number): number {
  return ((yawDeg % 360) + 360) % 360;
}
