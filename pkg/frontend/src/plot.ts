// Trajectory plot: NED convention, north up, east right.

import { TrajectoryBuffer } from "./state.js";

export interface Viewport {
  /** world meters per css pixel */
  scale: number;
  centerN: number;
  centerE: number;
}

/** Autoscale so every point plus the origin fits with a margin. */
export function computeViewport(
  traj: TrajectoryBuffer,
  widthPx: number,
  heightPx: number,
  marginFrac = 0.1,
): Viewport {
  let minN = 0, maxN = 0, minE = 0, maxE = 0; // origin always included
  for (let i = 0; i < traj.length; i++) {
    const p = traj.at(i);
    minN = Math.min(minN, p.n);
    maxN = Math.max(maxN, p.n);
    minE = Math.min(minE, p.e);
    maxE = Math.max(maxE, p.e);
  }
  const spanN = Math.max(maxN - minN, 1.0);
  const spanE = Math.max(maxE - minE, 1.0);
  const usable = 1 - 2 * marginFrac;
  const scale = Math.max(spanE / (widthPx * usable), spanN / (heightPx * usable));
  return { scale, centerN: (minN + maxN) / 2, centerE: (minE + maxE) / 2 };
}

/** World (n, e) to canvas (x, y): east right, north up. */
export function worldToCanvas(
  n: number,
  e: number,
  vp: Viewport,
  widthPx: number,
  heightPx: number,
): { x: number; y: number } {
  return {
    x: widthPx / 2 + (e - vp.centerE) / vp.scale,
    y: heightPx / 2 - (n - vp.centerN) / vp.scale,
  };
}

export function drawTrajectory(
  ctx: CanvasRenderingContext2D,
  traj: TrajectoryBuffer,
  widthPx: number,
  heightPx: number,
): void {
  ctx.clearRect(0, 0, widthPx, heightPx);
  const vp = computeViewport(traj, widthPx, heightPx);

  // origin marker (the navigation frame / beacon reference)
  const origin = worldToCanvas(0, 0, vp, widthPx, heightPx);
  ctx.strokeStyle = "#777";
  ctx.beginPath();
  ctx.moveTo(origin.x - 6, origin.y);
  ctx.lineTo(origin.x + 6, origin.y);
  ctx.moveTo(origin.x, origin.y - 6);
  ctx.lineTo(origin.x, origin.y + 6);
  ctx.stroke();

  if (traj.length === 0) return;
  ctx.strokeStyle = "#4fc3f7";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  for (let i = 0; i < traj.length; i++) {
    const p = traj.at(i);
    const c = worldToCanvas(p.n, p.e, vp, widthPx, heightPx);
    if (i === 0) ctx.moveTo(c.x, c.y);
    else ctx.lineTo(c.x, c.y);
  }
  ctx.stroke();

  const last = traj.at(traj.length - 1);
  const c = worldToCanvas(last.n, last.e, vp, widthPx, heightPx);
  ctx.fillStyle = "#ffca28";
  ctx.beginPath();
  ctx.arc(c.x, c.y, 4, 0, 2 * Math.PI);
  ctx.fill();
}
