import { Action } from "./protocol.js";

export const MIN_DRAG_PX = 10;

export interface DragGesture {
  start: [number, number]; // image pixels (u, v)
  end: [number, number];
}

/** Length of a drag in pixels. */
export function dragLength(g: DragGesture): number {
  return Math.hypot(g.end[0] - g.start[0], g.end[1] - g.start[1]);
}

/**
 * Map a drag to a push action: start pixel -> (u, v), drag direction ->
 * alpha_deg (image axes: +u right, +v down; drag right is 0, drag down 90).
 * Yaw defaults to perpendicular to the push unless the operator offsets it.
 * Returns null for drags under MIN_DRAG_PX — the caller shows a warning.
 */
export function dragToPush(g: DragGesture, yawOffsetDeg = 0): Action | null {
  if (dragLength(g) < MIN_DRAG_PX) return null;
  const du = g.end[0] - g.start[0];
  const dv = g.end[1] - g.start[1];
  let alpha = (Math.atan2(dv, du) * 180) / Math.PI;
  if (Object.is(alpha, -0)) alpha = 0;
  return {
    type: "push",
    u: Math.round(g.start[0]),
    v: Math.round(g.start[1]),
    alpha_deg: alpha,
    phi_deg: alpha + 90 + yawOffsetDeg,
  };
}

/** Point-in-polygon test used for grasp clicks on object outlines. */
export function pointInOutline(
  poly: Array<[number, number]>,
  u: number,
  v: number,
): boolean {
  let inside = false;
  for (let i = 0, j = poly.length - 1; i < poly.length; j = i++) {
    const [xi, yi] = poly[i];
    const [xj, yj] = poly[j];
    if (yi > v !== yj > v && u < ((xj - xi) * (v - yi)) / (yj - yi) + xi) {
      inside = !inside;
    }
  }
  return inside;
}

/** Grasp click: picks the topmost outline containing the pixel, or null. */
export function clickToGrasp(
  outlines: Record<string, Array<[number, number]>>,
  ranking: number[],
  u: number,
  v: number,
): Action | null {
  for (const oid of ranking) {
    const poly = outlines[String(oid)];
    if (poly && pointInOutline(poly, u, v)) {
      return { type: "grasp", object_id: oid };
    }
  }
  return null;
}
