// Coordinate mapping between the mat frame (meters, y up) and canvas pixels
// (y down), with pan/zoom. Also the height color scale for the robot glyphs.

export interface Camera {
  zoom: number;              // pixels per meter multiplier on top of the fit
  panX: number;              // pixels
  panY: number;
}

export const DEFAULT_CAMERA: Camera = { zoom: 1.0, panX: 0, panY: 0 };

export interface Viewport {
  width: number;             // canvas pixels
  height: number;
  bounds: [number, number];  // mat extent in meters
}

const MARGIN_PX = 24;

export function scalePxPerM(vp: Viewport, cam: Camera): number {
  const fit = Math.min(
    (vp.width - 2 * MARGIN_PX) / vp.bounds[0],
    (vp.height - 2 * MARGIN_PX) / vp.bounds[1],
  );
  return fit * cam.zoom;
}

export function matToScreen(vp: Viewport, cam: Camera, x: number, y: number): [number, number] {
  const s = scalePxPerM(vp, cam);
  const ox = (vp.width - s * vp.bounds[0]) / 2 + cam.panX;
  const oy = (vp.height - s * vp.bounds[1]) / 2 + cam.panY;
  return [ox + x * s, oy + (vp.bounds[1] - y) * s];
}

export function screenToMat(vp: Viewport, cam: Camera, px: number, py: number): [number, number] {
  const s = scalePxPerM(vp, cam);
  const ox = (vp.width - s * vp.bounds[0]) / 2 + cam.panX;
  const oy = (vp.height - s * vp.bounds[1]) / 2 + cam.panY;
  return [(px - ox) / s, vp.bounds[1] - (py - oy) / s];
}

export function clampToMat(bounds: [number, number], x: number, y: number):
    { x: number; y: number; clamped: boolean } {
  const cx = Math.min(Math.max(x, 0), bounds[0]);
  const cy = Math.min(Math.max(y, 0), bounds[1]);
  return { x: cx, y: cy, clamped: cx !== x || cy !== y };
}

// Height color scale over the 8-32 cm actuator range: low = deep blue,
// high = warm yellow.
export const HEIGHT_RANGE: [number, number] = [0.08, 0.32];

export function heightColor(height: number): string {
  const [lo, hi] = HEIGHT_RANGE;
  const f = Math.min(Math.max((height - lo) / (hi - lo), 0), 1);
  const r = Math.round(30 + 225 * f);
  const g = Math.round(60 + 160 * f);
  const b = Math.round(160 - 120 * f);
  return `rgb(${r},${g},${b})`;
}
