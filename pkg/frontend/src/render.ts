// Top-down canvas rendering of the latest world state. Drawing goes through
// the Draw2D subset so tests can record calls instead of rasterizing.

import { Camera, Viewport, heightColor, matToScreen, scalePxPerM } from "./mapping.js";
import { ViewState } from "./state.js";

export interface Draw2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  globalAlpha: number;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  rect(x: number, y: number, w: number, h: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  stroke(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  save(): void;
  restore(): void;
  translate(x: number, y: number): void;
  rotate(rad: number): void;
}

export const ROBOT_SIZE_M = 0.047;

export function render(view: ViewState, ctx: Draw2D, vp: Viewport, cam: Camera): void {
  ctx.clearRect(0, 0, vp.width, vp.height);
  ctx.fillStyle = "#11151c";
  ctx.fillRect(0, 0, vp.width, vp.height);

  const world = view.world;
  if (world === null) {
    ctx.fillStyle = "#8899aa";
    ctx.font = "14px sans-serif";
    ctx.fillText(view.status === "connected" ? "waiting for world state..." : "disconnected", 16, 24);
    return;
  }

  const s = scalePxPerM(vp, cam);
  const [x0, y0] = matToScreen(vp, cam, 0, world.bounds[1]);

  // Mat
  ctx.fillStyle = "#1d2430";
  ctx.fillRect(x0, y0, world.bounds[0] * s, world.bounds[1] * s);
  ctx.strokeStyle = "#46556a";
  ctx.lineWidth = 1.5;
  ctx.strokeRect(x0, y0, world.bounds[0] * s, world.bounds[1] * s);

  // Touchable regions
  for (const region of world.regions) {
    if (region.outline.length < 3) continue;
    ctx.beginPath();
    const [fx, fy] = matToScreen(vp, cam, region.outline[0]![0], region.outline[0]![1]);
    ctx.moveTo(fx, fy);
    for (const [rx, ry] of region.outline.slice(1)) {
      const [px, py] = matToScreen(vp, cam, rx, ry);
      ctx.lineTo(px, py);
    }
    ctx.closePath();
    ctx.globalAlpha = 0.25;
    ctx.fillStyle = heightColor(region.peak_height);
    ctx.fill();
    ctx.globalAlpha = 1.0;
    ctx.strokeStyle = "#5a6f88";
    ctx.lineWidth = 1;
    ctx.stroke();
  }

  // Assignment lines
  ctx.strokeStyle = "#7f8fa6";
  ctx.lineWidth = 1;
  for (const robot of world.robots) {
    if (!robot.target) continue;
    const [ax, ay] = matToScreen(vp, cam, robot.x, robot.y);
    const [bx, by] = matToScreen(vp, cam, robot.target[0], robot.target[1]);
    ctx.beginPath();
    ctx.moveTo(ax, ay);
    ctx.lineTo(bx, by);
    ctx.stroke();
  }

  // Robots: squares colored by height, tilt-direction glyph, stop-band ring
  for (const robot of world.robots) {
    const [px, py] = matToScreen(vp, cam, robot.x, robot.y);
    const half = (ROBOT_SIZE_M / 2) * s;
    ctx.save();
    ctx.translate(px, py);
    ctx.rotate((-robot.yaw * Math.PI) / 180);
    ctx.fillStyle = heightColor(robot.height);
    ctx.fillRect(-half, -half, 2 * half, 2 * half);
    ctx.strokeStyle = robot.id === view.selectedRobot ? "#ffd166" : "#0b0e13";
    ctx.lineWidth = robot.id === view.selectedRobot ? 2.5 : 1;
    ctx.strokeRect(-half, -half, 2 * half, 2 * half);
    // tilt glyph: a bar along the tilt axis whose reach encodes the angle
    const tiltFrac = Math.min(Math.abs(robot.tilt) / 60, 1);
    if (tiltFrac > 0.02) {
      ctx.strokeStyle = "#0b0e13";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.moveTo(-half * tiltFrac, 0);
      ctx.lineTo(half * tiltFrac, 0);
      ctx.stroke();
      ctx.beginPath();
      ctx.arc(Math.sign(robot.tilt) * half * tiltFrac, 0, 2.5, 0, 2 * Math.PI);
      ctx.fill();
    }
    ctx.restore();
    if (robot.in_stop_band) {
      ctx.strokeStyle = "#39d98a";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(px, py, half * 1.5, 0, 2 * Math.PI);
      ctx.stroke();
    }
    if (robot.grasped) {
      ctx.fillStyle = "#ffd166";
      ctx.font = "11px sans-serif";
      ctx.fillText("lifted", px + half + 3, py - half);
    }
  }

  // Finger cursor with contact indicator
  if (world.finger) {
    const [fx, fy] = matToScreen(vp, cam, world.finger[0], world.finger[1]);
    ctx.beginPath();
    ctx.arc(fx, fy, 7, 0, 2 * Math.PI);
    if (world.finger_contact) {
      ctx.fillStyle = "#ff6b6b";
      ctx.fill();
    } else {
      ctx.strokeStyle = "#ff6b6b";
      ctx.lineWidth = 2;
      ctx.stroke();
    }
  }

  // Status line and badges
  ctx.fillStyle = "#8899aa";
  ctx.font = "12px sans-serif";
  ctx.fillText(
    `tick ${world.tick}  t=${world.time.toFixed(2)}s  robots ${world.robots.length}` +
      `  regions ${world.regions.length}  z=${(view.fingerZ * 100).toFixed(1)}cm` +
      (world.paused ? "  PAUSED" : ""),
    12, vp.height - 12,
  );
  if (view.outOfBounds) {
    ctx.fillStyle = "#ffd166";
    ctx.fillText("pointer outside mat (clamped)", 12, vp.height - 28);
  }
  if (view.errorBadge) {
    ctx.fillStyle = "#ff6b6b";
    ctx.fillText(`error: ${view.errorBadge}`, 12, 18);
  }
}
