// Browser bootstrap: canvas, pointer handling, panel wiring. Redraws are
// keyed to incoming ticks (onChange), never to a local timer, so the view
// cannot misrepresent the simulation rate.

import { GatewayClient, SocketLike } from "./client.js";
import { DEFAULT_CAMERA, Viewport, screenToMat, clampToMat } from "./mapping.js";
import { ControlPanel } from "./panel.js";
import { Draw2D, render } from "./render.js";

function main(): void {
  const canvas = document.getElementById("mat") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d") as unknown as Draw2D;
  const cam = { ...DEFAULT_CAMERA };

  const vp = (): Viewport => ({
    width: canvas.width,
    height: canvas.height,
    bounds: client.view.world?.bounds ?? [0.55, 0.55],
  });

  const redraw = () => render(client.view, ctx, vp(), cam);
  const client = new GatewayClient((url) => new WebSocket(url) as unknown as SocketLike, redraw);
  const panel = new ControlPanel(client);

  const params = new URLSearchParams(window.location.search);
  const url = params.get("server") ?? `ws://${window.location.hostname || "127.0.0.1"}:8765`;
  client.connect(url);

  canvas.addEventListener("pointermove", (ev) => {
    const rect = canvas.getBoundingClientRect();
    client.pointerMoved(vp(), cam, ev.clientX - rect.left, ev.clientY - rect.top);
  });
  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    // scroll adjusts the fingertip height; 2D pointers have no z axis
    client.view.hoverFollow = false;
    client.view.fingerZ = Math.min(Math.max(client.view.fingerZ - ev.deltaY * 0.0002, 0), 0.5);
    (document.getElementById("fingerz") as HTMLInputElement).value =
      String(client.view.fingerZ);
    redraw();
  });
  canvas.addEventListener("click", (ev) => {
    const rect = canvas.getBoundingClientRect();
    const world = client.view.world;
    if (!world) return;
    const [mx, my] = screenToMat(vp(), cam, ev.clientX - rect.left, ev.clientY - rect.top);
    if (ev.shiftKey && client.view.selectedRobot !== null) {
      const { x, y } = clampToMat(world.bounds, mx, my);
      panel.placeSelected(x, y);
      return;
    }
    let best: number | null = null;
    let bestD = 0.04;  // click radius in meters
    for (const r of world.robots) {
      const d = Math.hypot(r.x - mx, r.y - my);
      if (d < bestD) { best = r.id; bestD = d; }
    }
    panel.selectRobot(best);
    redraw();
  });

  const bind = (id: string, fn: () => void) =>
    document.getElementById(id)!.addEventListener("click", fn);
  bind("pause", () => panel.pause());
  bind("resume", () => panel.resume());
  bind("reset", () => panel.reset());
  bind("grasp", () => panel.graspSelected());
  bind("loadscene", () => {
    const path = (document.getElementById("scenepath") as HTMLInputElement).value;
    if (path) panel.loadScene(path);
  });
  bind("setrobots", () => {
    const n = Number((document.getElementById("robots") as HTMLInputElement).value);
    panel.setRobots(n);
  });
  document.getElementById("fingerz")!.addEventListener("input", (ev) => {
    client.view.hoverFollow = false;
    client.view.fingerZ = Number((ev.target as HTMLInputElement).value);
    redraw();
  });
  document.getElementById("hoverfollow")!.addEventListener("change", (ev) => {
    client.view.hoverFollow = (ev.target as HTMLInputElement).checked;
  });

  redraw();
}

main();
