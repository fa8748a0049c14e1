// Gateway client: one WebSocket to the session service, pointer-to-finger
// mapping with a 60 Hz latest-wins throttle, and the control surface.

import { clampToMat, screenToMat, Camera, Viewport } from "./mapping.js";
import { ControlAction, encodeControl, encodeHandInput } from "./protocol.js";
import { ingestFrame, initialViewState, ViewState } from "./state.js";
import { Clock, latestWinsThrottle, systemClock } from "./throttle.js";

export const HAND_RATE_HZ = 60;

// Minimal socket surface so browsers (global WebSocket) and tests (ws) both fit.
export interface SocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: "open" | "message" | "close" | "error",
                   handler: (event: { data?: unknown }) => void): void;
}

export type SocketFactory = (url: string) => SocketLike;

export class GatewayClient {
  readonly view: ViewState = initialViewState();
  private socket: SocketLike | null = null;
  private readonly sendHandThrottled: (p: { x: number; y: number; z: number }) => void;
  private lastSent: { x: number; y: number; z: number } | null = null;
  handMessagesSent = 0;

  constructor(
    private readonly makeSocket: SocketFactory,
    private readonly onChange: () => void = () => {},
    clock: Clock = systemClock,
  ) {
    this.sendHandThrottled = latestWinsThrottle((p) => {
      if (this.socket && this.view.status === "connected") {
        this.socket.send(encodeHandInput(p.x, p.y, p.z));
        this.handMessagesSent += 1;
      }
    }, HAND_RATE_HZ, clock);
  }

  connect(url: string): void {
    this.view.status = "connecting";
    const socket = this.makeSocket(url);
    this.socket = socket;
    socket.addEventListener("open", () => {
      this.view.status = "connected";
      this.onChange();
    });
    socket.addEventListener("message", (event) => {
      if (typeof event.data === "string" && ingestFrame(this.view, event.data)) {
        this.onChange();
      }
    });
    socket.addEventListener("close", () => {
      this.view.status = "disconnected";
      this.socket = null;
      this.onChange();
    });
    socket.addEventListener("error", () => {
      this.view.errorBadge = "socket error";
      this.onChange();
    });
  }

  disconnect(): void {
    this.socket?.close();
    this.socket = null;
    this.view.status = "disconnected";
  }

  // Pointer event in canvas pixels: map to the mat frame, clamp to the
  // boundary (with a badge), dedupe, and emit at most 60 Hz, latest wins.
  pointerMoved(vp: Viewport, cam: Camera, px: number, py: number): void {
    if (this.view.status !== "connected") return;
    const [mx, my] = screenToMat(vp, cam, px, py);
    const bounds = this.view.world?.bounds ?? vp.bounds;
    const { x, y, clamped } = clampToMat(bounds, mx, my);
    this.view.outOfBounds = clamped;
    this.sendHand(x, y, this.view.fingerZ);
  }

  sendHand(x: number, y: number, z: number): void {
    const last = this.lastSent;
    if (last && last.x === x && last.y === y && last.z === z) {
      return;  // stationary pointer: nothing new to say
    }
    this.lastSent = { x, y, z };
    this.sendHandThrottled({ x, y, z });
  }

  sendControl(action: ControlAction): void {
    if (this.socket && this.view.status === "connected") {
      this.socket.send(encodeControl(action));
    }
  }
}
