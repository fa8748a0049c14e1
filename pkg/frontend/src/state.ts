// The panel's view of the session. Stateless with respect to simulation
// truth: everything rendered comes from the latest world_state; reconnecting
// reproduces the identical view from the next frame.

import { StreamMessage, WorldState, asWorldState, decodeMessage } from "./protocol.js";

export type ConnectionStatus = "disconnected" | "connecting" | "connected";

export interface ViewState {
  status: ConnectionStatus;
  world: WorldState | null;
  lastTick: number;              // stream tick guard: rendered tick never decreases
  metrics: Record<string, unknown> | null;
  errorBadge: string | null;     // latest decode/server error, shown briefly
  outOfBounds: boolean;          // pointer outside the mat
  fingerZ: number;               // slider/scroll controlled fingertip height (m)
  hoverFollow: boolean;          // z tracks the rendered surface minus 5 mm
  selectedRobot: number | null;  // for grasp/place
  staleFrames: number;           // frames skipped because they were out of order
}

export function initialViewState(): ViewState {
  return {
    status: "disconnected",
    world: null,
    lastTick: -1,
    metrics: null,
    errorBadge: null,
    outOfBounds: false,
    fingerZ: 0.15,
    hoverFollow: true,
    selectedRobot: null,
    staleFrames: 0,
  };
}

// Ingest one raw frame; returns true when the view changed.
export function ingestFrame(view: ViewState, raw: string): boolean {
  let msg: StreamMessage;
  try {
    msg = decodeMessage(raw);
  } catch (err) {
    view.errorBadge = String(err instanceof Error ? err.message : err);
    return false;
  }
  switch (msg.type) {
    case "world_state": {
      const tick = msg.tick ?? -1;
      if (tick <= view.lastTick) {
        view.staleFrames += 1;   // drop reordered/duplicate frames
        return false;
      }
      try {
        view.world = asWorldState(msg);
      } catch (err) {
        view.errorBadge = String(err instanceof Error ? err.message : err);
        return false;
      }
      view.lastTick = tick;
      if (view.hoverFollow && view.world.finger_surface != null) {
        view.fingerZ = Math.max(0, view.world.finger_surface - 0.005);
      }
      return true;
    }
    case "metrics":
      view.metrics = msg.payload;
      return true;
    case "error":
      view.errorBadge = String(msg.payload.message ?? "server error");
      return true;
    case "control_ack":
      return false;
    default:
      return false;
  }
}
