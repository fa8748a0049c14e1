// Wire schema of the session service, consumed verbatim. Every frame is a
// JSON object { type, schema, payload, tick? }; schema is currently 1.

export const PROTOCOL_SCHEMA = 1;

export interface RobotView {
  id: number;
  x: number;
  y: number;
  yaw: number;
  height: number;
  tilt: number;
  vx: number;
  vy: number;
  grasped: boolean;
  target: [number, number] | null;
  assignment_id: string | null;
  in_stop_band: boolean | null;
}

export interface RegionView {
  id: number;
  centroid: [number, number];
  peak_height: number;
  area_m2: number;
  outline: [number, number][];
}

export interface WorldState {
  tick: number;
  time: number;
  bounds: [number, number];
  robots: RobotView[];
  regions: RegionView[];
  finger: [number, number, number] | null;
  finger_surface?: number | null;
  finger_contact?: boolean;
  paused: boolean;
  replay?: boolean;
}

export interface StreamMessage {
  type: "world_state" | "metrics" | "hand_input" | "control" | "control_ack" | "error";
  schema: number;
  tick?: number;
  payload: Record<string, unknown>;
}

export type ControlAction =
  | { action: "pause" }
  | { action: "resume" }
  | { action: "reset" }
  | { action: "load_scene"; path: string }
  | { action: "set_robots"; count: number }
  | { action: "grasp"; robot: number; lift?: boolean }
  | { action: "place"; robot: number; x: number; y: number }
  | { action: "set_calibration"; center: [number, number]; corner: [number, number] };

export class ProtocolError extends Error {}

const TYPES = new Set(["world_state", "metrics", "hand_input", "control", "control_ack", "error"]);

export function decodeMessage(text: string): StreamMessage {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch {
    throw new ProtocolError("invalid JSON frame");
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new ProtocolError("message must be an object");
  }
  const msg = doc as Record<string, unknown>;
  if (msg.schema !== PROTOCOL_SCHEMA) {
    throw new ProtocolError(`unsupported schema ${String(msg.schema)}`);
  }
  if (typeof msg.type !== "string" || !TYPES.has(msg.type)) {
    throw new ProtocolError(`unknown message type ${String(msg.type)}`);
  }
  if (typeof msg.payload !== "object" || msg.payload === null) {
    throw new ProtocolError("payload must be an object");
  }
  return msg as unknown as StreamMessage;
}

export function encodeHandInput(x: number, y: number, z: number): string {
  return JSON.stringify({ type: "hand_input", schema: PROTOCOL_SCHEMA, payload: { x, y, z } });
}

export function encodeControl(action: ControlAction): string {
  return JSON.stringify({ type: "control", schema: PROTOCOL_SCHEMA, payload: action });
}

export function asWorldState(msg: StreamMessage): WorldState {
  const p = msg.payload as unknown as WorldState;
  if (!Array.isArray(p.robots) || !Array.isArray(p.bounds)) {
    throw new ProtocolError("world_state payload missing robots/bounds");
  }
  return p;
}
