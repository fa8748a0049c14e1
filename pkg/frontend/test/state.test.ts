import { describe, expect, it } from "vitest";

import { encodeHandInput, encodeControl, decodeMessage, ProtocolError } from "../src/protocol.js";
import { ingestFrame, initialViewState } from "../src/state.js";

function worldFrame(tick: number, extra: Record<string, unknown> = {}): string {
  return JSON.stringify({
    type: "world_state",
    schema: 1,
    tick,
    payload: {
      tick,
      time: tick / 60,
      bounds: [0.55, 0.55],
      robots: [],
      regions: [],
      finger: null,
      paused: false,
      ...extra,
    },
  });
}

describe("protocol", () => {
  it("encodes hand input and control frames the server understands", () => {
    const hand = JSON.parse(encodeHandInput(0.1, 0.2, 0.05));
    expect(hand).toEqual({ type: "hand_input", schema: 1, payload: { x: 0.1, y: 0.2, z: 0.05 } });
    const ctl = JSON.parse(encodeControl({ action: "set_robots", count: 3 }));
    expect(ctl.type).toBe("control");
    expect(ctl.payload).toEqual({ action: "set_robots", count: 3 });
  });

  it("round-trips decoded frames", () => {
    const text = worldFrame(5);
    const msg = decodeMessage(text);
    expect(JSON.parse(JSON.stringify(msg))).toEqual(JSON.parse(text));
  });

  it("rejects malformed frames", () => {
    expect(() => decodeMessage("{oops")).toThrow(ProtocolError);
    expect(() => decodeMessage(JSON.stringify({ type: "x", schema: 1, payload: {} })))
      .toThrow(ProtocolError);
    expect(() => decodeMessage(JSON.stringify({ type: "metrics", schema: 2, payload: {} })))
      .toThrow(ProtocolError);
  });
});

describe("view state ingest", () => {
  it("rendered tick never decreases; stale frames are dropped", () => {
    const view = initialViewState();
    expect(ingestFrame(view, worldFrame(3))).toBe(true);
    expect(view.lastTick).toBe(3);
    expect(ingestFrame(view, worldFrame(2))).toBe(false);  // out of order
    expect(ingestFrame(view, worldFrame(3))).toBe(false);  // duplicate
    expect(view.lastTick).toBe(3);
    expect(view.staleFrames).toBe(2);
    expect(ingestFrame(view, worldFrame(4))).toBe(true);
    expect(view.lastTick).toBe(4);
  });

  it("malformed frame sets the error badge and skips the frame", () => {
    const view = initialViewState();
    ingestFrame(view, worldFrame(1));
    const before = view.world;
    expect(ingestFrame(view, "garbage{{{")).toBe(false);
    expect(view.errorBadge).toContain("JSON");
    expect(view.world).toBe(before);
  });

  it("server error messages surface in the badge", () => {
    const view = initialViewState();
    const err = JSON.stringify({ type: "error", schema: 1,
                                 payload: { message: "place: overlaps another robot" } });
    expect(ingestFrame(view, err)).toBe(true);
    expect(view.errorBadge).toContain("overlaps");
  });

  it("hover-follow tracks the rendered surface minus 5 mm", () => {
    const view = initialViewState();
    view.hoverFollow = true;
    ingestFrame(view, worldFrame(1, { finger_surface: 0.145 }));
    expect(view.fingerZ).toBeCloseTo(0.140, 9);
    view.hoverFollow = false;
    ingestFrame(view, worldFrame(2, { finger_surface: 0.3 }));
    expect(view.fingerZ).toBeCloseTo(0.140, 9);  // frozen once disabled
  });

  it("closing and reopening reproduces the view from the next frame", () => {
    const a = initialViewState();
    ingestFrame(a, worldFrame(7, { finger: [0.1, 0.2, 0.05] }));
    const b = initialViewState();                 // "reopened" panel
    ingestFrame(b, worldFrame(8, { finger: [0.1, 0.2, 0.05] }));
    expect(b.world?.finger).toEqual(a.world?.finger);
    expect(b.world?.bounds).toEqual(a.world?.bounds);
  });
});
