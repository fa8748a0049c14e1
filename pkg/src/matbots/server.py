"""Live session service: one simulation, many stream clients.

The simulation advances at wall-clock 60 Hz on the asyncio loop. Every new
tick is broadcast as a ``world_state`` message; each client has a one-slot
mailbox, so a slow client simply skips frames (latest wins, ticks strictly
increase, never reorder). ``hand_input`` messages steer the tracked finger
(mapped through the active calibration) and ``control`` messages drive the
session; a malformed message gets an ``error`` reply and the connection
stays up.
"""

from __future__ import annotations

import asyncio
import contextlib
from pathlib import Path

from websockets.asyncio.server import serve
from websockets.exceptions import ConnectionClosed

from .config import EngineConfig
from .engine import Engine
from .hand import Calibration, calibrate
from .plant import PlacementError
from .protocol import ProtocolError, decode_message, encode_message
from .scene import load_scene

METRICS_EVERY_TICKS = 60


class _ClientSlot:
    __slots__ = ("latest", "event")

    def __init__(self):
        self.latest: str | None = None
        self.event = asyncio.Event()


class SessionServer:
    def __init__(self, config: EngineConfig, scene_path: str | None = None,
                 host: str = "127.0.0.1", port: int = 8765):
        self.config = config
        self.scene_path = scene_path
        self.host = host
        self.port = port
        self.engine = self._build_engine()
        self.calibration = Calibration.identity()
        self._clients: dict[object, _ClientSlot] = {}
        self._stream_tick = 0
        self._stop: asyncio.Event | None = None  # created inside run()

    def _build_engine(self) -> Engine:
        scene = load_scene(self.scene_path) if self.scene_path else None
        return Engine(self.config, scene=scene, kind="scene")

    # -- lifecycle -----------------------------------------------------------

    async def run(self, ready: asyncio.Event | None = None) -> None:
        self._stop = asyncio.Event()
        async with serve(self._handler, self.host, self.port) as server:
            if self.port == 0:
                self.port = next(iter(server.sockets)).getsockname()[1]
            sim = asyncio.create_task(self._sim_loop())
            if ready is not None:
                ready.set()
            try:
                await self._stop.wait()
            finally:
                sim.cancel()
                with contextlib.suppress(asyncio.CancelledError):
                    await sim

    def stop(self) -> None:
        if self._stop is not None:
            self._stop.set()

    # -- simulation loop ------------------------------------------------------

    async def _sim_loop(self) -> None:
        loop = asyncio.get_running_loop()
        period = self.engine.config.dt
        next_t = loop.time()
        while True:
            if not self.engine.paused:
                self.engine.tick()
                self._broadcast_state()
                if self.engine.tick_index % METRICS_EVERY_TICKS == 0:
                    self._broadcast(encode_message(
                        "metrics", self.engine.report().to_dict(), tick=self._stream_tick))
            next_t += period
            delay = next_t - loop.time()
            if delay < -0.25:      # fell badly behind: resynchronize
                next_t = loop.time()
                delay = 0.0
            await asyncio.sleep(max(0.0, delay))

    def _broadcast_state(self) -> None:
        self._stream_tick += 1
        snap = self.engine.snapshot()
        self._broadcast(encode_message("world_state", snap, tick=self._stream_tick))

    def _broadcast(self, text: str) -> None:
        for slot in self._clients.values():
            slot.latest = text
            slot.event.set()

    # -- client handling ------------------------------------------------------

    async def _handler(self, ws) -> None:
        slot = _ClientSlot()
        self._clients[ws] = slot
        # Prime the new client with the current state.
        slot.latest = encode_message("world_state", self.engine.snapshot(),
                                     tick=self._stream_tick)
        slot.event.set()
        sender = asyncio.create_task(self._sender(ws, slot))
        try:
            async for raw in ws:
                await self._handle_message(ws, raw)
        except ConnectionClosed:
            pass
        finally:
            sender.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await sender
            del self._clients[ws]

    async def _sender(self, ws, slot: _ClientSlot) -> None:
        while True:
            await slot.event.wait()
            slot.event.clear()
            text = slot.latest
            if text is not None:
                try:
                    await ws.send(text)
                except ConnectionClosed:
                    return

    async def _handle_message(self, ws, raw) -> None:
        try:
            msg = decode_message(raw)
        except ProtocolError as exc:
            await ws.send(encode_message("error", {"message": str(exc)}))
            return
        if msg["type"] == "hand_input":
            p = msg["payload"]
            x, y = self.calibration.apply((p["x"], p["y"]))
            self.engine.set_finger(x, y, float(p["z"]))
        elif msg["type"] == "control":
            await self._handle_control(ws, msg["payload"])
        else:
            await ws.send(encode_message(
                "error", {"message": f"clients may not send {msg['type']!r}"}))

    async def _handle_control(self, ws, payload: dict) -> None:
        action = payload["action"]
        try:
            if action == "pause":
                self.engine.paused = True
            elif action == "resume":
                self.engine.paused = False
            elif action == "reset":
                self.engine = self._build_engine()
                self._broadcast_state()
            elif action == "load_scene":
                path = Path(str(payload["path"]))
                self.engine.load_scene(load_scene(path))
                self.scene_path = str(path)
            elif action == "set_robots":
                self.engine.set_robot_count(int(payload["count"]))
            elif action == "grasp":
                self.engine.grasp_robot(int(payload["robot"]), bool(payload.get("lift", True)))
            elif action == "place":
                self.engine.place_robot(int(payload["robot"]),
                                        (float(payload["x"]), float(payload["y"])))
            elif action == "set_calibration":
                c = payload["center"]
                k = payload["corner"]
                self.calibration = calibrate((float(c[0]), float(c[1])),
                                             (float(k[0]), float(k[1])))
        except (KeyError, TypeError, ValueError, OSError, PlacementError) as exc:
            await ws.send(encode_message("error", {"message": f"{action}: {exc}"}))
            return
        await ws.send(encode_message("control_ack", {"action": action}))
