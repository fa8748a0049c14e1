"""Trace files: one CSV row per robot per tick, plus replay support.

The header carries only deterministic run parameters, so identical scenarios
produce byte-identical traces. Floats are written with ``repr`` (shortest
round-trip form).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterator

TRACE_SCHEMA_VERSION = 1
_COLUMNS = ("tick", "time", "robot", "x", "y", "yaw", "height", "tilt",
            "vx", "vy", "grasped", "target_x", "target_y", "assignment")


class TraceError(ValueError):
    """Corrupt or unreadable trace file."""


@dataclass(frozen=True)
class TraceRow:
    tick: int
    time: float
    robot: int
    x: float
    y: float
    yaw: float
    height: float
    tilt: float
    vx: float
    vy: float
    grasped: bool
    target_x: float | None
    target_y: float | None
    assignment: str | None


class TraceWriter:
    """Streams engine snapshots to a trace file."""

    def __init__(self, path: str | Path, meta: dict | None = None):
        self.path = Path(path)
        self._fh: IO[str] = self.path.open("w")
        self._fh.write(f"# matbots-trace {TRACE_SCHEMA_VERSION}\n")
        for key, value in (meta or {}).items():
            self._fh.write(f"# {key}={value}\n")
        self._fh.write(",".join(_COLUMNS) + "\n")

    def write_snapshot(self, snap: dict) -> None:
        tick = snap["tick"]
        t = snap["time"]
        for r in snap["robots"]:
            target = r.get("target")
            tx = repr(target[0]) if target else ""
            ty = repr(target[1]) if target else ""
            aid = r.get("assignment_id") or ""
            self._fh.write(
                f"{tick},{t!r},{r['id']},{r['x']!r},{r['y']!r},{r['yaw']!r},"
                f"{r['height']!r},{r['tilt']!r},{r['vx']!r},{r['vy']!r},"
                f"{int(r['grasped'])},{tx},{ty},{aid}\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "TraceWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_trace(path: str | Path) -> tuple[dict, list[TraceRow]]:
    """Parse a trace file; raises :class:`TraceError` naming the bad line."""
    path = Path(path)
    meta: dict = {}
    rows: list[TraceRow] = []
    last_tick = -1
    with path.open() as fh:
        first = fh.readline().rstrip("\n")
        if not first.startswith("# matbots-trace "):
            raise TraceError(f"{path}:1: not a trace file")
        try:
            version = int(first.rsplit(" ", 1)[1])
        except ValueError:
            raise TraceError(f"{path}:1: unreadable trace version") from None
        if version != TRACE_SCHEMA_VERSION:
            raise TraceError(f"{path}:1: unsupported trace version {version}")
        lineno = 1
        header_seen = False
        for line in fh:
            lineno += 1
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("# "):
                if "=" in line:
                    k, v = line[2:].split("=", 1)
                    meta[k] = v
                continue
            if not header_seen:
                if line != ",".join(_COLUMNS):
                    raise TraceError(f"{path}:{lineno}: unexpected column header {line!r}")
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != len(_COLUMNS):
                raise TraceError(
                    f"{path}:{lineno}: expected {len(_COLUMNS)} fields, got {len(parts)} "
                    f"(last valid tick {last_tick})")
            try:
                row = TraceRow(
                    tick=int(parts[0]), time=float(parts[1]), robot=int(parts[2]),
                    x=float(parts[3]), y=float(parts[4]), yaw=float(parts[5]),
                    height=float(parts[6]), tilt=float(parts[7]),
                    vx=float(parts[8]), vy=float(parts[9]), grasped=bool(int(parts[10])),
                    target_x=float(parts[11]) if parts[11] else None,
                    target_y=float(parts[12]) if parts[12] else None,
                    assignment=parts[13] or None,
                )
            except ValueError:
                raise TraceError(
                    f"{path}:{lineno}: unparseable row (last valid tick {last_tick})") from None
            if row.tick < last_tick:
                raise TraceError(f"{path}:{lineno}: tick went backwards "
                                 f"(last valid tick {last_tick})")
            last_tick = row.tick
            rows.append(row)
    if not header_seen:
        raise TraceError(f"{path}: missing column header")
    return meta, rows


def iter_ticks(rows: list[TraceRow]) -> Iterator[tuple[int, list[TraceRow]]]:
    """Group trace rows by tick, in order."""
    bucket: list[TraceRow] = []
    current = None
    for row in rows:
        if current is None or row.tick == current:
            bucket.append(row)
            current = row.tick
        else:
            yield current, bucket
            bucket = [row]
            current = row.tick
    if bucket:
        yield current, bucket


def tick_to_world_state(tick: int, rows: list[TraceRow]) -> dict:
    """Rebuild a stream-shaped world state from trace rows (for replay)."""
    return {
        "tick": tick,
        "time": rows[0].time,
        "bounds": [0.55, 0.55],
        "robots": [{
            "id": r.robot, "x": r.x, "y": r.y, "yaw": r.yaw,
            "height": r.height, "tilt": r.tilt, "vx": r.vx, "vy": r.vy,
            "grasped": r.grasped,
            "target": [r.target_x, r.target_y] if r.target_x is not None else None,
            "assignment_id": r.assignment,
            "in_stop_band": None,
        } for r in rows],
        "regions": [],
        "finger": None,
        "paused": False,
        "replay": True,
    }
