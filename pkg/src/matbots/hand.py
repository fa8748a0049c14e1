"""Finger input: scripted trajectories, resampling and mat calibration.

Finger positions arrive nominally at 60 Hz, either scripted (trajectory files
or the generators below) or live from the UI. Calibration is the two-point
routine: the user marks the mat center and the left-bottom corner, which pins
down a rigid 2D transform (rotation + translation, no scale) from the input
frame into mat coordinates.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .scene import MAT_BOUNDS_M

HAND_RATE_HZ = 60.0
TRAJECTORY_SCHEMA_VERSION = 1


class CalibrationError(ValueError):
    """Calibration points unusable (coincident)."""


class TrajectoryError(ValueError):
    """Malformed trajectory file; message carries the offending line."""


@dataclass(frozen=True)
class FingerSample:
    t: float
    pos: tuple[float, float, float]   # x, y on the mat; z = fingertip height
    source: str = "scripted"          # "scripted" or "live"


@dataclass(frozen=True)
class Calibration:
    """Rigid 2D map into mat coordinates: ``q = R(rotation) p + translation``."""

    rotation_deg: float
    translation: tuple[float, float]

    def apply(self, p: tuple[float, float]) -> tuple[float, float]:
        th = math.radians(self.rotation_deg)
        c, s = math.cos(th), math.sin(th)
        x, y = float(p[0]), float(p[1])
        return (c * x - s * y + self.translation[0],
                s * x + c * y + self.translation[1])

    @staticmethod
    def identity() -> "Calibration":
        return Calibration(rotation_deg=0.0, translation=(0.0, 0.0))


def calibrate(p_center: tuple[float, float], p_corner: tuple[float, float],
              bounds: tuple[float, float] = MAT_BOUNDS_M) -> Calibration:
    """Two-point calibration: ``p_center`` maps to the mat center and the ray
    toward ``p_corner`` aligns with the ray toward the left-bottom corner."""
    cx, cy = bounds[0] / 2.0, bounds[1] / 2.0
    dx = p_corner[0] - p_center[0]
    dy = p_corner[1] - p_center[1]
    if math.hypot(dx, dy) < 1e-12:
        raise CalibrationError("calibration points must be distinct")
    # Mat center -> left-bottom corner direction is atan2(-cy, -cx).
    theta = math.degrees(math.atan2(-cy, -cx) - math.atan2(dy, dx))
    theta = (theta + 180.0) % 360.0 - 180.0
    th = math.radians(theta)
    c, s = math.cos(th), math.sin(th)
    tx = cx - (c * p_center[0] - s * p_center[1])
    ty = cy - (s * p_center[0] + c * p_center[1])
    return Calibration(rotation_deg=theta, translation=(tx, ty))


def resample(track: list[FingerSample], t: float) -> FingerSample:
    """Finger sample at time ``t``: linear interpolation between the bracketing
    samples, clamped to the endpoints outside the track."""
    if not track:
        raise ValueError("cannot resample an empty track")
    times = [s.t for s in track]
    k = bisect.bisect_left(times, t)
    if k < len(track) and track[k].t == t:
        return track[k]
    if k == 0:
        s = track[0]
        return FingerSample(t=t, pos=s.pos, source=s.source)
    if k == len(track):
        s = track[-1]
        return FingerSample(t=t, pos=s.pos, source=s.source)
    a, b = track[k - 1], track[k]
    f = (t - a.t) / (b.t - a.t)
    pos = tuple(a.pos[i] + f * (b.pos[i] - a.pos[i]) for i in range(3))
    return FingerSample(t=t, pos=pos, source=a.source)


# ---------------------------------------------------------------------------
# Trajectory generators (all at the nominal 60 Hz)
# ---------------------------------------------------------------------------

def sweep(start: tuple[float, float], end: tuple[float, float], speed: float,
          z=0.05, rate: float = HAND_RATE_HZ) -> list[FingerSample]:
    """Straight-line sweep at constant speed. ``z`` may be a constant or a
    callable ``z(x, y)`` (e.g. to press along a rendered surface)."""
    if speed <= 0:
        raise ValueError("speed must be positive")
    length = math.dist(start, end)
    duration = length / speed
    n = max(2, int(round(duration * rate)) + 1)
    out = []
    for k in range(n):
        f = k / (n - 1)
        x = start[0] + f * (end[0] - start[0])
        y = start[1] + f * (end[1] - start[1])
        zz = z(x, y) if callable(z) else float(z)
        out.append(FingerSample(t=k / rate, pos=(x, y, zz)))
    return out


def tap(point: tuple[float, float], z_high: float = 0.15, z_low: float = 0.0,
        period: float = 1.0, count: int = 5, rate: float = HAND_RATE_HZ) -> list[FingerSample]:
    """Repeated vertical taps over one point (triangle wave in z)."""
    n = max(2, int(round(count * period * rate)) + 1)
    out = []
    for k in range(n):
        t = k / rate
        phase = (t % period) / period
        z = z_high - (z_high - z_low) * (1.0 - abs(2.0 * phase - 1.0))
        out.append(FingerSample(t=t, pos=(point[0], point[1], z)))
    return out


def random_walk(duration: float, speed: float, z: float, seed: int,
                bounds: tuple[float, float] = MAT_BOUNDS_M,
                rate: float = HAND_RATE_HZ) -> list[FingerSample]:
    """Seeded wandering finger: fixed speed, heading diffuses, reflects at the
    mat edges."""
    rng = np.random.default_rng(seed)
    n = max(2, int(round(duration * rate)) + 1)
    x, y = bounds[0] / 2.0, bounds[1] / 2.0
    heading = rng.uniform(0.0, 2.0 * math.pi)
    out = [FingerSample(t=0.0, pos=(x, y, z))]
    for k in range(1, n):
        heading += rng.normal(0.0, 0.5)
        x += speed / rate * math.cos(heading)
        y += speed / rate * math.sin(heading)
        if x < 0.0 or x > bounds[0]:
            x = min(max(x, 0.0), bounds[0])
            heading = math.pi - heading
        if y < 0.0 or y > bounds[1]:
            y = min(max(y, 0.0), bounds[1])
            heading = -heading
        out.append(FingerSample(t=k / rate, pos=(x, y, z)))
    return out


GENERATORS = {"sweep": sweep, "tap": tap, "random-walk": random_walk}


# ---------------------------------------------------------------------------
# Trajectory file format: a small headered text file.
#
#   trajectory 1
#   rate=60
#   frame=mat
#   t x y z
#   0.0 0.1 0.275 0.05
#   ...
# ---------------------------------------------------------------------------

def save_trajectory(track: list[FingerSample], path: str | Path,
                    rate: float = HAND_RATE_HZ) -> None:
    lines = [f"trajectory {TRAJECTORY_SCHEMA_VERSION}", f"rate={rate:g}", "frame=mat", "t x y z"]
    for s in track:
        lines.append(f"{s.t!r} {s.pos[0]!r} {s.pos[1]!r} {s.pos[2]!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_trajectory(path: str | Path) -> list[FingerSample]:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith("trajectory "):
        raise TrajectoryError(f"{path}:1: missing 'trajectory <version>' header")
    try:
        version = int(lines[0].split()[1])
    except (IndexError, ValueError):
        raise TrajectoryError(f"{path}:1: unreadable trajectory version") from None
    if version != TRAJECTORY_SCHEMA_VERSION:
        raise TrajectoryError(f"{path}:1: unsupported trajectory version {version}")
    body = 1
    while body < len(lines) and ("=" in lines[body] or lines[body].strip() == "t x y z"):
        body += 1
    track: list[FingerSample] = []
    last_t = -math.inf
    for ln in range(body, len(lines)):
        raw = lines[ln].strip()
        if not raw or raw.startswith("#"):
            continue
        parts = raw.split()
        if len(parts) != 4:
            raise TrajectoryError(f"{path}:{ln + 1}: expected 4 fields 't x y z', got {len(parts)}")
        try:
            t, x, y, z = (float(p) for p in parts)
        except ValueError:
            raise TrajectoryError(f"{path}:{ln + 1}: non-numeric field in {raw!r}") from None
        if t < last_t:
            raise TrajectoryError(f"{path}:{ln + 1}: timestamps must be non-decreasing")
        last_t = t
        track.append(FingerSample(t=t, pos=(x, y, z)))
    if not track:
        raise TrajectoryError(f"{path}: trajectory has no samples")
    return track
