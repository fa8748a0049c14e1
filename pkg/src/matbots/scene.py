"""Virtual scene geometry over the robot mat, queried with vertical raycasts.

A scene is an immutable description of the surface the robots have to render.
Every query is a downward ray: we start at the ceiling elevation (1 m above the
mat plane, well above any geometry) and record the first, i.e. topmost, hit.
Casting from above avoids culling problems with upward-facing geometry; the
returned height is simply ``ceiling - travel_distance``.

Four scene kinds are supported:

* ``analytic-plane``      -- a (possibly sloped) plane, anchored at the mat center
* ``analytic-sphere-cap`` -- a sphere; the part protruding above the mat is touchable
* ``heightfield-grid``    -- a regular grid of height samples, bilinearly interpolated
* ``triangle-list``       -- arbitrary triangles, 9 coordinates each

Scene files are JSON documents with fields ``schema`` (currently 1), ``kind``,
``bounds_m`` and ``payload``; see ``scene_from_dict`` for the per-kind payload
layout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# Rays are cast from this elevation above the mat plane (meters).
RAY_CEILING_M = 1.0

# Tracked mat extent (meters); interaction area of one standard mat.
MAT_BOUNDS_M = (0.55, 0.55)

# Half of the 4.7 cm tilting cap; the two reel attachment points sit this far
# from the robot center, on opposite sides.
CAP_HALFWIDTH_M = 0.0235

# The cap can tilt this far in either direction (degrees).
TILT_LIMIT_DEG = 60.0

SCENE_SCHEMA_VERSION = 1

_AREA_EPS = 1e-12  # triangles below this area (m^2) are rejected as degenerate


class SceneError(ValueError):
    """Malformed scene definition (bad payload, degenerate geometry, ...)."""


class BoundsError(ValueError):
    """Query point outside the scene bounds."""


@dataclass(frozen=True)
class SurfaceSample:
    """Result of a single vertical raycast.

    ``height`` is meters above the mat plane; 0.0 when the ray hit nothing.
    ``cap_heights`` is the normal proxy: the pair of heights at the two cap
    attachment points (duplicated for a plain single-ray query).
    """

    height: float
    hit: bool
    cap_heights: tuple[float, float]


@dataclass(frozen=True)
class TiltSample:
    """Two-ray tilt probe: attachment heights and the implied cap tilt."""

    h_a: float
    h_b: float
    tilt_deg: float
    clamped: bool


class Scene:
    """Base class for all scene kinds. Immutable, safe to query concurrently."""

    kind = "abstract"

    def __init__(self, bounds: tuple[float, float] = MAT_BOUNDS_M):
        bx, by = float(bounds[0]), float(bounds[1])
        if bx <= 0 or by <= 0:
            raise SceneError("scene bounds must be positive")
        self.bounds = (bx, by)

    def contains(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.bounds[0] and 0.0 <= y <= self.bounds[1]

    def sample_heights(self, xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized raycast: heights and hit mask for arrays of in-bounds points.

        Misses report height 0.0. Points are not bounds-checked here; callers
        that accept user coordinates go through :func:`raycast_down`.
        """
        raise NotImplementedError

    def payload(self) -> dict:
        raise NotImplementedError


class PlaneScene(Scene):
    """Plane ``z = height + slope . (p - mat_center)``, clipped to 0 < z < ceiling.

    Parts of the plane dipping below the mat or rising past the ray ceiling
    are treated as absent (no hit): only the band a robot could render exists.
    """

    kind = "analytic-plane"

    def __init__(self, height: float, slope: tuple[float, float] = (0.0, 0.0),
                 bounds: tuple[float, float] = MAT_BOUNDS_M):
        super().__init__(bounds)
        self.height = float(height)
        self.slope = (float(slope[0]), float(slope[1]))

    def sample_heights(self, xs, ys):
        cx, cy = self.bounds[0] / 2.0, self.bounds[1] / 2.0
        z = self.height + self.slope[0] * (np.asarray(xs) - cx) + self.slope[1] * (np.asarray(ys) - cy)
        hits = (z > 0.0) & (z < RAY_CEILING_M)
        return np.where(hits, z, 0.0), hits

    def payload(self) -> dict:
        return {"height": self.height, "slope": list(self.slope)}


class SphereCapScene(Scene):
    """A sphere; whatever protrudes into 0 < z < ceiling is touchable.

    The topmost surface crossed by the downward ray wins, so the upper
    hemisphere is what the robots render.
    """

    kind = "analytic-sphere-cap"

    def __init__(self, center: tuple[float, float, float], radius: float,
                 bounds: tuple[float, float] = MAT_BOUNDS_M):
        super().__init__(bounds)
        if radius <= 0:
            raise SceneError("sphere radius must be positive")
        self.center = (float(center[0]), float(center[1]), float(center[2]))
        self.radius = float(radius)

    def sample_heights(self, xs, ys):
        cx, cy, cz = self.center
        rho2 = (np.asarray(xs) - cx) ** 2 + (np.asarray(ys) - cy) ** 2
        under = self.radius ** 2 - rho2
        half = np.sqrt(np.maximum(under, 0.0))
        z_top = cz + half
        z_bot = cz - half
        # Topmost surface inside the renderable band.
        top_ok = (under >= 0.0) & (z_top > 0.0) & (z_top < RAY_CEILING_M)
        bot_ok = (under >= 0.0) & (z_bot > 0.0) & (z_bot < RAY_CEILING_M)
        z = np.where(top_ok, z_top, np.where(bot_ok, z_bot, 0.0))
        hits = top_ok | bot_ok
        return np.where(hits, z, 0.0), hits

    def payload(self) -> dict:
        return {"center": list(self.center), "radius": self.radius}


class HeightfieldScene(Scene):
    """Regular grid of height samples, bilinearly interpolated between nodes.

    ``values[i, j]`` is the height at ``origin + (i, j) * spacing``. Outside
    the sampled rectangle there is no geometry. Samples of 0 mean bare mat.
    """

    kind = "heightfield-grid"

    def __init__(self, origin: tuple[float, float], spacing: float, values,
                 bounds: tuple[float, float] = MAT_BOUNDS_M):
        super().__init__(bounds)
        if spacing <= 0:
            raise SceneError("heightfield spacing must be positive")
        vals = np.asarray(values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] < 2 or vals.shape[1] < 2:
            raise SceneError("heightfield needs a 2D grid of at least 2x2 samples")
        if np.any(vals < 0.0) or np.any(vals >= RAY_CEILING_M):
            raise SceneError("heightfield samples must lie in [0, ray ceiling)")
        self.origin = (float(origin[0]), float(origin[1]))
        self.spacing = float(spacing)
        self.values = vals

    def sample_heights(self, xs, ys):
        gx = (np.asarray(xs, dtype=float) - self.origin[0]) / self.spacing
        gy = (np.asarray(ys, dtype=float) - self.origin[1]) / self.spacing
        nx, ny = self.values.shape
        inside = (gx >= 0.0) & (gx <= nx - 1) & (gy >= 0.0) & (gy <= ny - 1)
        gxc = np.clip(gx, 0.0, nx - 1)
        gyc = np.clip(gy, 0.0, ny - 1)
        i0 = np.clip(np.floor(gxc).astype(int), 0, nx - 2)
        j0 = np.clip(np.floor(gyc).astype(int), 0, ny - 2)
        fx = gxc - i0
        fy = gyc - j0
        v = (self.values[i0, j0] * (1 - fx) * (1 - fy)
             + self.values[i0 + 1, j0] * fx * (1 - fy)
             + self.values[i0, j0 + 1] * (1 - fx) * fy
             + self.values[i0 + 1, j0 + 1] * fx * fy)
        hits = inside & (v > 0.0)
        return np.where(hits, v, 0.0), hits

    def payload(self) -> dict:
        return {"origin": list(self.origin), "spacing": self.spacing,
                "values": self.values.tolist()}


class TriangleScene(Scene):
    """Arbitrary triangle soup; vertical rays via Moller-Trumbore.

    Vertices must lie in [0, ray ceiling). Zero-area triangles are rejected;
    triangles that are vertical (degenerate in plan view) are valid geometry
    but can never be hit by a vertical ray.
    """

    kind = "triangle-list"

    def __init__(self, triangles, bounds: tuple[float, float] = MAT_BOUNDS_M):
        super().__init__(bounds)
        tris = np.asarray(triangles, dtype=float)
        if tris.ndim == 2 and tris.shape[1] == 9:
            tris = tris.reshape(-1, 3, 3)
        if tris.ndim != 3 or tris.shape[1:] != (3, 3) or tris.shape[0] == 0:
            raise SceneError("triangle list must be an N x 9 (or N x 3 x 3) array")
        if np.any(tris[:, :, 2] < 0.0) or np.any(tris[:, :, 2] >= RAY_CEILING_M):
            raise SceneError("triangle vertices must lie in [0, ray ceiling)")
        ab = tris[:, 1] - tris[:, 0]
        ac = tris[:, 2] - tris[:, 0]
        areas = 0.5 * np.linalg.norm(np.cross(ab, ac), axis=1)
        if np.any(areas <= _AREA_EPS):
            raise SceneError("zero-area triangle in triangle list")
        self.triangles = tris
        # Precomputed edges for the intersection test.
        self._e1 = ab
        self._e2 = ac

    def sample_heights(self, xs, ys):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        ys = np.atleast_1d(np.asarray(ys, dtype=float))
        orig_shape = xs.shape
        q = np.stack([xs.ravel(), ys.ravel()], axis=1)  # (Q, 2)

        # Moller-Trumbore specialized to direction (0, 0, -1).
        # det = dot(dir x e2, e1) reduces to the 2D cross of the plan-view edges.
        v0 = self.triangles[:, 0]
        e1, e2 = self._e1, self._e2
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]  # (T,)
        usable = np.abs(det) > 1e-15
        inv_det = np.where(usable, 1.0 / np.where(usable, det, 1.0), 0.0)

        tvec_x = q[:, None, 0] - v0[None, :, 0]  # (Q, T)
        tvec_y = q[:, None, 1] - v0[None, :, 1]
        u = (tvec_x * e2[None, :, 1] - tvec_y * e2[None, :, 0]) * inv_det[None, :]
        w = (e1[None, :, 0] * tvec_y - e1[None, :, 1] * tvec_x) * inv_det[None, :]
        inside = usable[None, :] & (u >= 0.0) & (w >= 0.0) & (u + w <= 1.0)

        z = v0[None, :, 2] + u * e1[None, :, 2] + w * e2[None, :, 2]
        band = inside & (z > 0.0) & (z < RAY_CEILING_M)
        z = np.where(band, z, -np.inf)
        best = z.max(axis=1)
        hits = np.isfinite(best)
        heights = np.where(hits, best, 0.0)
        return heights.reshape(orig_shape), hits.reshape(orig_shape)

    def payload(self) -> dict:
        return {"triangles": self.triangles.reshape(-1, 9).tolist()}


def raycast_down(scene: Scene, x: float, y: float) -> SurfaceSample:
    """Cast a vertical ray down from the ceiling at (x, y); topmost hit wins.

    Raises :class:`BoundsError` for queries outside the scene bounds.
    """
    if not scene.contains(x, y):
        raise BoundsError(f"query ({x:.4f}, {y:.4f}) outside bounds {scene.bounds}")
    h, hit = scene.sample_heights(np.array([x]), np.array([y]))
    height = float(h[0])
    return SurfaceSample(height=height, hit=bool(hit[0]), cap_heights=(height, height))


def sample_tilt(scene: Scene, x: float, y: float, yaw: float,
                cap_halfwidth: float = CAP_HALFWIDTH_M) -> TiltSample:
    """Probe the two cap attachment points and derive the cap tilt.

    ``yaw`` is in radians; the attachment points sit at
    ``(x, y) +- cap_halfwidth * (cos yaw, sin yaw)``. Tilt is positive when
    the +yaw side is higher, and clamps to the +-60 degree envelope with the
    ``clamped`` flag set.
    """
    dx, dy = cap_halfwidth * math.cos(yaw), cap_halfwidth * math.sin(yaw)
    xa, ya = x - dx, y - dy
    xb, yb = x + dx, y + dy
    for px, py in ((xa, ya), (xb, yb)):
        if not scene.contains(px, py):
            raise BoundsError(f"cap attachment ({px:.4f}, {py:.4f}) outside bounds {scene.bounds}")
    h, _hit = scene.sample_heights(np.array([xa, xb]), np.array([ya, yb]))
    h_a, h_b = float(h[0]), float(h[1])
    tilt = math.degrees(math.atan2(h_b - h_a, 2.0 * cap_halfwidth))
    # a hair over the limit is round-off, not a clamp event
    clamped = abs(tilt) > TILT_LIMIT_DEG + 1e-9
    if abs(tilt) > TILT_LIMIT_DEG:
        tilt = math.copysign(TILT_LIMIT_DEG, tilt)
    return TiltSample(h_a=h_a, h_b=h_b, tilt_deg=tilt, clamped=clamped)


# ---------------------------------------------------------------------------
# Scene file format
# ---------------------------------------------------------------------------

_KINDS = {
    "analytic-plane": PlaneScene,
    "analytic-sphere-cap": SphereCapScene,
    "heightfield-grid": HeightfieldScene,
    "triangle-list": TriangleScene,
}


def scene_from_dict(doc: dict) -> Scene:
    """Build a scene from its JSON document form.

    Payload fields per kind:

    * analytic-plane:      ``height`` (m), optional ``slope`` [dz/dx, dz/dy]
    * analytic-sphere-cap: ``center`` [x, y, z], ``radius``
    * heightfield-grid:    ``origin`` [x, y], ``spacing``, ``values`` (rows)
    * triangle-list:       ``triangles`` (list of 9-float rows)
    """
    if not isinstance(doc, dict):
        raise SceneError("scene document must be a JSON object")
    schema = doc.get("schema")
    if schema != SCENE_SCHEMA_VERSION:
        raise SceneError(f"unsupported scene schema {schema!r} (expected {SCENE_SCHEMA_VERSION})")
    kind = doc.get("kind")
    if kind not in _KINDS:
        raise SceneError(f"unknown scene kind {kind!r}")
    bounds = tuple(doc.get("bounds_m", MAT_BOUNDS_M))
    payload = doc.get("payload")
    if not isinstance(payload, dict):
        raise SceneError("scene payload must be an object")
    try:
        if kind == "analytic-plane":
            return PlaneScene(payload["height"], tuple(payload.get("slope", (0.0, 0.0))), bounds)
        if kind == "analytic-sphere-cap":
            return SphereCapScene(tuple(payload["center"]), payload["radius"], bounds)
        if kind == "heightfield-grid":
            return HeightfieldScene(tuple(payload["origin"]), payload["spacing"],
                                    payload["values"], bounds)
        return TriangleScene(payload["triangles"], bounds)
    except KeyError as exc:
        raise SceneError(f"scene payload missing field {exc.args[0]!r}") from None


def scene_to_dict(scene: Scene) -> dict:
    return {
        "schema": SCENE_SCHEMA_VERSION,
        "kind": scene.kind,
        "bounds_m": list(scene.bounds),
        "payload": scene.payload(),
    }


def load_scene(path: str | Path) -> Scene:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SceneError(f"{path}: invalid JSON: {exc}") from None
    return scene_from_dict(doc)


def save_scene(scene: Scene, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scene_to_dict(scene), indent=2) + "\n")
