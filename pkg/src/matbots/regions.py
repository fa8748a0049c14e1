"""Height map of the mat and extraction of touchable regions.

The mat is sampled on a regular grid (0.5 cm spacing by default, giving a
111 x 111 grid over the standard 55 x 55 cm mat, endpoints inclusive). Cells
whose surface rises above the touch threshold (1 cm default) are grouped into
8-connected regions; each region is a candidate target a robot can serve.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .scene import Scene

DEFAULT_SPACING_M = 0.005
DEFAULT_TOUCH_THRESHOLD_M = 0.01


def grid_shape(bounds: tuple[float, float], spacing: float) -> tuple[int, int]:
    """Cells per axis, endpoints inclusive (0.55 m / 5 mm -> 111)."""
    nx = int(np.floor(bounds[0] / spacing + 1e-9)) + 1
    ny = int(np.floor(bounds[1] / spacing + 1e-9)) + 1
    return nx, ny


@dataclass
class HeightMap:
    """Sampled surface heights; ``cells[i, j]`` is the height at
    ``origin + (i * spacing, j * spacing)``. ``stamp`` is the simulation time
    the snapshot became current."""

    origin: tuple[float, float]
    spacing: float
    cells: np.ndarray
    stamp: float

    def cell_center(self, i: int, j: int) -> tuple[float, float]:
        return (self.origin[0] + i * self.spacing, self.origin[1] + j * self.spacing)


def build_heightmap(scene: Scene, now: float, spacing: float = DEFAULT_SPACING_M) -> HeightMap:
    """Sample the whole grid in one go (see HeightMapBuilder for the amortized path)."""
    nx, ny = grid_shape(scene.bounds, spacing)
    xs = np.arange(nx) * spacing
    ys = np.arange(ny) * spacing
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    heights, _hits = scene.sample_heights(gx, gy)
    return HeightMap(origin=(0.0, 0.0), spacing=spacing, cells=np.asarray(heights, dtype=float),
                     stamp=now)


class HeightMapBuilder:
    """Incremental heightmap sampling, a few grid rows per step.

    Lets the engine spread the raycasting cost over many ticks so a single
    tick never blows its frame budget; the finished grid is swapped in as an
    immutable snapshot.
    """

    def __init__(self, scene: Scene, spacing: float = DEFAULT_SPACING_M, rows_per_step: int = 6):
        if rows_per_step < 1:
            raise ValueError("rows_per_step must be >= 1")
        self.scene = scene
        self.spacing = spacing
        self.rows_per_step = rows_per_step
        self._nx, self._ny = grid_shape(scene.bounds, spacing)
        self._ys = np.arange(self._ny) * spacing
        self._buffer: np.ndarray | None = None
        self._next_row = 0

    @property
    def complete(self) -> bool:
        return self._buffer is not None and self._next_row >= self._nx

    def step(self) -> None:
        """Sample up to ``rows_per_step`` more rows; no-op once complete."""
        if self._buffer is None:
            self._buffer = np.zeros((self._nx, self._ny))
            self._next_row = 0
        if self.complete:
            return
        stop = min(self._next_row + self.rows_per_step, self._nx)
        rows = np.arange(self._next_row, stop)
        gx = (rows[:, None] * self.spacing) * np.ones((1, self._ny))
        gy = np.broadcast_to(self._ys[None, :], (len(rows), self._ny))
        heights, _hits = self.scene.sample_heights(gx, gy)
        self._buffer[self._next_row:stop, :] = heights
        self._next_row = stop

    def take(self, stamp: float) -> HeightMap:
        """Return the finished snapshot and start a fresh build."""
        if not self.complete:
            raise RuntimeError("heightmap build not complete")
        hm = HeightMap(origin=(0.0, 0.0), spacing=self.spacing, cells=self._buffer, stamp=stamp)
        self._buffer = None
        self._next_row = 0
        return hm


@dataclass
class Region:
    """One 8-connected component of cells above the touch threshold."""

    id: int
    cells: np.ndarray          # (k, 2) int cell indices, lexicographically sorted
    origin: tuple[float, float]
    spacing: float
    centroid: tuple[float, float]
    peak_height: float
    area_m2: float
    _centers: np.ndarray | None = field(default=None, repr=False, compare=False)

    def cell_centers(self) -> np.ndarray:
        """(k, 2) cell center coordinates in meters."""
        if self._centers is None:
            self._centers = self.cells * self.spacing + np.asarray(self.origin)
        return self._centers

    def nearest_cell(self, point) -> tuple[float, float]:
        centers = self.cell_centers()
        d2 = ((centers - np.asarray(point, dtype=float)) ** 2).sum(axis=1)
        k = int(np.argmin(d2))
        return (float(centers[k, 0]), float(centers[k, 1]))

    def distance_to(self, point) -> float:
        centers = self.cell_centers()
        d2 = ((centers - np.asarray(point, dtype=float)) ** 2).sum(axis=1)
        return float(np.sqrt(d2.min()))

    def contains_point(self, point) -> bool:
        return self.distance_to(point) <= self.spacing * 0.7072  # within half a cell diagonal


def _label_components(mask: np.ndarray) -> np.ndarray:
    """8-connected component labels via row-run union-find; -1 is background."""
    nx, ny = mask.shape
    labels = np.full((nx, ny), -1, dtype=int)
    parent: list[int] = []

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    prev_runs: list[tuple[int, int, int]] = []  # (j_start, j_end_excl, label)
    for i in range(nx):
        row = mask[i]
        runs: list[tuple[int, int, int]] = []
        j = 0
        while j < ny:
            if row[j]:
                j0 = j
                while j < ny and row[j]:
                    j += 1
                lbl = len(parent)
                parent.append(lbl)
                # 8-connectivity: runs [pj0, pj1) in the previous row touch the
                # current run [j0, j) if their columns overlap when the current
                # run is widened by one cell on each side.
                for (pj0, pj1, plbl) in prev_runs:
                    if pj0 <= j and pj1 >= j0:
                        union(lbl, plbl)
                runs.append((j0, j, lbl))
                labels[i, j0:j] = lbl
            else:
                j += 1
        prev_runs = runs

    if parent:
        roots = np.array([find(k) for k in range(len(parent))])
        flat = labels.ravel()
        fg = flat >= 0
        flat[fg] = roots[flat[fg]]
    return labels


def extract_regions(hm: HeightMap, threshold: float = DEFAULT_TOUCH_THRESHOLD_M) -> list[Region]:
    """Touchable regions: 8-connected groups of cells strictly above ``threshold``.

    Sorted by descending area; ids are 0..n-1 in that order, deterministic for
    identical inputs (ties broken by first cell in row-major order).
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    mask = hm.cells > threshold
    labels = _label_components(mask)
    raw_ids = np.unique(labels[labels >= 0])
    regions: list[Region] = []
    for rid in raw_ids:
        idx = np.argwhere(labels == rid)  # row-major sorted
        centers = idx * hm.spacing + np.asarray(hm.origin)
        heights = hm.cells[idx[:, 0], idx[:, 1]]
        regions.append(Region(
            id=-1,
            cells=idx,
            origin=hm.origin,
            spacing=hm.spacing,
            centroid=(float(centers[:, 0].mean()), float(centers[:, 1].mean())),
            peak_height=float(heights.max()),
            area_m2=float(len(idx)) * hm.spacing ** 2,
        ))
    regions.sort(key=lambda r: (-len(r.cells), int(r.cells[0, 0]), int(r.cells[0, 1])))
    for i, r in enumerate(regions):
        r.id = i
    return regions


def label_grid(shape: tuple[int, int], regions: list[Region]) -> np.ndarray:
    """Dense label grid (region id per cell, -1 background) for debugging/UI."""
    grid = np.full(shape, -1, dtype=int)
    for r in regions:
        grid[r.cells[:, 0], r.cells[:, 1]] = r.id
    return grid


class RegionTracker:
    """Keeps region ids stable across heightmap refreshes.

    A new region inherits the id of the previous region it overlaps the most
    (by shared cells); regions with no overlap get fresh ids. Needed so target
    assignment hysteresis has a stable notion of "the same region".
    """

    def __init__(self):
        self._prev: list[Region] = []
        self._next_id = 0

    def update(self, regions: list[Region]) -> list[Region]:
        prev_sets = [(r.id, {(int(i), int(j)) for i, j in r.cells}) for r in self._prev]
        taken: set[int] = set()
        for r in regions:
            cells = {(int(i), int(j)) for i, j in r.cells}
            best_id, best_overlap = -1, 0
            for pid, pset in prev_sets:
                if pid in taken:
                    continue
                ov = len(cells & pset)
                if ov > best_overlap or (ov == best_overlap and ov > 0 and pid < best_id):
                    best_id, best_overlap = pid, ov
            if best_overlap > 0:
                r.id = best_id
                taken.add(best_id)
            else:
                r.id = self._next_id
                self._next_id += 1
        self._next_id = max(self._next_id, max((r.id for r in regions), default=-1) + 1)
        self._prev = regions
        return regions


def region_outline(region: Region) -> list[tuple[float, float]]:
    """Outer boundary polygon of the region's cell squares, in meters.

    Each cell is a ``spacing``-sized square centered on its grid point; the
    outline is the rectilinear boundary of their union (outer loop only --
    holes are not reported). Used for UI shading.
    """
    cells = {(int(i), int(j)) for i, j in region.cells}
    # Boundary edges as directed segments between cell-corner lattice points,
    # oriented so the region interior is on the left.
    edges: dict[tuple[int, int], list[tuple[int, int]]] = {}

    def add(a: tuple[int, int], b: tuple[int, int]) -> None:
        edges.setdefault(a, []).append(b)

    for (i, j) in cells:
        if (i, j - 1) not in cells:   # bottom edge, going +i
            add((i, j), (i + 1, j))
        if (i + 1, j) not in cells:   # right edge, going +j
            add((i + 1, j), (i + 1, j + 1))
        if (i, j + 1) not in cells:   # top edge, going -i
            add((i + 1, j + 1), (i, j + 1))
        if (i - 1, j) not in cells:   # left edge, going -j
            add((i, j + 1), (i, j))
    for v in edges.values():
        v.sort()

    # Walk loops. At a pinch vertex (diagonally-touching cells) take the
    # sharpest right turn: that carries the walk across the pinch and keeps
    # the whole outer boundary in one loop.
    loops: list[list[tuple[int, int]]] = []
    remaining = {a: list(bs) for a, bs in edges.items()}
    while remaining:
        start = min(remaining)
        loop = [start]
        prev_dir = None
        cur = start
        while True:
            outs = remaining.get(cur)
            if not outs:
                break
            if prev_dir is None or len(outs) == 1:
                nxt = outs[0]
            else:
                # Turn preference: right, straight, left, back.
                def turn_key(cand):
                    d = (cand[0] - cur[0], cand[1] - cur[1])
                    cross = prev_dir[0] * d[1] - prev_dir[1] * d[0]
                    dot = prev_dir[0] * d[0] + prev_dir[1] * d[1]
                    return (cross, -dot)
                nxt = min(outs, key=turn_key)
            outs.remove(nxt)
            if not outs:
                del remaining[cur]
            prev_dir = (nxt[0] - cur[0], nxt[1] - cur[1])
            cur = nxt
            if cur == start:
                break
            loop.append(cur)
        loops.append(loop)

    def loop_area(loop):
        s = 0.0
        for k in range(len(loop)):
            x0, y0 = loop[k]
            x1, y1 = loop[(k + 1) % len(loop)]
            s += x0 * y1 - x1 * y0
        return abs(s) / 2.0

    outer = max(loops, key=loop_area)
    half = region.spacing / 2.0
    ox, oy = region.origin
    return [(ox + i * region.spacing - half, oy + j * region.spacing - half) for i, j in outer]


# ---------------------------------------------------------------------------
# Debug dumps (golden-file friendly CSV grids)
# ---------------------------------------------------------------------------

def heightmap_to_csv(hm: HeightMap) -> str:
    buf = io.StringIO()
    for i in range(hm.cells.shape[0]):
        buf.write(",".join(repr(float(v)) for v in hm.cells[i]))
        buf.write("\n")
    return buf.getvalue()


def labels_to_csv(labels: np.ndarray) -> str:
    buf = io.StringIO()
    for i in range(labels.shape[0]):
        buf.write(",".join(str(int(v)) for v in labels[i]))
        buf.write("\n")
    return buf.getvalue()
