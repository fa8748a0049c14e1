"""Robot-to-target assignment: minimum total travel distance, finger-aware.

The solver is the classic Hungarian method (shortest augmenting paths with
dual potentials, O(n^3)); rectangular instances are padded with zero-cost
dummy rows/columns. Among cost-optimal assignments the lexicographically
smallest (robot 0 gets its lowest-index optimal target, then robot 1, ...)
is returned, which nails down determinism for symmetric layouts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .regions import Region

DEFAULT_HYSTERESIS_M = 0.02
# Robots must not be asked to park closer than their own footprint diagonal.
FOOTPRINT_DIAGONAL_M = 0.0665

_COST_TIE_TOL = 1e-9
_LEX_REFINE_MAX_N = 12


@dataclass(frozen=True)
class Target:
    """A point a robot should serve. ``sub`` distinguishes spread targets
    inside one large region."""

    region_id: int
    point: tuple[float, float]
    sub: int = 0

    @property
    def key(self) -> tuple[int, int]:
        return (self.region_id, self.sub)


@dataclass(frozen=True)
class Assignment:
    """Pairing of robots to targets; ``pairs`` is sorted by robot id and
    ``cost`` is the sum of the straight-line pair distances."""

    pairs: tuple[tuple[int, Target], ...]
    cost: float
    unserved: tuple[int, ...]

    def target_of(self, robot_id: int) -> Target | None:
        for rid, t in self.pairs:
            if rid == robot_id:
                return t
        return None


EMPTY_ASSIGNMENT = Assignment(pairs=(), cost=0.0, unserved=())


def _hungarian(cost: list[list[float]]) -> list[int]:
    """Column assigned to each row of a square cost matrix (min total cost)."""
    n = len(cost)
    INF = float("inf")
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    p = [0] * (n + 1)      # p[j] = row matched to column j (1-based; 0 = free)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = INF
            j1 = 0
            row = cost[i0 - 1]
            for j in range(1, n + 1):
                if not used[j]:
                    cur = row[j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    col_of_row = [0] * n
    for j in range(1, n + 1):
        if p[j] > 0:
            col_of_row[p[j] - 1] = j - 1
    return col_of_row


def _min_cost(cost: list[list[float]]) -> float:
    cols = _hungarian(cost)
    return sum(cost[i][cols[i]] for i in range(len(cost)))


def _lex_refine(cost: list[list[float]], n_real_rows: int) -> list[int]:
    """Among minimum-cost assignments, pick the lexicographically smallest
    (by each real row's column index, rows in order)."""
    n = len(cost)
    base = _min_cost(cost)
    fixed: dict[int, int] = {}
    rows_left = list(range(n))
    cols_left = list(range(n))
    remaining = base
    for i in range(min(n_real_rows, n)):
        rows_left.remove(i)
        for j in sorted(cols_left):
            rest_cols = [c for c in cols_left if c != j]
            if rows_left:
                minor = [[cost[r][c] for c in rest_cols] for r in rows_left]
                tail = _min_cost(minor)
            else:
                tail = 0.0
            if cost[i][j] + tail <= remaining + _COST_TIE_TOL:
                fixed[i] = j
                cols_left = rest_cols
                remaining -= cost[i][j]
                break
    # Fill dummy rows with whatever is left (their cost is zero anyway).
    result = [0] * n
    leftovers = iter(sorted(cols_left))
    for i in range(n):
        result[i] = fixed[i] if i in fixed else next(leftovers)
    return result


def solve_munkres(robots, targets) -> Assignment:
    """Minimum total straight-line distance pairing of robots to targets.

    ``robots`` and ``targets`` are sequences of (x, y) points (targets may
    also be :class:`Target` objects, whose points are used and which are
    carried through to the result). Either side may be larger; the surplus
    is left unpaired (robots hold position / targets go unserved).
    """
    robot_pts = [np.asarray(r, dtype=float) for r in robots]
    target_objs = [t if isinstance(t, Target) else Target(region_id=-1, point=(float(t[0]), float(t[1])), sub=k)
                   for k, t in enumerate(targets)]
    nr, nt = len(robot_pts), len(target_objs)
    if nr == 0 or nt == 0:
        return Assignment(pairs=(), cost=0.0, unserved=tuple(range(nt)))

    n = max(nr, nt)
    cost = [[0.0] * n for _ in range(n)]
    for i in range(nr):
        rx, ry = robot_pts[i]
        for j in range(nt):
            tx, ty = target_objs[j].point
            cost[i][j] = math.dist((rx, ry), (tx, ty))

    if n <= _LEX_REFINE_MAX_N:
        cols = _lex_refine(cost, nr)
    else:
        cols = _hungarian(cost)

    pairs = []
    served = set()
    for i in range(nr):
        j = cols[i]
        if j < nt:
            pairs.append((i, target_objs[j]))
            served.add(j)
    pairs.sort(key=lambda p: p[0])
    total = sum(math.dist(tuple(robot_pts[i]), t.point) for i, t in pairs)
    unserved = tuple(j for j in range(nt) if j not in served)
    return Assignment(pairs=tuple(pairs), cost=total, unserved=unserved)


def prioritize_targets(regions: list[Region], finger: tuple[float, float] | None,
                       n_robots: int,
                       min_separation: float = FOOTPRINT_DIAGONAL_M) -> list[Target]:
    """Turn touchable regions into at most ``n_robots`` target points.

    One target per region. The region under (or nearest to) the finger gets
    its target at the member cell nearest the finger, so a robot parks under
    the fingertip; other regions are served at their centroid (snapped onto a
    member cell). When regions outnumber robots, the ones nearest the finger
    win. When robots outnumber regions, the surplus spreads over the largest
    region on a uniform sub-grid with at least a footprint diagonal between
    targets.
    """
    if n_robots < 1:
        raise ValueError("n_robots must be >= 1")
    if not regions:
        return []

    if finger is not None:
        dists = [r.distance_to(finger) for r in regions]
        finger_idx = int(np.argmin(dists))
    else:
        dists = [0.0] * len(regions)
        finger_idx = -1

    if len(regions) > n_robots:
        order = sorted(range(len(regions)), key=lambda k: (dists[k], regions[k].id))
        chosen = sorted(order[:n_robots])  # keep area-descending input order
    else:
        chosen = list(range(len(regions)))

    targets: list[Target] = []
    for k in chosen:
        r = regions[k]
        if k == finger_idx and finger is not None:
            point = r.nearest_cell(finger)
        else:
            point = r.nearest_cell(r.centroid)  # centroid snapped into the region
        targets.append(Target(region_id=r.id, point=point, sub=0))

    surplus = n_robots - len(targets)
    if surplus > 0:
        targets.extend(_spread_targets(regions[0], targets, surplus, min_separation))
    return targets


def _spread_targets(region: Region, existing: list[Target], count: int,
                    min_separation: float) -> list[Target]:
    """Extra sub-targets inside ``region`` on a uniform grid over its bounding
    box, snapped to member cells, keeping pairwise separation."""
    centers = region.cell_centers()
    lo = centers.min(axis=0)
    hi = centers.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    total = count + sum(1 for t in existing if t.region_id == region.id)
    # Grid resolution proportional to the box aspect, enough nodes for `total`.
    nx = max(1, int(round(math.sqrt(total * span[0] / span[1]))))
    ny = max(1, math.ceil(total / nx))
    while nx * ny < total:
        nx += 1
    xs = np.linspace(lo[0], hi[0], nx) if nx > 1 else np.array([(lo[0] + hi[0]) / 2])
    ys = np.linspace(lo[1], hi[1], ny) if ny > 1 else np.array([(lo[1] + hi[1]) / 2])

    kept_pts = [np.asarray(t.point) for t in existing]
    out: list[Target] = []
    sub = 1
    for gy in ys:
        for gx in xs:
            if len(out) >= count:
                break
            cand = np.asarray(region.nearest_cell((float(gx), float(gy))))
            if all(np.linalg.norm(cand - p) >= min_separation for p in kept_pts):
                out.append(Target(region_id=region.id, point=(float(cand[0]), float(cand[1])),
                                  sub=sub))
                kept_pts.append(cand)
                sub += 1
    return out


def reassign_policy(prev: Assignment, robots, targets: list[Target],
                    hysteresis: float = DEFAULT_HYSTERESIS_M) -> Assignment:
    """Fresh optimal assignment, damped against churn.

    A robot keeps its previous target (same region/sub identity, current
    position) unless the new optimum improves that robot's own distance by at
    least ``hysteresis``; the remaining robots and targets are re-solved.
    """
    if hysteresis < 0:
        raise ValueError("hysteresis must be >= 0")
    proposed = solve_munkres(robots, targets)
    if not prev.pairs:
        return proposed

    robot_pts = [np.asarray(r, dtype=float) for r in robots]
    by_key = {t.key: t for t in targets}
    prev_by_robot = {rid: t for rid, t in prev.pairs}

    kept: dict[int, Target] = {}
    for rid, new_t in proposed.pairs:
        old = prev_by_robot.get(rid)
        if old is None or old.key == new_t.key:
            continue
        cur_old = by_key.get(old.key)
        if cur_old is None or cur_old in kept.values():
            continue
        d_old = math.dist(tuple(robot_pts[rid]), cur_old.point)
        d_new = math.dist(tuple(robot_pts[rid]), new_t.point)
        if d_old - d_new < hysteresis:
            kept[rid] = cur_old

    if not kept:
        return proposed

    kept_keys = {t.key for t in kept.values()}
    rest_robot_ids = [i for i in range(len(robot_pts)) if i not in kept]
    rest_targets = [t for t in targets if t.key not in kept_keys]
    sub = solve_munkres([robot_pts[i] for i in rest_robot_ids], rest_targets)

    pairs = list(kept.items())
    for local_id, t in sub.pairs:
        pairs.append((rest_robot_ids[local_id], t))
    pairs.sort(key=lambda p: p[0])
    total = sum(math.dist(tuple(robot_pts[i]), t.point) for i, t in pairs)
    served_keys = {t.key for _, t in pairs}
    unserved = tuple(j for j, t in enumerate(targets) if t.key not in served_keys)
    return Assignment(pairs=tuple(pairs), cost=total, unserved=unserved)
