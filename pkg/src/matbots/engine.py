"""Deterministic 60 FPS simulation loop.

Tick order: refresh the height map on its 0.5 s cadence (sampling amortized
over ticks, snapshot swapped atomically), extract touchable regions, turn
regions into finger-aware targets, assign robots (full re-solve only on
refresh or when the target identity set changes, damped by hysteresis),
derive per-robot height/tilt/yaw from the scene at the *sensed* robot
position, plan velocities (distance-scaled approach + RVO + a hard proximity
backstop), step the plants, accumulate metrics.

All randomness (robot spawn, sensor noise, benchmark targets) derives from
the single scenario seed, so a scenario replays bit-identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import assignment as asg
from . import motion
from . import plant as plantmod
from .config import ConfigError, EngineConfig
from .hand import FingerSample, resample
from .regions import (DEFAULT_SPACING_M, HeightMap, HeightMapBuilder, Region, RegionTracker,
                      build_heightmap, extract_regions, grid_shape, region_outline)
from .scenario import ScenarioSpec
from .scene import CAP_HALFWIDTH_M, Scene

GOVERNOR_MARGIN_M = 0.001
BENCH_TARGET_SEPARATION_M = 0.08
GRADIENT_PROBE_M = 0.01
GRADIENT_FLAT_EPS = 0.02      # slopes below ~1 degree: don't chase a yaw


@dataclass
class MetricsReport:
    """Aggregated outcome of one scenario run."""

    kind: str
    duration: float
    ticks: int
    robot_count: int
    seed: int
    reach_times: tuple[float, ...] = ()
    reach_timeouts: int = 0
    mean_reach_time: float | None = None
    contact_ticks: int = 0
    contact_height_error_mean: float | None = None
    contact_height_error_max: float | None = None
    follow_within_ratio: float | None = None
    min_pairwise_distance: float | None = None
    collision_count: int = 0
    assignment_churn_per_s: float = 0.0
    faults: int = 0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "duration_s": self.duration,
            "ticks": self.ticks,
            "robot_count": self.robot_count,
            "seed": self.seed,
            "reach_times_s": list(self.reach_times),
            "reach_timeouts": self.reach_timeouts,
            "mean_reach_time_s": self.mean_reach_time,
            "contact_ticks": self.contact_ticks,
            "contact_height_error_mean_m": self.contact_height_error_mean,
            "contact_height_error_max_m": self.contact_height_error_max,
            "follow_within_ratio": self.follow_within_ratio,
            "min_pairwise_distance_m": self.min_pairwise_distance,
            "collision_count": self.collision_count,
            "assignment_churn_per_s": self.assignment_churn_per_s,
            "faults": self.faults,
        }


def spawn_positions(n: int, rng: np.random.Generator, bounds: tuple[float, float],
                    radius: float, min_separation: float) -> list[tuple[float, float]]:
    """Random non-overlapping robot start positions, margin off the walls."""
    out: list[tuple[float, float]] = []
    lo = radius
    hix, hiy = bounds[0] - radius, bounds[1] - radius
    attempts = 0
    while len(out) < n:
        p = (float(rng.uniform(lo, hix)), float(rng.uniform(lo, hiy)))
        if all(math.dist(p, q) >= min_separation for q in out):
            out.append(p)
        attempts += 1
        if attempts > 10000 * n:
            raise RuntimeError("could not place robots without overlap")
    return out


class Engine:
    """One simulation session. Use :meth:`tick` to advance, or :func:`run_scenario`."""

    def __init__(self, config: EngineConfig, scene: Scene | None = None,
                 track: list[FingerSample] | None = None, kind: str = "scene",
                 trial_period: float = 5.0, targets_per_trial: int = 1):
        self.config = config
        self.scene = scene
        self.track = track
        self.kind = kind
        self.trial_period = trial_period
        self.targets_per_trial = targets_per_trial
        self.tick_index = 0
        self.paused = False

        if scene is not None:
            nx, _ = grid_shape(scene.bounds, config.heightmap_spacing)
            min_rows = max(1, math.ceil(nx / math.floor(config.heightmap_period / config.dt)))
            if config.heightmap_rows_per_tick < min_rows:
                raise ConfigError(
                    f"heightmap_rows_per_tick={config.heightmap_rows_per_tick} cannot finish "
                    f"{nx} rows inside the {config.heightmap_period} s refresh period "
                    f"(need >= {min_rows})")

        ss = np.random.SeedSequence(config.seed)
        s_spawn, s_sensor, s_bench = ss.spawn(3)
        self._sensor_rng = np.random.default_rng(s_sensor)
        self._bench_rng = np.random.default_rng(s_bench)

        r = config.rvo.agent_radius
        starts = spawn_positions(config.robot_count, np.random.default_rng(s_spawn),
                                 self._bounds(), r, 2.0 * r + 4.0 * GOVERNOR_MARGIN_M)
        h0 = config.plant.height_range[0]
        self.robots: list[plantmod.RobotState] = [
            plantmod.RobotState(id=i, pos=starts[i], height=h0) for i in range(config.robot_count)
        ]

        self.heightmap: HeightMap | None = None
        self.regions: list[Region] = []
        self._outlines: dict[int, list] = {}
        self._tracker = RegionTracker()
        self._builder: HeightMapBuilder | None = None
        if scene is not None:
            self.heightmap = build_heightmap(scene, 0.0, config.heightmap_spacing)
            self.regions = self._tracker.update(
                extract_regions(self.heightmap, config.touch_threshold))
            self._cache_outlines()
            self._builder = HeightMapBuilder(scene, config.heightmap_spacing,
                                             config.heightmap_rows_per_tick)

        self.finger: FingerSample | None = None
        self._finger_mailbox: FingerSample | None = None
        self._finger_prev: FingerSample | None = None

        self.assignment: asg.Assignment = asg.EMPTY_ASSIGNMENT
        self._target_keys: tuple = ()
        self._resolve_pending = True

        # Benchmark trial state.
        self._bench_targets: list[asg.Target] = []
        self._trial_start: float | None = None
        self._trial_reached = False

        # Metrics accumulators. Contact statistics start once a robot first
        # arrives under the touching finger (the acquisition latch): before
        # that there is nothing physical under the fingertip to measure.
        self.reach_times: list[float] = []
        self.reach_timeouts = 0
        self._acquired = False
        self._contact_ticks = 0
        self._follow_ticks = 0
        self._contact_err_sum = 0.0
        self._contact_err_max: float | None = None
        self._min_pairwise: float | None = None
        self._collision_count = 0
        self._churn_events = 0

    # -- small helpers ------------------------------------------------------

    def _bounds(self) -> tuple[float, float]:
        return self.scene.bounds if self.scene is not None else (0.55, 0.55)

    @property
    def time(self) -> float:
        return self.tick_index * self.config.dt

    def active_robots(self) -> list[plantmod.RobotState]:
        return [r for r in self.robots if not r.grasped]

    def set_finger(self, x: float, y: float, z: float) -> None:
        """Live hand input; the latest value wins at the next tick."""
        self._finger_mailbox = FingerSample(t=self.time, pos=(x, y, z), source="live")

    def _surface_height(self, x: float, y: float) -> tuple[float, bool]:
        bx, by = self._bounds()
        x = min(max(x, 0.0), bx)
        y = min(max(y, 0.0), by)
        h, hit = self.scene.sample_heights(np.array([x]), np.array([y]))
        return float(h[0]), bool(hit[0])

    # -- pipeline pieces ----------------------------------------------------

    def _cache_outlines(self) -> None:
        self._outlines = {rg.id: [[float(x), float(y)] for x, y in region_outline(rg)]
                          for rg in self.regions}

    def _refresh_heightmap(self) -> None:
        if self.scene is None:
            return
        due = self.time + 1e-9 >= self.heightmap.stamp + self.config.heightmap_period
        if due and self._builder.complete:
            self.heightmap = self._builder.take(stamp=self.time)
            self.regions = self._tracker.update(
                extract_regions(self.heightmap, self.config.touch_threshold))
            self._cache_outlines()
            self._resolve_pending = True
        self._builder.step()

    def _consume_finger(self) -> None:
        if self._finger_mailbox is not None:
            self._finger_prev = self.finger
            self.finger = self._finger_mailbox
            self._finger_mailbox = None
        elif self.track is not None:
            self._finger_prev = self.finger
            self.finger = resample(self.track, self.time)

    def _current_targets(self) -> list[asg.Target]:
        if self.kind == "reach-bench":
            return self._bench_targets
        if not self.regions:
            return []
        finger_xy = self.finger.pos[:2] if self.finger is not None else None
        return asg.prioritize_targets(self.regions, finger_xy, len(self.active_robots()),
                                      self.config.target_min_separation)

    def _update_assignment(self, targets: list[asg.Target]) -> None:
        keys = tuple(sorted(t.key for t in targets))
        if keys != self._target_keys:
            self._resolve_pending = True
            self._target_keys = keys

        active = self.active_robots()
        positions = [r.pos for r in self.robots]  # robot_id indexes this list
        if not targets or not active:
            if self.assignment.pairs:
                self._churn_events += len(self.assignment.pairs)
            self.assignment = asg.EMPTY_ASSIGNMENT
            self._resolve_pending = False
            return

        if self._resolve_pending:
            # Solve over active robots only, then map back to global ids.
            act_ids = [r.id for r in active]
            prev_local_pairs = []
            for rid, t in self.assignment.pairs:
                if rid in act_ids:
                    prev_local_pairs.append((act_ids.index(rid), t))
            prev_local = asg.Assignment(pairs=tuple(prev_local_pairs), cost=0.0, unserved=())
            local = asg.reassign_policy(prev_local, [positions[i] for i in act_ids], targets,
                                        self.config.hysteresis)
            pairs = tuple((act_ids[i], t) for i, t in local.pairs)
            old = {rid: t.key for rid, t in self.assignment.pairs}
            new = {rid: t.key for rid, t in pairs}
            changed = {rid for rid in set(old) | set(new) if old.get(rid) != new.get(rid)}
            self._churn_events += len(changed)
            self.assignment = asg.Assignment(pairs=pairs, cost=local.cost, unserved=local.unserved)
            self._resolve_pending = False
        else:
            # Keep the pairing, follow the moving target points.
            by_key = {t.key: t for t in targets}
            pairs = tuple((rid, by_key[t.key]) for rid, t in self.assignment.pairs
                          if t.key in by_key)
            cost = sum(math.dist(positions[rid], t.point) for rid, t in pairs)
            served = {t.key for _, t in pairs}
            unserved = tuple(j for j, t in enumerate(targets) if t.key not in served)
            self.assignment = asg.Assignment(pairs=pairs, cost=cost, unserved=unserved)

    def _pose_targets(self, robot: plantmod.RobotState,
                      sensed: plantmod.SensorReading) -> tuple[float, float, float]:
        """(height_target, tilt_target, omega) for one robot."""
        cfg = self.config
        hmin = cfg.plant.height_range[0]
        if self.scene is None:
            return hmin, 0.0, 0.0
        sx, sy = sensed.pos
        bx, by = self._bounds()
        sx = min(max(sx, 0.0), bx)
        sy = min(max(sy, 0.0), by)
        h, hit = self._surface_height(sx, sy)
        if not hit:
            return hmin, 0.0, 0.0
        height_target = min(max(h, cfg.plant.height_range[0]), cfg.plant.height_range[1])

        # Surface gradient at the sensed position decides the cap yaw; the cap
        # then tilts along its current axis.
        d = GRADIENT_PROBE_M
        hx1, _ = self._surface_height(sx + d, sy)
        hx0, _ = self._surface_height(sx - d, sy)
        hy1, _ = self._surface_height(sx, sy + d)
        hy0, _ = self._surface_height(sx, sy - d)
        gx, gy = (hx1 - hx0) / (2 * d), (hy1 - hy0) / (2 * d)
        if math.hypot(gx, gy) > GRADIENT_FLAT_EPS:
            desired_yaw = math.degrees(math.atan2(gy, gx))
            omega = motion.yaw_controller(sensed.yaw, desired_yaw, cfg.plant.omega_max,
                                          cfg.yaw_gain, cfg.stop_band_yaw)
        else:
            omega = 0.0

        yaw_rad = math.radians(robot.yaw)
        ca, sa = math.cos(yaw_rad), math.sin(yaw_rad)
        off = CAP_HALFWIDTH_M
        ha, _ = self._surface_height(sx - off * ca, sy - off * sa)
        hb, _ = self._surface_height(sx + off * ca, sy + off * sa)
        tilt = math.degrees(math.atan2(hb - ha, 2 * off))
        tilt_target = min(max(tilt, -cfg.plant.tilt_limit), cfg.plant.tilt_limit)
        return height_target, tilt_target, omega

    def _bench_maybe_issue(self) -> None:
        cfg = self.config
        if self._trial_start is not None and self.time + 1e-9 < self._trial_start + self.trial_period:
            return
        if self._trial_start is not None and not self._trial_reached:
            self.reach_timeouts += 1
        n = min(self.targets_per_trial, len(self.active_robots()))
        rng = self._bench_rng
        r = cfg.rvo.agent_radius
        bx, by = self._bounds()
        pts: list[tuple[float, float]] = []
        while len(pts) < n:
            p = (float(rng.uniform(r, bx - r)), float(rng.uniform(r, by - r)))
            if all(math.dist(p, q) >= BENCH_TARGET_SEPARATION_M for q in pts):
                pts.append(p)
        self._bench_targets = [asg.Target(region_id=-1, point=p, sub=k)
                               for k, p in enumerate(pts)]
        self._trial_start = self.time
        self._trial_reached = False
        self._resolve_pending = True

    def _bench_check_reached(self) -> None:
        if self._trial_reached or self._trial_start is None or not self.assignment.pairs:
            return
        band = self.config.stop_band_pos
        for rid, t in self.assignment.pairs:
            if math.dist(self.robots[rid].pos, t.point) > band:
                return
        self.reach_times.append(self.time - self._trial_start)
        self._trial_reached = True

    # -- the tick -----------------------------------------------------------

    def tick(self) -> None:
        cfg = self.config
        now = self.time

        if self.kind == "reach-bench":
            self._bench_maybe_issue()
        else:
            self._refresh_heightmap()
        self._consume_finger()

        targets = self._current_targets()
        self._update_assignment(targets)

        active = self.active_robots()
        n_act = len(active)

        sensor_block = None
        if self.scene is not None and n_act > 0:
            sensor_block = self._sensor_rng.normal(0.0, 1.0, size=(n_act, 5))

        # Plan from where the robots will be when this command activates
        # (commands spend the control-loop latency in the pipe).
        bounds = self._bounds()
        P_pred = np.zeros((n_act, 2))
        V_cur = np.zeros((n_act, 2))
        for k, robot in enumerate(active):
            px = robot.pos[0] + robot.v[0] * cfg.plant.latency
            py = robot.pos[1] + robot.v[1] * cfg.plant.latency
            P_pred[k] = (min(max(px, 0.0), bounds[0]), min(max(py, 0.0), bounds[1]))
            V_cur[k] = robot.v

        prefs = np.zeros((n_act, 2))
        pose_cmds: list[tuple[float, float, float]] = []
        for k, robot in enumerate(active):
            if sensor_block is not None:
                nrow = sensor_block[k]
                noise = cfg.plant.noise
                sensed = plantmod.SensorReading(
                    pos=(plantmod._quantize(robot.pos[0] + nrow[0] * noise.pos_sigma, cfg.plant.pos_quantum),
                         plantmod._quantize(robot.pos[1] + nrow[1] * noise.pos_sigma, cfg.plant.pos_quantum)),
                    yaw=plantmod._quantize(robot.yaw + nrow[2] * noise.yaw_sigma, cfg.plant.yaw_quantum),
                    height=robot.height + nrow[3] * noise.height_sigma,
                    tilt=robot.tilt + nrow[4] * noise.tilt_sigma,
                )
            else:
                sensed = plantmod.read_sensors(robot, cfg.plant, rng=None)
            pose_cmds.append(self._pose_targets(robot, sensed))
            target = self.assignment.target_of(robot.id)
            if target is not None:
                prefs[k] = motion.preferred_velocity(P_pred[k], target.point, cfg.plant.v_max,
                                                     cfg.speed_gain, cfg.stop_band_pos)

        if n_act > 0:
            if cfg.avoid_hand and self.finger is not None and self.kind == "scene":
                fv = self._finger_velocity()
                P2 = np.vstack([P_pred, [self.finger.pos[:2]]])
                V2 = np.vstack([V_cur, [fv]])
                F2 = np.vstack([prefs, [[0.0, 0.0]]])
                selected = motion.rvo_velocities(P2, V2, F2, cfg.rvo)[:n_act]
            else:
                selected = motion.rvo_velocities(P_pred, V_cur, prefs, cfg.rvo)
        else:
            selected = np.zeros((0, 2))

        for k, robot in enumerate(active):
            h_t, tilt_t, omega = pose_cmds[k]
            cmd = plantmod.MotionCommand(v=(float(selected[k, 0]), float(selected[k, 1])),
                                         omega=omega, height_target=h_t, tilt_target=tilt_t)
            self.robots[robot.id] = plantmod.enqueue_command(self.robots[robot.id], cmd, now)

        # Step the plants: activate due commands, then clamp the velocities
        # that will actually execute so no pair can close below the safety
        # floor, whatever stale commands just came out of the pipe.
        self.tick_index += 1
        t_end = self.time
        for i, robot in enumerate(self.robots):
            self.robots[i] = plantmod.activate_commands(robot, cfg.plant, t_end)
        exec_active = self.active_robots()
        if exec_active:
            P_now = np.array([r.pos for r in exec_active])
            V_exec = np.array([plantmod.commanded_velocity(r, cfg.plant) for r in exec_active])
            V_gov = motion.proximity_governor(
                P_now, V_exec, cfg.dt,
                2.0 * cfg.rvo.agent_radius + max(GOVERNOR_MARGIN_M, cfg.rvo.safety_margin),
                bounds=bounds)
            for k, robot in enumerate(exec_active):
                self.robots[robot.id] = plantmod.integrate(
                    self.robots[robot.id], cfg.plant, cfg.dt, bounds,
                    v_override=(float(V_gov[k, 0]), float(V_gov[k, 1])))

        self._update_metrics(t_end)
        if self.kind == "reach-bench":
            self._bench_check_reached()

    def _finger_velocity(self) -> tuple[float, float]:
        if self.finger is None or self._finger_prev is None:
            return (0.0, 0.0)
        dt = self.finger.t - self._finger_prev.t
        if dt <= 0:
            return (0.0, 0.0)
        return ((self.finger.pos[0] - self._finger_prev.pos[0]) / dt,
                (self.finger.pos[1] - self._finger_prev.pos[1]) / dt)

    def _update_metrics(self, t_end: float) -> None:
        cfg = self.config
        active = self.active_robots()
        if len(active) >= 2:
            P = np.array([r.pos for r in active])
            diff = P[:, None, :] - P[None, :, :]
            d = np.hypot(diff[..., 0], diff[..., 1])
            dmin = float(d[motion._triu_cache(len(active))].min())
            if self._min_pairwise is None or dmin < self._min_pairwise:
                self._min_pairwise = dmin
            if dmin < 2.0 * cfg.rvo.agent_radius - 1e-12:
                self._collision_count += 1

        if self.scene is not None and self.finger is not None and active:
            fx, fy, fz = self.finger.pos
            if 0 <= fx <= self._bounds()[0] and 0 <= fy <= self._bounds()[1]:
                h, hit = self._surface_height(fx, fy)
                if hit and fz <= h + cfg.contact_slack:
                    dists = [math.dist((fx, fy), r.pos) for r in active]
                    k = int(np.argmin(dists))
                    robot = active[k]
                    within = dists[k] <= 0.03
                    lo, hi = cfg.plant.height_range
                    rh, rhit = self._surface_height(*robot.pos)
                    err = abs(robot.height - min(max(rh, lo), hi)) if rhit else None
                    if within and err is not None and err <= cfg.contact_slack:
                        # The cap has met the fingertip: the encounter exists.
                        self._acquired = True
                    if self._acquired:
                        self._contact_ticks += 1
                        if within:
                            self._follow_ticks += 1
                        if err is not None:
                            self._contact_err_sum += err
                            if self._contact_err_max is None or err > self._contact_err_max:
                                self._contact_err_max = err

    # -- session controls (used by the service gateway) ---------------------

    def set_robot_count(self, n: int) -> None:
        if n < 1:
            raise ValueError("robot count must be >= 1")
        cfg_doc = self.config.to_dict()
        cfg_doc["robot_count"] = n
        self.config = EngineConfig.from_dict(cfg_doc)
        ss = np.random.SeedSequence(self.config.seed)
        s_spawn, _, _ = ss.spawn(3)
        r = self.config.rvo.agent_radius
        starts = spawn_positions(n, np.random.default_rng(s_spawn), self._bounds(), r,
                                 2.0 * r + 4.0 * GOVERNOR_MARGIN_M)
        h0 = self.config.plant.height_range[0]
        self.robots = [plantmod.RobotState(id=i, pos=starts[i], height=h0) for i in range(n)]
        self.assignment = asg.EMPTY_ASSIGNMENT
        self._resolve_pending = True

    def load_scene(self, scene: Scene) -> None:
        self.scene = scene
        self.heightmap = build_heightmap(scene, self.time, self.config.heightmap_spacing)
        self._tracker = RegionTracker()
        self.regions = self._tracker.update(
            extract_regions(self.heightmap, self.config.touch_threshold))
        self._cache_outlines()
        self._builder = HeightMapBuilder(scene, self.config.heightmap_spacing,
                                         self.config.heightmap_rows_per_tick)
        self.assignment = asg.EMPTY_ASSIGNMENT
        self._resolve_pending = True

    def grasp_robot(self, robot_id: int, lift: bool = True) -> None:
        self.robots[robot_id] = plantmod.grasp(self.robots[robot_id], lift)
        self._resolve_pending = True

    def place_robot(self, robot_id: int, pos: tuple[float, float]) -> None:
        others = [r.pos for r in self.robots if r.id != robot_id and not r.grasped]
        self.robots[robot_id] = plantmod.place(
            self.robots[robot_id], pos, others, 2.0 * self.config.rvo.agent_radius,
            self._bounds())
        self._resolve_pending = True

    # -- reporting ----------------------------------------------------------

    def snapshot(self) -> dict:
        """Immutable view of the world for streaming and traces."""
        targets = {rid: t for rid, t in self.assignment.pairs}
        robots = []
        band = self.config.stop_band_pos
        for r in self.robots:
            t = targets.get(r.id)
            robots.append({
                "id": r.id,
                "x": r.pos[0], "y": r.pos[1],
                "yaw": r.yaw, "height": r.height, "tilt": r.tilt,
                "vx": r.v[0], "vy": r.v[1],
                "grasped": r.grasped,
                "target": list(t.point) if t else None,
                "assignment_id": f"{t.region_id}:{t.sub}" if t else None,
                "in_stop_band": bool(t and math.dist(r.pos, t.point) <= band),
            })
        regions = [{
            "id": rg.id,
            "centroid": [rg.centroid[0], rg.centroid[1]],
            "peak_height": rg.peak_height,
            "area_m2": rg.area_m2,
            "outline": self._outlines.get(rg.id, []),
        } for rg in self.regions]
        finger_surface = None
        finger_contact = False
        if self.finger is not None and self.scene is not None:
            fx, fy, fz = self.finger.pos
            bx, by = self._bounds()
            if 0 <= fx <= bx and 0 <= fy <= by:
                h, hit = self._surface_height(fx, fy)
                if hit:
                    finger_surface = h
                    finger_contact = fz <= h + self.config.contact_slack
        return {
            "tick": self.tick_index,
            "time": self.time,
            "bounds": list(self._bounds()),
            "robots": robots,
            "regions": regions,
            "finger": list(self.finger.pos) if self.finger else None,
            "finger_surface": finger_surface,
            "finger_contact": finger_contact,
            "paused": self.paused,
        }

    def report(self) -> MetricsReport:
        duration = self.time
        timeouts = self.reach_timeouts
        if (self.kind == "reach-bench" and self._trial_start is not None
                and not self._trial_reached
                and duration + 1e-9 >= self._trial_start + self.trial_period):
            timeouts += 1
        mean_reach = (sum(self.reach_times) / len(self.reach_times)
                      if self.reach_times else None)
        return MetricsReport(
            kind=self.kind,
            duration=duration,
            ticks=self.tick_index,
            robot_count=self.config.robot_count,
            seed=self.config.seed,
            reach_times=tuple(self.reach_times),
            reach_timeouts=timeouts,
            mean_reach_time=mean_reach,
            contact_ticks=self._contact_ticks,
            contact_height_error_mean=(self._contact_err_sum / self._contact_ticks
                                       if self._contact_ticks else None),
            contact_height_error_max=self._contact_err_max,
            follow_within_ratio=(self._follow_ticks / self._contact_ticks
                                 if self._contact_ticks else None),
            min_pairwise_distance=self._min_pairwise,
            collision_count=self._collision_count,
            assignment_churn_per_s=(self._churn_events / duration if duration > 0 else 0.0),
            faults=sum(r.faults for r in self.robots),
        )


def run_scenario(spec: ScenarioSpec, base_config: EngineConfig | None = None,
                 on_tick=None) -> MetricsReport:
    """Run a scenario to completion and aggregate its metrics.

    ``on_tick(engine)`` is invoked after every tick (trace writers hook in
    here). A zero-duration scenario returns an empty report.
    """
    spec.validate()
    cfg = spec.build_config(base_config)
    engine = build_engine(spec, cfg)
    if spec.kind == "reach-bench":
        duration = spec.trials * spec.trial_period
    else:
        duration = spec.duration
    n_ticks = int(round(duration / cfg.dt))
    for _ in range(n_ticks):
        engine.tick()
        if on_tick is not None:
            on_tick(engine)
    return engine.report()


def build_engine(spec: ScenarioSpec, cfg: EngineConfig | None = None) -> Engine:
    spec.validate()
    if cfg is None:
        cfg = spec.build_config()
    if spec.kind == "reach-bench":
        return Engine(cfg, scene=None, track=None, kind="reach-bench",
                      trial_period=spec.trial_period,
                      targets_per_trial=spec.targets_per_trial)
    return Engine(cfg, scene=spec.load_scene(), track=spec.load_track(), kind="scene")
