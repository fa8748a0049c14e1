"""Simulated robot plant: the measured physical envelope of one robot.

Commands pass through a fixed activation delay (the measured 80 ms control
loop latency) and are then integrated under hard rate limits: 24 cm/s planar,
1500 deg/s yaw, 2.8 cm/s reel extension, with the height clamped to the 8-32 cm
actuator range and the cap tilt to +-60 degrees. Tilt changes by differential
reel extension, so its slew rate is the reel rate over the cap half-width.

Sensor reads add seeded Gaussian noise (sigmas back-solved from the measured
mean absolute errors, sigma = MAE * sqrt(pi/2)) and then quantize position and
yaw to the mat tracking resolution (1.42 mm, 1 degree) by truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .scene import CAP_HALFWIDTH_M, MAT_BOUNDS_M

_MAE_TO_SIGMA = math.sqrt(math.pi / 2.0)


@dataclass(frozen=True)
class NoiseParams:
    """Per-channel Gaussian sigmas; defaults reproduce the measured mean
    absolute errors (3 mm position per axis, 3 deg yaw, 3 mm height, 5 deg tilt)."""

    pos_sigma: float = 0.003 * _MAE_TO_SIGMA
    yaw_sigma: float = 3.0 * _MAE_TO_SIGMA
    height_sigma: float = 0.003 * _MAE_TO_SIGMA
    tilt_sigma: float = 5.0 * _MAE_TO_SIGMA


@dataclass(frozen=True)
class PlantConfig:
    v_max: float = 0.24                 # m/s, loaded horizontal top speed
    omega_max: float = 1500.0           # deg/s
    reel_rate: float = 0.028            # m/s vertical extension speed
    height_range: tuple[float, float] = (0.08, 0.32)
    tilt_limit: float = 60.0            # degrees either way
    latency: float = 0.080              # s between command issue and activation
    pos_quantum: float = 0.00142        # m, mat tracking resolution
    yaw_quantum: float = 1.0            # degrees
    noise: NoiseParams = field(default_factory=NoiseParams)
    seed: int = 0

    def __post_init__(self):
        if min(self.v_max, self.omega_max, self.reel_rate, self.pos_quantum,
               self.yaw_quantum) <= 0:
            raise ValueError("plant rates and quanta must be strictly positive")
        if self.latency < 0:
            raise ValueError("latency must be >= 0")
        if not (0 < self.height_range[0] < self.height_range[1]):
            raise ValueError("height range must be ordered and positive")

    @property
    def tilt_rate(self) -> float:
        """Max tilt slew in deg/s, implied by differential reel extension."""
        return math.degrees(self.reel_rate / CAP_HALFWIDTH_M)


@dataclass(frozen=True)
class MotionCommand:
    v: tuple[float, float] = (0.0, 0.0)   # m/s planar velocity
    omega: float = 0.0                    # deg/s yaw rate
    height_target: float = 0.08           # m
    tilt_target: float = 0.0              # degrees

    def has_nan(self) -> bool:
        return not (math.isfinite(self.v[0]) and math.isfinite(self.v[1])
                    and math.isfinite(self.omega) and math.isfinite(self.height_target)
                    and math.isfinite(self.tilt_target))


@dataclass(frozen=True)
class SensorReading:
    pos: tuple[float, float]
    yaw: float
    height: float
    tilt: float


@dataclass(frozen=True)
class RobotState:
    id: int
    pos: tuple[float, float]
    yaw: float = 0.0
    height: float = 0.08
    tilt: float = 0.0
    v: tuple[float, float] = (0.0, 0.0)
    queue: tuple[tuple[MotionCommand, float], ...] = ()
    active: MotionCommand | None = None
    grasped: bool = False
    faults: int = 0


class PlacementError(ValueError):
    """Robot placement rejected (out of bounds or overlapping another robot)."""


def enqueue_command(state: RobotState, cmd: MotionCommand, now: float) -> RobotState:
    """Append a command stamped ``now``; grasped robots ignore commands."""
    if state.grasped:
        return state
    return replace(state, queue=state.queue + ((cmd, now),))


def _clip_speed(v: tuple[float, float], v_max: float) -> tuple[float, float]:
    speed = math.hypot(v[0], v[1])
    if speed <= v_max or speed == 0.0:
        return (float(v[0]), float(v[1]))
    k = v_max / speed
    return (v[0] * k, v[1] * k)


def _wrap_deg(a: float) -> float:
    a = (a + 180.0) % 360.0 - 180.0
    return a


def activate_commands(state: RobotState, cfg: PlantConfig, now: float) -> RobotState:
    """Promote queued commands whose latency has elapsed (newest wins).

    NaN commands are dropped and counted as faults. The returned state's
    :func:`commanded_velocity` is what the robot will execute next tick.
    """
    if state.grasped:
        return state
    queue = state.queue
    active = state.active
    faults = state.faults
    ready = [qc for qc in queue if qc[1] + cfg.latency <= now + 1e-12]
    if ready:
        queue = tuple(qc for qc in queue if qc[1] + cfg.latency > now + 1e-12)
        cmd = ready[-1][0]
        if cmd.has_nan():
            faults += 1
        else:
            active = cmd
    return replace(state, queue=queue, active=active, faults=faults)


def commanded_velocity(state: RobotState, cfg: PlantConfig) -> tuple[float, float]:
    """Planar velocity the active command asks for, after the speed cap."""
    if state.grasped or state.active is None:
        return (0.0, 0.0)
    return _clip_speed(state.active.v, cfg.v_max)


def integrate(state: RobotState, cfg: PlantConfig, dt: float,
              bounds: tuple[float, float] = MAT_BOUNDS_M,
              v_override: tuple[float, float] | None = None) -> RobotState:
    """Integrate the active command for ``dt`` under the rate limits.

    ``v_override`` replaces the commanded planar velocity for this step only
    (the engine's proximity backstop uses it); it is still capped.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if state.grasped:
        return state
    active = state.active
    v = _clip_speed(v_override, cfg.v_max) if v_override is not None \
        else commanded_velocity(state, cfg)
    if active is None:
        omega = 0.0
        height_target = state.height
        tilt_target = state.tilt
    else:
        omega = min(max(active.omega, -cfg.omega_max), cfg.omega_max)
        height_target = active.height_target
        tilt_target = active.tilt_target

    x = min(max(state.pos[0] + v[0] * dt, 0.0), bounds[0])
    y = min(max(state.pos[1] + v[1] * dt, 0.0), bounds[1])
    yaw = _wrap_deg(state.yaw + omega * dt)

    step = cfg.reel_rate * dt
    dh = height_target - state.height
    height = state.height + min(max(dh, -step), step)
    height = min(max(height, cfg.height_range[0]), cfg.height_range[1])

    rate = cfg.tilt_rate * dt
    dtilt = tilt_target - state.tilt
    tilt = state.tilt + min(max(dtilt, -rate), rate)
    tilt = min(max(tilt, -cfg.tilt_limit), cfg.tilt_limit)

    return RobotState(id=state.id, pos=(x, y), yaw=yaw, height=height, tilt=tilt, v=v,
                      queue=state.queue, active=active, grasped=state.grasped,
                      faults=state.faults)


def step_robot(state: RobotState, cfg: PlantConfig, now: float, dt: float,
               bounds: tuple[float, float] = MAT_BOUNDS_M) -> RobotState:
    """Advance one robot by ``dt`` seconds ending at time ``now``: activate
    due commands, then integrate them under the physical envelope."""
    return integrate(activate_commands(state, cfg, now), cfg, dt, bounds)


def _quantize(value: float, quantum: float) -> float:
    return quantum * math.floor(value / quantum + 1e-9)


def read_sensors(state: RobotState, cfg: PlantConfig,
                 rng: np.random.Generator | None = None) -> SensorReading:
    """Noisy, quantized view of the robot state.

    ``rng`` supplies the noise stream (the engine owns one per run for
    determinism); without it the read is noise-free but still quantized.
    """
    if rng is not None:
        n = cfg.noise
        nx, ny, nyaw, nh, ntilt = rng.normal(0.0, 1.0, size=5)
        px = state.pos[0] + nx * n.pos_sigma
        py = state.pos[1] + ny * n.pos_sigma
        yaw = state.yaw + nyaw * n.yaw_sigma
        height = state.height + nh * n.height_sigma
        tilt = state.tilt + ntilt * n.tilt_sigma
    else:
        px, py = state.pos
        yaw, height, tilt = state.yaw, state.height, state.tilt
    return SensorReading(
        pos=(_quantize(px, cfg.pos_quantum), _quantize(py, cfg.pos_quantum)),
        yaw=_quantize(yaw, cfg.yaw_quantum),
        height=height,
        tilt=tilt,
    )


def grasp(state: RobotState, lift: bool) -> RobotState:
    """Pick the robot up (or signal release without moving it)."""
    return replace(state, grasped=lift, v=(0.0, 0.0))


def place(state: RobotState, pos: tuple[float, float], others,
          min_clearance: float, bounds: tuple[float, float] = MAT_BOUNDS_M) -> RobotState:
    """Put a grasped robot down at ``pos``.

    ``others`` are the positions of all other robots; placement closer than
    ``min_clearance`` to any of them, or out of bounds, is rejected.
    """
    x, y = float(pos[0]), float(pos[1])
    if not (0.0 <= x <= bounds[0] and 0.0 <= y <= bounds[1]):
        raise PlacementError(f"place position ({x:.3f}, {y:.3f}) out of bounds")
    for q in others:
        if math.dist((x, y), (float(q[0]), float(q[1]))) < min_clearance:
            raise PlacementError(f"place position ({x:.3f}, {y:.3f}) overlaps another robot")
    return replace(state, pos=(x, y), v=(0.0, 0.0), queue=(), active=None, grasped=False)
