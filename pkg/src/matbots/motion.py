"""Per-tick velocity planning: distance-scaled approach plus reciprocal
velocity obstacles.

Each robot drives straight at its target with speed proportional to the
remaining distance (capped at the loaded top speed) so it brakes smoothly
instead of overshooting, and goes quiet inside the 2 mm / 5 degree stop band.
Collision avoidance selects, per robot, the candidate velocity closest to the
preferred one whose reciprocal velocity obstacle (each active pair shares the
dodge 50/50) is clear of every neighbor over the time horizon. The candidate
set is a fixed, deterministic fan of headings and speeds around the preferred
velocity; the preferred velocity itself and a full stop are always candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

V_MAX_MPS = 0.24             # loaded horizontal top speed
OMEGA_MAX_DPS = 1500.0       # base yaw rate limit
STOP_BAND_POS_M = 0.002      # closer than this to the target: stop
STOP_BAND_YAW_DEG = 5.0      # yaw error within this: no rotation
DEFAULT_SPEED_GAIN = 2.0     # m/s of commanded speed per meter of distance
DEFAULT_YAW_GAIN = 10.0      # deg/s per degree of yaw error


@dataclass(frozen=True)
class RvoParams:
    """Reciprocal-velocity-obstacle tuning knobs."""

    time_horizon: float = 1.0      # seconds of look-ahead for candidate culling
    neighbor_radius: float = 0.20  # meters; farther robots are ignored
    agent_radius: float = 0.0333   # circumscribed disc of the square footprint
    safety_margin: float = 0.004   # extra clearance added to the collision radius
    n_speeds: int = 8
    n_angles: int = 17

    def __post_init__(self):
        if min(self.time_horizon, self.neighbor_radius, self.agent_radius) <= 0:
            raise ValueError("RVO parameters must be strictly positive")
        if self.safety_margin < 0:
            raise ValueError("safety_margin must be >= 0")
        if self.n_speeds * self.n_angles < 128:
            raise ValueError("need at least 128 candidate velocities")


def preferred_velocity(pos, target, v_max: float, gain: float = DEFAULT_SPEED_GAIN,
                       stop_band: float = STOP_BAND_POS_M) -> np.ndarray:
    """Velocity toward ``target``: ``min(v_max, gain * dist)`` along the line,
    zero inside the stop band."""
    if v_max <= 0:
        raise ValueError("v_max must be positive")
    delta = np.asarray(target, dtype=float) - np.asarray(pos, dtype=float)
    dist = float(np.hypot(delta[0], delta[1]))
    if dist <= stop_band:
        return np.zeros(2)
    speed = min(v_max, gain * dist)
    return delta * (speed / dist)


def yaw_error_deg(current: float, desired: float) -> float:
    """Shortest-arc yaw error in (-180, 180]; an exact 180 resolves CCW (+180)."""
    e = (desired - current) % 360.0
    if e > 180.0:
        e -= 360.0
    return e


def yaw_controller(current_yaw: float, desired_yaw: float, omega_max: float,
                   gain: float = DEFAULT_YAW_GAIN,
                   stop_band_deg: float = STOP_BAND_YAW_DEG) -> float:
    """Proportional yaw rate (deg/s), clamped to the base limit, quiet inside
    the stop band."""
    if omega_max <= 0:
        raise ValueError("omega_max must be positive")
    e = yaw_error_deg(current_yaw, desired_yaw)
    if abs(e) <= stop_band_deg:
        return 0.0
    return min(max(gain * e, -omega_max), omega_max)


_OFFSET_CACHE: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}
_TRIU_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _triu_cache(n: int) -> tuple[np.ndarray, np.ndarray]:
    iu = _TRIU_CACHE.get(n)
    if iu is None:
        iu = np.triu_indices(n, k=1)
        _TRIU_CACHE[n] = iu
    return iu


def _candidate_offsets(params: RvoParams) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic (speed_fraction, angle_rad) sampling pattern, body frame."""
    key = (params.n_speeds, params.n_angles)
    cached = _OFFSET_CACHE.get(key)
    if cached is None:
        fractions = np.linspace(1.0, 1.0 / params.n_speeds, params.n_speeds)
        angles = np.radians(np.linspace(-150.0, 150.0, params.n_angles))
        cached = (fractions, angles)
        _OFFSET_CACHE[key] = cached
    return cached


def _build_candidates(pref: np.ndarray, params: RvoParams) -> np.ndarray:
    """Candidate velocities for one agent. Index 0 is the preferred velocity,
    index 1 a full stop; the rest fan out around the preferred heading at
    reduced speeds."""
    m = 2 + params.n_speeds * params.n_angles
    out = np.zeros((m, 2))
    out[0] = pref
    speed = float(np.hypot(pref[0], pref[1]))
    if speed <= 0.0:
        return out  # parked agent: stay parked
    heading = math.atan2(pref[1], pref[0])
    fractions, angles = _candidate_offsets(params)
    th = heading + angles[None, :]  # (S, A) broadcast below
    sp = speed * fractions[:, None]
    vx = (sp * np.cos(th)).ravel()
    vy = (sp * np.sin(th)).ravel()
    out[2:, 0] = vx
    out[2:, 1] = vy
    return out


def rvo_velocities(positions: np.ndarray, velocities: np.ndarray,
                   preferred: np.ndarray, params: RvoParams) -> np.ndarray:
    """Vectorized RVO step over all agents at once.

    ``positions``/``velocities``/``preferred`` are (n, 2) arrays. Agents whose
    preferred velocity is zero are treated as passive: they keep still and
    approaching agents take full avoidance responsibility for them (otherwise
    half, the reciprocal share). Returns the (n, 2) selected velocities.
    """
    P = np.asarray(positions, dtype=float)
    V = np.asarray(velocities, dtype=float)
    F = np.asarray(preferred, dtype=float)
    n = P.shape[0]
    if n == 0:
        return np.zeros((0, 2))
    if n == 1:
        return F.copy()

    active = np.hypot(F[:, 0], F[:, 1]) > 0.0
    out = F.copy()                                    # passive agents keep still
    movers = np.where(active)[0]
    M = movers.size
    if M == 0:
        return out

    # Candidate fans for the moving agents only: (M, m, 2).
    fractions, angles = _candidate_offsets(params)
    S, A = fractions.size, angles.size
    m = 2 + S * A
    Fm = F[movers]
    speed = np.hypot(Fm[:, 0], Fm[:, 1])              # (M,)
    heading = np.arctan2(Fm[:, 1], Fm[:, 0])
    th = heading[:, None, None] + angles[None, None, :]          # (M, 1, A)
    sp = speed[:, None, None] * fractions[None, :, None]         # (M, S, 1)
    C = np.zeros((M, m, 2))
    C[:, 0] = Fm
    C[:, 2:, 0] = (sp * np.cos(th)).reshape(M, S * A)
    C[:, 2:, 1] = (sp * np.sin(th)).reshape(M, S * A)

    diff = P[None, :, :] - P[movers, None, :]         # (M, n, 2): p_j - p_mover
    dist = np.hypot(diff[..., 0], diff[..., 1])
    neighbor = dist <= params.neighbor_radius
    neighbor[np.arange(M), movers] = False
    R = 2.0 * params.agent_radius + params.safety_margin

    # Reciprocity: the test velocity against an active neighbor is
    # v_i + 2 (c - v_i); against a passive one it is c itself.
    scale = np.where(active, 2.0, 1.0)                # 1/alpha per neighbor j
    Vm = V[movers]
    W = Vm[:, None, None, :] + (C[:, :, None, :] - Vm[:, None, None, :]) * scale[None, None, :, None]
    U = W - V[None, None, :, :]                       # (M, m, n, 2) relative test velocity

    # Earliest time the relative motion enters the combined disc of radius R.
    px = diff[:, None, :, 0]
    py = diff[:, None, :, 1]
    ux = U[..., 0]
    uy = U[..., 1]
    a = ux * ux + uy * uy
    radial = ux * px + uy * py                        # > 0: closing on the neighbor
    b = -2.0 * radial
    c = px * px + py * py - R * R
    disc = b * b - 4.0 * a * c
    sqrt_disc = np.sqrt(np.maximum(disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_enter = (-b - sqrt_disc) / (2.0 * a)
        t_exit = (-b + sqrt_disc) / (2.0 * a)
    tau = np.full(a.shape, np.inf)
    overlapping = np.broadcast_to(c <= 0.0, tau.shape)  # already inside the margin disc
    hits = (disc >= 0.0) & (a > 0.0) & (t_exit > 0.0) & ~overlapping
    tau[hits] = np.maximum(t_enter[hits], 0.0)
    # Inside the margin disc only escape counts: approaching candidates are
    # immediate collisions, receding/tangential ones are the way out.
    tau[overlapping & (radial > 0.0)] = 0.0

    tau = np.where(neighbor[:, None, :], tau, np.inf)
    tau_min = tau.min(axis=2)                         # (M, m)

    penalty = np.hypot(C[..., 0] - Fm[:, None, 0], C[..., 1] - Fm[:, None, 1])
    safe = tau_min > params.time_horizon

    for k in range(M):
        if safe[k].any():
            cands = np.where(safe[k], penalty[k], np.inf)
            best = int(np.argmin(cands))
        else:
            # Infeasible instant: take the candidate that collides latest,
            # preferring the one closest to the preferred velocity on ties.
            latest = tau_min[k].max()
            tied = np.where(tau_min[k] >= latest - 1e-12, penalty[k], np.inf)
            best = int(np.argmin(tied))
        out[movers[k]] = C[k, best]
    return out


def rvo_step(agents, params: RvoParams) -> list[np.ndarray]:
    """Convenience wrapper: ``agents`` is a sequence of (pos, current_v,
    preferred_v) triples; returns the selected velocity per agent."""
    if not agents:
        return []
    P = np.array([a[0] for a in agents], dtype=float)
    V = np.array([a[1] for a in agents], dtype=float)
    F = np.array([a[2] for a in agents], dtype=float)
    result = rvo_velocities(P, V, F, params)
    return [result[i].copy() for i in range(len(agents))]


def proximity_governor(positions: np.ndarray, velocities: np.ndarray, dt: float,
                       min_distance: float,
                       bounds: tuple[float, float] | None = None) -> np.ndarray:
    """Hard backstop under the planner: scale velocities down (pairwise,
    symmetrically) so no pair ends the tick closer than ``min_distance`` or,
    if already closer, closer than it started. Scaling a pair to zero always
    satisfies that, so the loop terminates with the invariant intact.

    ``bounds`` replicates the plant's wall clamp, so the check sees the same
    end-of-tick positions the plant will produce.
    """
    n = positions.shape[0]
    if n < 2:
        return velocities
    V = velocities.copy()
    iu = _triu_cache(n)
    cur = positions[:, None, :] - positions[None, :, :]
    dcur = np.hypot(cur[..., 0], cur[..., 1])[iu]
    floor = np.minimum(min_distance, dcur)

    def clamp(p: np.ndarray) -> np.ndarray:
        if bounds is None:
            return p
        return np.clip(p, [0.0, 0.0], [bounds[0], bounds[1]])

    def violations() -> np.ndarray:
        newP = clamp(positions + V * dt)
        diff = newP[:, None, :] - newP[None, :, :]
        dn = np.hypot(diff[..., 0], diff[..., 1])[iu]
        return np.where(dn < floor - 1e-12)[0]

    steps = (0.5, 0.25, 0.125, 0.0)
    for _ in range(8 * n * n):
        bad = violations()
        if bad.size == 0:
            return V
        k = int(bad[0])
        i, j = int(iu[0][k]), int(iu[1][k])
        pi, pj = positions[i], positions[j]
        for s in steps:
            qi = clamp(pi + V[i] * s * dt)
            qj = clamp(pj + V[j] * s * dt)
            if float(np.hypot(*(qi - qj))) >= floor[k] - 1e-12:
                V[i] = V[i] * s
                V[j] = V[j] * s
                break

    # Escalation: freeze every agent still involved in a violation. A frozen
    # pair keeps its current (legal) separation, so this always converges.
    for _ in range(n):
        bad = violations()
        if bad.size == 0:
            break
        for k in bad:
            V[int(iu[0][k])] = 0.0
            V[int(iu[1][k])] = 0.0
    return V
